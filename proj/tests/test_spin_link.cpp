#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qlink/channel.hpp"
#include "qlink/errors.hpp"
#include "qlink/random.hpp"
#include "qlink/spin_link.hpp"

using namespace qlink;

namespace {

constexpr double kPi = std::numbers::pi;

// Restriction of a full-space operator to the simulator's sector.
Matrix restrict(const Matrix& full, const SectorBasis& b) {
  Matrix out(b.size(), b.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out(i, j) = full(b.full_index(i), b.full_index(j));
  return out;
}

double leak(const Matrix& full, const SectorBasis& b) {
  // Column weight that leaves the sector.
  double worst = 0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    double inside = 0;
    for (std::size_t i = 0; i < b.size(); ++i) inside += std::norm(full(b.full_index(i), b.full_index(j)));
    worst = std::max(worst, std::abs(full.col(b.full_index(j)).squaredNorm() - inside));
  }
  return worst;
}

std::size_t brute_sector_size(std::size_t regs, std::size_t spins, std::size_t n) {
  std::size_t dr = 1, count = 0;
  for (std::size_t r = 0; r < regs; ++r) dr *= 3;
  for (std::size_t ri = 0; ri < dr; ++ri) {
    std::size_t z = 0;
    for (std::size_t t = ri, r = 0; r < regs; ++r, t /= 3) z += (t % 3) != 2;
    for (std::size_t m = 0; m < (std::size_t{1} << spins); ++m) count += z + popcount(m) == n;
  }
  return count;
}

}  // namespace

TEST(Hamiltonian, MatchesPauliSum) {
  for (std::size_t n : {1, 2, 3}) {
    auto m = LinkModel::uniform(n, 1.3, 0.4);
    if (n == 3) m.couplings[1] = {0.7, 1.9};
    EXPECT_LT(max_abs(build_hamiltonian(m) - oracle::hamiltonian(m)), 1e-14) << "N=" << n;
  }
}

TEST(Hamiltonian, NoBondsIsZero) {
  EXPECT_LT(max_abs(build_hamiltonian(LinkModel::uniform(1, 1.0, 0.5))), 1e-15);
}

TEST(Hamiltonian, TwoSiteSingleExcitation) {
  const double j = 0.9;
  const auto m = LinkModel::uniform(2, j, 0.0, 1);
  const Matrix h = build_hamiltonian(m, mediator_configs(2, 1));
  Matrix hand(2, 2);
  hand << -j / 2, j, j, -j / 2;
  EXPECT_LT(max_abs(h - hand), 1e-15);
}

TEST(Hamiltonian, ThreeSiteSpectrum) {
  const auto m = LinkModel::uniform(3, 1.0, 0.0, 1);
  const Matrix h1 = build_hamiltonian(m, mediator_configs(3, 1));
  Eigen::SelfAdjointEigenSolver<Matrix> sector(h1), dense(oracle::hamiltonian(m));
  // Every single-excitation eigenvalue appears in the dense spectrum.
  for (Eigen::Index i = 0; i < 3; ++i) {
    double best = 1e9;
    for (Eigen::Index k = 0; k < 8; ++k) best = std::min(best, std::abs(dense.eigenvalues()(k) - sector.eigenvalues()(i)));
    EXPECT_LT(best, 1e-12);
  }
  EXPECT_THROW(build_hamiltonian(m, {0b100}), DimensionError);
}

TEST(Sector, OneSiteExample) {
  const auto m = LinkModel::uniform(1, 1.0, 0.0);
  const SectorBasis b(m, 2, 1);
  EXPECT_EQ(b.size(), 6u);
  EXPECT_EQ(sector_dimension(m, 2, 1), 6u);
  EXPECT_EQ(SectorBasis(m, 2, 0).size(), 1u);
  EXPECT_EQ(SectorBasis(m, 2, 0).config(0).registers, (std::vector<std::uint8_t>{kEmpty, kEmpty}));
}

TEST(Sector, MatchesBruteForce) {
  const auto m = LinkModel::uniform(2, 1.0, 0.0);
  for (std::size_t regs : {2, 3, 4}) {
    EXPECT_EQ(SectorBasis(m, regs, 2).size(), brute_sector_size(regs, 4, 2));
    EXPECT_EQ(sector_dimension(m, regs, 2), brute_sector_size(regs, 4, 2));
  }
  const SectorBasis b(m, 3, 2);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(b.index_of(b.config(i)), i);
    EXPECT_EQ(b.full_index(i), (encode_registers(b.config(i).registers) << 4) | b.mediator(i));
  }
}

TEST(Registers, EncodeDecode) {
  const std::vector<std::uint8_t> d{kOne, kEmpty, kZero};
  EXPECT_EQ(encode_registers(d), 1u * 9 + 2 * 3 + 0);
  EXPECT_EQ(decode_registers(encode_registers(d), 3), d);
}

TEST(Schedule, RejectsZeroBudget) {
  EXPECT_THROW(Schedule({1, 0}), PreconditionError);
  EXPECT_NO_THROW(Schedule::hypothetical({1, 0}));
  const Schedule s({2, 3});
  EXPECT_EQ(s.total(), 5u);
  EXPECT_EQ(s.offset(1), 2u);
}

TEST(Gates, AliceGateMovesExcitation) {
  const auto m = LinkModel::uniform(2, 1.0, 0.3);
  const LinkSimulator sim(m, Schedule({1}));
  Vector msg = Vector::Zero(2);
  msg(0) = 1;
  Vector v = sim.initial_state(msg);
  sim.alice_gate(v, 0);
  const auto& b = sim.basis();
  const auto idx = b.index_of(Configuration{{kEmpty, kEmpty}, std::uint64_t{1} << 3});
  ASSERT_TRUE(idx);
  EXPECT_NEAR(std::abs(v(*idx)), 1.0, 1e-15);
  sim.alice_gate(v, 0);
  EXPECT_LT((v - sim.initial_state(msg)).norm(), 1e-15);
}

TEST(Gates, BlockedWhenSpinOccupied) {
  const auto m = LinkModel::uniform(1, 1.0, 0.0);
  const LinkSimulator sim(m, Schedule({1, 1}));
  // a_1 = 0 with chain-0 spin already up: the gate does nothing.
  const auto idx = sim.basis().index_of(Configuration{{kZero, kEmpty, kEmpty, kEmpty}, 0b10});
  ASSERT_TRUE(idx);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(sim.dim()));
  v(*idx) = 1;
  const Vector before = v;
  sim.alice_gate(v, 0);
  EXPECT_LT((v - before).norm(), 1e-15);
}

TEST(Gates, Involutions) {
  const LinkSimulator sim(LinkModel::uniform(2, 1.0, 0.5), Schedule({2, 1}));
  for (std::size_t k = 0; k < 2; ++k) {
    const Matrix g = sim.alice_gate_matrix(k);
    EXPECT_LT(max_abs(g * g - Matrix::Identity(g.rows(), g.cols())), 1e-15);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    const Matrix g = sim.bob_gate_matrix(j);
    EXPECT_LT(max_abs(g * g - Matrix::Identity(g.rows(), g.cols())), 1e-15);
  }
}

TEST(Evolution, VkAndW) {
  const LinkSimulator sim(LinkModel::uniform(2, 1.0, 0.7), Schedule({1}));
  EXPECT_LT(max_abs(sim.v_matrix(0) - sim.bob_gate_matrix(0) * sim.free_matrix()), 1e-14);
  EXPECT_LT(max_abs(sim.w_matrix() - sim.v_matrix(0) * sim.alice_gate_matrix(0)), 1e-14);
  const LinkSimulator idle(LinkModel::uniform(2, 1.0, 0.0), Schedule({2}));
  EXPECT_LT(max_abs(idle.v_matrix(0) - idle.bob_gate_matrix(1) * idle.bob_gate_matrix(0)), 1e-14);
  const LinkSimulator one(LinkModel::uniform(1, 1.0, 0.4), Schedule({2}));
  const Matrix prod = one.bob_gate_matrix(1) * one.free_matrix() * one.bob_gate_matrix(0) * one.free_matrix();
  EXPECT_LT(max_abs(one.v_matrix(0) - prod), 1e-12);
}

TEST(Evolution, MatchesDenseOracle) {
  struct Case {
    std::size_t sites;
    double tau;
    std::vector<std::size_t> budgets;
  };
  for (const Case& c : {Case{1, 0.3, {1, 1}}, Case{1, 0.5, {2, 1}}, Case{2, 0.7, {1}}, Case{2, 0.9, {2}}, Case{3, 1.1, {1}}}) {
    auto m = LinkModel::uniform(c.sites, 1.0, c.tau);
    if (c.sites > 1) m.couplings[1][0] = 0.8;
    const LinkSimulator sim(m, Schedule(c.budgets));
    const Matrix full = oracle::full_w(m, c.budgets);
    EXPECT_LT(max_abs(sim.w_matrix() - restrict(full, sim.basis())), 1e-12) << "N=" << c.sites;
    EXPECT_LT(leak(full, sim.basis()), 1e-12);
  }
}

TEST(Evolution, UnitaryAndConserving) {
  const LinkSimulator sim(LinkModel::uniform(3, 1.0, 0.8), Schedule({1, 2}));
  const Matrix w = sim.w_matrix();
  EXPECT_LT(max_abs(w.adjoint() * w - Matrix::Identity(w.rows(), w.cols())), 1e-10);
  const RealVector z = sim.total_excitations();
  EXPECT_LT((z.array() - 2.0).abs().maxCoeff(), 1e-15);
  Rng rng(2);
  const Vector psi = random_state(HilbertFactorization::uniform(2, 2), rng).amplitudes();
  Vector v = sim.initial_state(psi);
  sim.apply_w(v);
  EXPECT_NEAR(v.cwiseAbs2().dot(z), 2.0, 1e-12);
  EXPECT_LT((v - w * sim.initial_state(psi)).norm(), 1e-12);
}

TEST(Channels, OneSitePerfectTransfer) {
  const auto m = LinkModel::uniform(1, 1.0, 0.0);
  const Schedule s({1});
  const auto ab = channel_a_to_ab(m, s);
  EXPECT_EQ(ab.env_dim(), 1u);
  const auto b = channel_a_to_b(m, s);
  const auto out = apply(b, StateVector::basis({2}, 0));
  EXPECT_NEAR(out.matrix()(0, 0).real(), 1.0, 1e-12);
}

TEST(Channels, NoTimeNoArrival) {
  const auto out = apply(channel_a_to_b(LinkModel::uniform(2, 1.0, 0.0), Schedule({1})), StateVector::basis({2}, 1));
  EXPECT_NEAR(out.matrix()(2, 2).real(), 1.0, 1e-12);
}

TEST(Channels, TracingBobMatches) {
  const auto m = LinkModel::uniform(2, 1.0, 0.6);
  const Schedule s({1, 1});
  Rng rng(5);
  const auto rho = random_density(HilbertFactorization::uniform(2, 2), rng);
  const auto full = apply(channel_a_to_ab(m, s), rho);
  const auto traced = partial_trace(full, {0, 1});
  EXPECT_LT(max_abs(traced.matrix() - apply(channel_a_to_a(m, s), rho).matrix()), 1e-12);
  EXPECT_LT(max_abs(partial_trace(full, {2, 3}).matrix() - apply(channel_a_to_b(m, s), rho).matrix()), 1e-12);
}

TEST(Channels, MatchesDenseTrace) {
  // Λ_{A→AB} from the full joint unitary, mediator traced by hand.
  const auto m = LinkModel::uniform(2, 1.0, 0.9);
  const std::vector<std::size_t> budgets{1};
  const Matrix w = oracle::full_w(m, budgets);
  Vector x = Vector::Zero(2);
  x << 0.6, Complex(0, 0.8);
  const std::size_t dm = 16;
  Vector in = Vector::Zero(9 * dm);
  in((0 * 3 + 2) * dm) = x(0);
  in((1 * 3 + 2) * dm) = x(1);
  const Vector out = w * in;
  Matrix rho = Matrix::Zero(9, 9);
  for (std::size_t a = 0; a < 9; ++a)
    for (std::size_t b = 0; b < 9; ++b)
      for (std::size_t mu = 0; mu < dm; ++mu) rho(a, b) += out(a * dm + mu) * std::conj(out(b * dm + mu));
  const auto got = apply(channel_a_to_ab(m, Schedule(budgets)), StateVector(x));
  EXPECT_LT(max_abs(got.matrix() - rho), 1e-12);
}

TEST(Channels, MarginalConsistency) {
  for (std::size_t sites : {1, 2, 3}) {
    const auto fam = link_family(LinkModel::uniform(sites, 1.0, 0.8), 1);
    EXPECT_LE(marginal_deviation(fam, 2), 1e-9) << "N=" << sites;
    EXPECT_EQ(fam.env_dim(2), std::size_t{1} << (2 * sites));
  }
}

TEST(Channels, PmRateNumerator) {
  const auto fam = link_family(LinkModel::uniform(2, 1.0, 0.8), 1);
  const auto r = pm_rate(fam, 3);
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_NEAR(r[n - 1] * static_cast<double>(n), 4.0, 1e-12);
}

TEST(Channels, TwoSiteTransferProbability) {
  for (double jt : {kPi / 4, kPi / 2, 0.3}) {
    for (std::size_t m : {1, 2, 3}) {
      const auto out =
          apply(channel_a_to_b(LinkModel::uniform(2, 1.0, jt), Schedule({m})), StateVector::basis({2}, 0));
      // All Bob qutrits hold zero or E; success puts the 0 in one of them.
      const double arrived = 1.0 - out.matrix()(out.dim() - 1, out.dim() - 1).real();
      EXPECT_NEAR(arrived, oracle::pi_two_site(jt, m), 1e-12) << jt << " " << m;
    }
  }
}
