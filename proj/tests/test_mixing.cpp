#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qlink/errors.hpp"
#include "qlink/mixing.hpp"
#include "qlink/random.hpp"

using namespace qlink;

namespace {

KrausChannel reset_to_zero(std::size_t d) {
  std::vector<Matrix> ks;
  for (std::size_t j = 0; j < d; ++j) {
    Matrix k = Matrix::Zero(d, d);
    k(0, j) = 1;
    ks.push_back(k);
  }
  return KrausChannel(ks);
}

// ρ ↦ (1−q) ρ + q·|0⟩⟨0| Tr ρ on a qubit: eigenvalues 1, 1−q, 1−q, 1−q.
KrausChannel partial_reset(double q) {
  Matrix k0 = Matrix::Identity(2, 2) * std::sqrt(1 - q), k1 = Matrix::Zero(2, 2), k2 = Matrix::Zero(2, 2);
  k1(0, 0) = std::sqrt(q);
  k2(0, 1) = std::sqrt(q);
  return KrausChannel({k0, k1, k2});
}

}  // namespace

TEST(Superop, MatchesKrausAction) {
  Rng rng(1);
  const Matrix u = random_unitary(6, rng);
  std::vector<Matrix> ks{u.block(0, 0, 3, 3), u.block(3, 0, 3, 3)};
  const KrausChannel ch(ks);
  const Superoperator sup(ch);
  const auto rho = random_density({3}, rng);
  EXPECT_LT(max_abs(sup.apply(rho.matrix()) - apply(ch, rho).matrix()), 1e-12);
  EXPECT_LT(max_abs(unvectorize(vectorize(rho.matrix()), 3) - rho.matrix()), 1e-15);
  // Column stacking: vec index = col·d + row.
  EXPECT_EQ(vectorize(rho.matrix())(1), rho.matrix()(1, 0));
}

TEST(Spectrum, ResetMap) {
  const auto rep = to_spectrum(Superoperator(reset_to_zero(3)));
  EXPECT_NEAR(std::abs(rep.eigenvalues[0]), 1.0, 1e-12);
  for (std::size_t i = 1; i < rep.eigenvalues.size(); ++i) EXPECT_LT(std::abs(rep.eigenvalues[i]), 1e-12);
  EXPECT_NEAR(rep.gap, 1.0, 1e-12);
  EXPECT_TRUE(rep.is_mixing);
  EXPECT_NEAR(fixed_point_purity(rep), 1.0, 1e-12);
  EXPECT_TRUE(is_information_draining(rep));
}

TEST(Spectrum, UnitaryNotMixing) {
  Rng rng(3);
  const auto rep = to_spectrum(Superoperator(KrausChannel::unitary(random_unitary(3, rng))));
  EXPECT_FALSE(rep.is_mixing);
  EXPECT_NEAR(rep.gap, 0.0, 1e-10);
  EXPECT_THROW(fixed_point_purity(rep), PreconditionError);
}

TEST(Spectrum, Depolarizing) {
  // Full depolarization to I/d: Kraus |i⟩⟨j|/√d.
  const std::size_t d = 3;
  std::vector<Matrix> ks;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      Matrix k = Matrix::Zero(d, d);
      k(i, j) = 1 / std::sqrt(static_cast<double>(d));
      ks.push_back(k);
    }
  const auto rep = to_spectrum(Superoperator(KrausChannel(ks)));
  EXPECT_NEAR(rep.fixed_point_purity, 1.0 / d, 1e-12);
  EXPECT_FALSE(is_information_draining(rep));
}

TEST(Convergence, ResetOneStep) {
  Rng rng(2);
  const auto d = iterate_convergence(reset_to_zero(2), random_density({2}, rng), 3);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_LT(d[1], 1e-14);
}

TEST(Convergence, HalvingMap) {
  Rng rng(4);
  const auto d = iterate_convergence(partial_reset(0.5), random_density({2}, rng), 30);
  for (std::size_t k = 5; k <= 15; ++k) EXPECT_NEAR(d[k] / d[k - 1], 0.5, 1e-6);
  EXPECT_NEAR(tail_decay_ratio(d), 0.5, 1e-6);
  Rng rng2(5);
  EXPECT_THROW(iterate_convergence(KrausChannel::unitary(random_unitary(2, rng2)), random_density({2}, rng2), 3),
               PreconditionError);
}

TEST(Receiver, OneSiteIsReset) {
  const auto ch = receiver_map(LinkModel::uniform(1, 1.0, 0.0), 1);
  EXPECT_EQ(ch.input_dim(), 3u);
  const auto rep = to_spectrum(Superoperator(ch));
  EXPECT_NEAR(rep.gap, 1.0, 1e-12);
  EXPECT_NEAR(rep.fixed_point_purity, 1.0, 1e-12);
  EXPECT_NEAR(rep.fixed_points[0].matrix()(0, 0).real(), 1.0, 1e-12);
}

TEST(Receiver, FrozenAtZeroTime) {
  const auto ch = receiver_map(LinkModel::uniform(2, 1.0, 0.0), 1);
  Matrix ground = Matrix::Zero(ch.input_dim(), ch.input_dim());
  ground(0, 0) = 1;
  EXPECT_LT(max_abs(apply(ch, DensityOperator(ground)).matrix() - ground), 1e-14);
  EXPECT_FALSE(to_spectrum(Superoperator(ch)).is_mixing);
}

TEST(Receiver, TwoSiteSpectrumAgainstDenseBuild) {
  const double tau = 0.7;
  const auto ch = receiver_map(LinkModel::uniform(2, 1.0, tau), 1);
  // Superoperator assembled from Choi-style unit responses.
  const auto d = static_cast<Eigen::Index>(ch.input_dim());
  Matrix s(d * d, d * d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) {
      Matrix e = Matrix::Zero(d, d);
      e(r, c) = 1;
      Matrix out = Matrix::Zero(d, d);
      for (const Matrix& k : ch.operators()) out += k * e * k.adjoint();
      s.col(c * d + r) = Eigen::Map<Vector>(out.data(), d * d);
    }
  Eigen::ComplexEigenSolver<Matrix> es(s);
  std::vector<double> mods;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mods.push_back(std::abs(es.eigenvalues()(i)));
  std::sort(mods.rbegin(), mods.rend());
  const auto rep = to_spectrum(Superoperator(ch));
  EXPECT_NEAR(rep.gap, 1 - mods[1], 1e-10);
  EXPECT_NEAR(mods[1], std::abs(std::cos(tau)), 1e-10);
  EXPECT_NEAR(rep.fixed_point_purity, 1.0, 1e-10);
}

TEST(Receiver, RandomStartDecay) {
  const double tau = 0.7;
  const auto ch = receiver_map(LinkModel::uniform(2, 1.0, tau), 1);
  Rng rng(9);
  const auto d = iterate_convergence(ch, random_density(ch.input_space(), rng), 40);
  EXPECT_NEAR(tail_decay_ratio(d), std::abs(std::cos(tau)), 1e-3);
}

TEST(Receiver, CompositionMatchesCompose) {
  const auto ch = receiver_map(LinkModel::uniform(2, 1.0, 0.9), 1);
  const auto two = compose(ch, ch, ComposeMode::kSequential);
  Rng rng(1);
  const auto rho = random_density(ch.input_space(), rng);
  EXPECT_LT(max_abs(apply(two, rho).matrix() - apply(ch, apply(ch, rho)).matrix()), 1e-12);
  const Superoperator s1(ch), s2(two);
  EXPECT_LT(max_abs(s1.matrix() * s1.matrix() - s2.matrix()), 1e-12);
}

TEST(Memoryless, OneSiteExact) {
  const auto m = LinkModel::uniform(1, 1.0, 0.0);
  EXPECT_LT(memoryless_distance(m, Schedule({1, 1})), 1e-10);
  const auto single = effective_memoryless(m, 1);
  EXPECT_EQ(single.input_dim(), 2u);
  EXPECT_EQ(single.output_dim(), 3u);
}

TEST(Memoryless, DistanceShrinksWithBudget) {
  const auto m = LinkModel::uniform(2, 1.0, std::numbers::pi / 4);
  const double idle = memoryless_distance(m, Schedule::hypothetical({0, 0}));
  EXPECT_GT(idle, 0.1);
  double prev = idle;
  for (std::size_t b : {1, 2, 4, 8}) {
    const double d = memoryless_distance(m, Schedule::uniform(2, b));
    EXPECT_LE(d, prev + 1e-12) << "m_k=" << b;
    prev = d;
  }
}
