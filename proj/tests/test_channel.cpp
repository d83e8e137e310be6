#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qlink/channel.hpp"
#include "qlink/errors.hpp"
#include "qlink/random.hpp"

using namespace qlink;

namespace {

const double kR = 1 / std::sqrt(2.0);

KrausChannel dephasing(double p = 0.5) {
  return KrausChannel({std::sqrt(p) * Matrix::Identity(2, 2), std::sqrt(1 - p) * oracle::pauli('Z')});
}

KrausChannel reset() {
  Matrix k0 = Matrix::Zero(2, 2), k1 = Matrix::Zero(2, 2);
  k0(0, 0) = 1;
  k1(0, 1) = 1;
  return KrausChannel({k0, k1});
}

UnitaryDilation random_dilation(std::size_t d, std::size_t dy, Rng& rng) {
  return UnitaryDilation{random_unitary(static_cast<Eigen::Index>(d * dy), rng), HilbertFactorization{d},
                         StateVector::basis({dy}, 0), Matrix::Identity(dy, dy)};
}

// Choi matrix built straight from U, ω and the environment trace.
Matrix choi_oracle(const UnitaryDilation& dil) {
  const auto d = static_cast<Eigen::Index>(dil.system.total());
  const auto dy = static_cast<Eigen::Index>(dil.env_dim());
  Matrix out = Matrix::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      Vector va = Vector::Zero(d * dy), vb = Vector::Zero(d * dy);
      for (Eigen::Index e = 0; e < dy; ++e) {
        va(a * dy + e) = dil.env_state.amplitudes()(e);
        vb(b * dy + e) = dil.env_state.amplitudes()(e);
      }
      const Vector ua = dil.unitary * va, ub = dil.unitary * vb;
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
          Complex s = 0;
          for (Eigen::Index e = 0; e < dy; ++e) s += ua(i * dy + e) * std::conj(ub(j * dy + e));
          out(a * d + i, b * d + j) = s;
        }
    }
  }
  return out;
}

}  // namespace

TEST(Kraus, IdentityChannel) {
  Rng rng(1);
  const auto rho = random_density({3}, rng);
  EXPECT_LT(max_abs(apply(KrausChannel::identity({3}), rho).matrix() - rho.matrix()), 1e-14);
  EXPECT_EQ(verify_cptp(KrausChannel::identity({3})).residual, 0.0);
}

TEST(Kraus, DephasingPlus) {
  Vector plus(2);
  plus << kR, kR;
  const auto out = apply(dephasing(), StateVector(plus));
  EXPECT_LT(max_abs(out.matrix() - 0.5 * Matrix::Identity(2, 2)), 1e-14);
}

TEST(Kraus, ResetAnyInput) {
  Rng rng(2);
  Matrix zero = Matrix::Zero(2, 2);
  zero(0, 0) = 1;
  for (int t = 0; t < 5; ++t) {
    EXPECT_LT(max_abs(apply(reset(), random_density({2}, rng)).matrix() - zero), 1e-14);
  }
}

TEST(Kraus, CptpResidual) {
  const KrausChannel shrunk({0.9 * Matrix::Identity(2, 2)});
  const auto rep = verify_cptp(shrunk);
  EXPECT_NEAR(rep.residual, 0.19, 1e-12);
  EXPECT_FALSE(rep.passes);
  EXPECT_THROW(apply(shrunk, DensityOperator::maximally_mixed({2})), PreconditionError);
}

TEST(Kraus, DimensionMismatchThrows) {
  EXPECT_THROW(apply(dephasing(), DensityOperator::maximally_mixed({3})), DimensionError);
  EXPECT_THROW(KrausChannel({Matrix::Identity(2, 2), Matrix::Identity(3, 3)}), DimensionError);
}

TEST(Dilation, IdentityGivesIdentityKraus) {
  const UnitaryDilation dil{Matrix::Identity(4, 4), HilbertFactorization{2}, StateVector::basis({2}, 0),
                            Matrix::Identity(2, 2)};
  const auto ch = dilation_to_kraus(dil);
  ASSERT_EQ(ch.env_dim(), 1u);
  EXPECT_LT(max_abs(ch.operators()[0] - Matrix::Identity(2, 2)), 1e-14);
  EXPECT_EQ(dilation_to_kraus(dil, PruneZeros::kNo).env_dim(), 2u);
}

TEST(Dilation, SwapIsReset) {
  Matrix swap = Matrix::Zero(4, 4);
  swap(0, 0) = swap(3, 3) = 1;
  swap(1, 2) = swap(2, 1) = 1;
  UnitaryDilation dil{swap, HilbertFactorization{2}, StateVector::basis({2}, 0), Matrix::Identity(2, 2)};
  EXPECT_LT(choi_distance(dilation_to_kraus(dil), reset()), 1e-12);
}

TEST(Dilation, RandomChoiAgreesWithOracle) {
  Rng rng(7);
  const auto dil = random_dilation(3, 2, rng);
  const auto ch = dilation_to_kraus(dil);
  EXPECT_LT(hermitian_operator_norm(choi(ch) - choi_oracle(dil)), 1e-10);
  EXPECT_LT(hermitian_operator_norm(choi(dil) - choi_oracle(dil)), 1e-10);
  EXPECT_LE(verify_cptp(ch).residual, 1e-12);
}

TEST(Dilation, NonUnitaryRejected) {
  UnitaryDilation dil{2.0 * Matrix::Identity(4, 4), HilbertFactorization{2}, StateVector::basis({2}, 0),
                      Matrix::Identity(2, 2)};
  EXPECT_THROW(dilation_to_kraus(dil), PreconditionError);
}

TEST(Dilation, RoundTrips) {
  Rng rng(5);
  EXPECT_LT(choi_distance(dilation_to_kraus(kraus_to_dilation(dephasing(0.3))), dephasing(0.3)), 1e-10);
  const double g = 0.4;
  Matrix a0 = Matrix::Zero(2, 2), a1 = Matrix::Zero(2, 2);
  a0(0, 0) = 1;
  a0(1, 1) = std::sqrt(1 - g);
  a1(0, 1) = std::sqrt(g);
  const KrausChannel damp({a0, a1});
  const auto dil = kraus_to_dilation(damp);
  EXPECT_LT(dil.residual(), 1e-10);
  EXPECT_LT(choi_distance(dilation_to_kraus(dil), damp), 1e-10);
  const Matrix v = random_unitary(3, rng);
  const auto udil = kraus_to_dilation(KrausChannel::unitary(v));
  EXPECT_LT(choi_distance(dilation_to_kraus(udil), KrausChannel::unitary(v)), 1e-10);
}

TEST(Compose, SequentialAndParallel) {
  Rng rng(4);
  const auto ch = dilation_to_kraus(random_dilation(2, 3, rng));
  EXPECT_LT(choi_distance(compose(KrausChannel::identity({2}), ch, ComposeMode::kSequential), ch), 1e-12);
  EXPECT_LT(choi_distance(compose(KrausChannel::identity({2}), KrausChannel::identity({2}), ComposeMode::kParallel),
                          KrausChannel::identity({2, 2})),
            1e-12);
  // Dephasing twice: off-diagonals scale by (2p−1)².
  const double p = 0.8;
  const auto twice = compose(dephasing(p), dephasing(p), ComposeMode::kSequential);
  const auto rho = random_density({2}, rng);
  Matrix hand = rho.matrix();
  hand(0, 1) *= (2 * p - 1) * (2 * p - 1);
  hand(1, 0) *= (2 * p - 1) * (2 * p - 1);
  EXPECT_LT(max_abs(apply(twice, rho).matrix() - hand), 1e-12);
}

TEST(Family, MemorylessConsistent) {
  const auto fam = memoryless_family(dephasing(0.3));
  EXPECT_TRUE(marginal_consistency(fam, 2, 1e-10));
  EXPECT_TRUE(marginal_consistency(fam, 3, 1e-10));
}

TEST(Family, WrongOrderingDetected) {
  Rng rng(6);
  const Matrix u = random_unitary(4, rng);
  const auto good = finite_memory_family(u, 2, 2);
  EXPECT_TRUE(marginal_consistency(good, 2, 1e-9));
  // Claiming the first output factor is the newest use breaks the marginal.
  const MultiUseFamily bad([u](std::size_t n) { return finite_memory_channel(u, 2, 2, n); }, 2,
                           [](std::size_t) { return std::vector<std::size_t>{0}; });
  EXPECT_FALSE(marginal_consistency(bad, 2, 1e-6));
}

TEST(Family, PmRates) {
  Rng rng(3);
  const auto fm = finite_memory_family(random_unitary(4, rng), 2, 2);
  const auto r = pm_rate(fm, 4);
  for (std::size_t n = 1; n <= 4; ++n) EXPECT_NEAR(r[n - 1], 1.0 / static_cast<double>(n), 1e-12);
  const auto ml = memoryless_family(dephasing(0.3));
  for (double x : pm_rate(ml, 3)) EXPECT_NEAR(x, 1.0, 1e-12);
}

TEST(Channel, RandomDilationSweep) {
  Rng rng(2024);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 2 + t % 5, dy = 1 + t % 4;
    const auto dil = random_dilation(d, dy, rng);
    const auto ch = dilation_to_kraus(dil);
    EXPECT_LE(verify_cptp(ch).residual, 1e-10);
    EXPECT_LE(choi_distance(dilation_to_kraus(kraus_to_dilation(ch)), ch), 1e-9);
  }
}
