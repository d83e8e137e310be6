#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qlink/errors.hpp"
#include "qlink/random.hpp"
#include "qlink/tensor.hpp"

using namespace qlink;

namespace {
StateVector ket(std::initializer_list<Complex> amps) {
  Vector v(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index i = 0;
  for (Complex a : amps) v(i++) = a;
  return StateVector(v);
}
}  // namespace

TEST(Tensor, KroneckerIdentity) {
  EXPECT_LT(max_abs(tensor_product(Matrix::Identity(2, 2), Matrix::Identity(2, 2)) - Matrix::Identity(4, 4)), 1e-15);
}

TEST(Tensor, BasisProductIndex) {
  const auto s = tensor_product(StateVector::basis({2}, 0), StateVector::basis({2}, 1));
  EXPECT_EQ(s.space().factors(), (std::vector<std::size_t>{2, 2}));
  EXPECT_NEAR(std::abs(s.amplitudes()(1)), 1.0, 1e-15);
}

TEST(Tensor, XZOnZeroZero) {
  const Matrix xz = tensor_product(oracle::pauli('X'), oracle::pauli('Z'));
  Matrix hand = Matrix::Zero(4, 4);
  hand(2, 0) = 1;
  hand(3, 1) = -1;
  hand(0, 2) = 1;
  hand(1, 3) = -1;
  EXPECT_LT(max_abs(xz - hand), 1e-15);
  const Vector out = xz * StateVector::basis({2, 2}, 0).amplitudes();
  EXPECT_NEAR(std::abs(out(2)), 1.0, 1e-15);
}

TEST(Tensor, FlattenRoundTrip) {
  const HilbertFactorization h{2, 3, 4};
  for (std::size_t i = 0; i < h.total(); ++i) EXPECT_EQ(h.flatten(h.unflatten(i)), i);
  EXPECT_EQ(h.flatten(std::vector<std::size_t>{1, 2, 3}), 1u * 12 + 2 * 4 + 3);
}

TEST(Tensor, NonNormalizedStateRejected) {
  Vector v(2);
  v << 1.0, 1.0;
  EXPECT_FALSE(StateVector(v).is_normalized());
  EXPECT_TRUE(StateVector(v).normalized().is_normalized());
}

TEST(PartialTrace, BellMarginal) {
  const double r = 1 / std::sqrt(2.0);
  const StateVector bell(Vector(Vector::Map(std::vector<Complex>{r, 0, 0, r}.data(), 4)), {2, 2});
  const auto rho = partial_trace(DensityOperator::pure(bell), {0});
  EXPECT_LT(max_abs(rho.matrix() - 0.5 * Matrix::Identity(2, 2)), 1e-12);
}

TEST(PartialTrace, ProductKeepsFactor) {
  Rng rng(3);
  const auto a = random_density({3}, rng), b = random_density({2}, rng);
  EXPECT_LT(max_abs(partial_trace(tensor_product(a, b), {0}).matrix() - a.matrix()), 1e-12);
  EXPECT_LT(max_abs(partial_trace(tensor_product(a, b), {1}).matrix() - b.matrix()), 1e-12);
}

TEST(PartialTrace, MatchesIndexLoops) {
  Rng rng(11);
  const auto psi = random_state({2, 2, 2}, rng);
  const auto rho = DensityOperator::pure(psi);
  EXPECT_LT(max_abs(partial_trace(rho, {0, 2}).matrix() - oracle::trace_middle_out(rho.matrix(), 2, 2, 2, true)), 1e-12);
  EXPECT_LT(max_abs(partial_trace(rho, {1}).matrix() - oracle::trace_middle_out(rho.matrix(), 2, 2, 2, false)), 1e-12);
  Rng rng2(12);
  const auto mixed = random_density({2, 3, 2}, rng2);
  EXPECT_LT(max_abs(partial_trace(mixed, {1}).matrix() - oracle::trace_middle_out(mixed.matrix(), 2, 3, 2, false)), 1e-12);
}

TEST(PartialTrace, EverythingLeavesTrace) {
  Rng rng(5);
  const auto rho = random_density({2, 3}, rng);
  EXPECT_NEAR(std::abs(partial_trace(rho, {}).matrix()(0, 0) - 1.0), 0.0, 1e-12);
}

TEST(PartialTrace, BadIndexThrows) {
  const auto rho = DensityOperator::maximally_mixed({2, 2});
  EXPECT_THROW(partial_trace(rho, {2}), DimensionError);
}

TEST(HermExp, ZeroIsIdentity) {
  EXPECT_LT(max_abs(herm_exp(Matrix::Zero(3, 3), 1.3) - Matrix::Identity(3, 3)), 1e-15);
}

TEST(HermExp, PauliAgainstTaylor) {
  const Matrix x = oracle::pauli('X'), z = oracle::pauli('Z');
  EXPECT_LT(max_abs(herm_exp(x, std::numbers::pi / 2) - Complex(0, -1) * x), 1e-12);
  EXPECT_LT(max_abs(herm_exp(x, std::numbers::pi / 2) - oracle::taylor_exp(x, std::numbers::pi / 2)), 1e-12);
  EXPECT_LT(max_abs(herm_exp(z, std::numbers::pi) + Matrix::Identity(2, 2)), 1e-12);
  EXPECT_LT(max_abs(herm_exp(z, std::numbers::pi) - oracle::taylor_exp(z, std::numbers::pi)), 1e-12);
}

TEST(HermExp, RandomHermitianUnitary) {
  Rng rng(9);
  const Matrix h = random_hermitian(6, rng);
  const Matrix u = herm_exp(h, 0.7);
  EXPECT_LT(max_abs(u.adjoint() * u - Matrix::Identity(6, 6)), 1e-12);
  EXPECT_LT(max_abs(u - oracle::expm(h, 0.7)), 1e-10);
}

TEST(HermExp, NonHermitianThrows) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  EXPECT_THROW(herm_exp(a, 1.0), PreconditionError);
}

TEST(Polar, ScaledIdentity) {
  const auto pd = polar_decompose(2.0 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  EXPECT_LT(max_abs(pd.unitary - Matrix::Identity(2, 2)), 1e-12);
  EXPECT_LT(max_abs(pd.positive - 2.0 * Matrix::Identity(2, 2)), 1e-12);
}

TEST(Polar, UnitaryInput) {
  Rng rng(1);
  const Matrix v = random_unitary(3, rng);
  EXPECT_LT(max_abs(polar_decompose(v, Matrix::Identity(3, 3)).unitary - v), 1e-12);
}

TEST(Polar, SingularValues) {
  Rng rng(2);
  const Matrix u = random_unitary(2, rng), w = random_unitary(2, rng);
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = 0.5;
  const Matrix f = u * s * w.adjoint();
  const auto pd = polar_decompose(f, Matrix::Identity(2, 2));
  Eigen::SelfAdjointEigenSolver<Matrix> es(pd.positive);
  EXPECT_NEAR(es.eigenvalues()(0), 0.5, 1e-12);
  EXPECT_NEAR(es.eigenvalues()(1), 1.0, 1e-12);
  EXPECT_LT(max_abs(pd.unitary * pd.positive - f), 1e-12);
}

TEST(Schmidt, BellAndProduct) {
  const double r = 1 / std::sqrt(2.0);
  const StateVector bell(Vector(Vector::Map(std::vector<Complex>{r, 0, 0, r}.data(), 4)), {2, 2});
  const std::vector<std::size_t> l{0}, rr{1};
  const auto sd = schmidt(bell, l, rr);
  ASSERT_EQ(sd.rank(), 2u);
  EXPECT_NEAR(sd.coefficients[0], r, 1e-12);
  EXPECT_NEAR(sd.coefficients[1], r, 1e-12);
  const auto prod = tensor_product(StateVector::basis({2}, 1), StateVector::basis({3}, 2));
  EXPECT_EQ(schmidt(prod, l, rr).rank(), 1u);
}

TEST(Schmidt, MatchesReshapedSvd) {
  Rng rng(4);
  const auto psi = random_state({2, 3}, rng);
  Matrix reshaped(2, 3);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 3; ++b) reshaped(a, b) = psi.amplitudes()(a * 3 + b);
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Matrix>(reshaped).singularValues();
  const std::vector<std::size_t> l{0}, r{1};
  const auto sd = schmidt(psi, l, r);
  ASSERT_EQ(sd.rank(), 2u);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(sd.coefficients[i], sv(i), 1e-12);
  EXPECT_LT((sd.reconstruct() - psi.amplitudes()).norm(), 1e-12);
}

TEST(Fidelity, Basics) {
  Rng rng(8);
  const auto rho = random_density({3}, rng);
  EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-9);
  const auto zero = DensityOperator::pure(ket({1, 0})), one = DensityOperator::pure(ket({0, 1}));
  EXPECT_NEAR(fidelity(zero, one), 0.0, 1e-12);
  const double r = 1 / std::sqrt(2.0);
  EXPECT_NEAR(fidelity(zero, DensityOperator::pure(ket({r, r}))), 0.5, 1e-12);
  EXPECT_NEAR(fidelity(ket({1, 0}), DensityOperator::pure(ket({r, r}))), 0.5, 1e-12);
}

TEST(TraceDistance, OrthogonalPure) {
  const auto zero = DensityOperator::pure(ket({1, 0})), one = DensityOperator::pure(ket({0, 1}));
  EXPECT_NEAR(trace_distance(zero, one), 1.0, 1e-12);
  EXPECT_NEAR(trace_distance(zero, zero), 0.0, 1e-12);
}

TEST(Density, ClampFloor) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0 + 1e-11;
  m(1, 1) = -1e-11;
  EXPECT_EQ(DensityOperator(m).clamped_eigenvalues()[0], 0.0);
  m(0, 0) = 1.1;
  m(1, 1) = -0.1;
  EXPECT_THROW(DensityOperator(m).clamped_eigenvalues(), PreconditionError);
}
