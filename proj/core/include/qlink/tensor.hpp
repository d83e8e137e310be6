#pragma once

// Dense complex linear algebra over explicitly factorized Hilbert spaces.
//
// Subsystem ordering convention: factor 0 is the slowest-varying index, i.e.
// the leftmost slot of a tensor product. A basis index of a space with factors
// (d0, d1, ..., dk) is i0*(d1*...*dk) + i1*(d2*...*dk) + ... + ik.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qlink {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

namespace tol {
inline constexpr double kStructural = 1e-10;
inline constexpr double kArithmetic = 1e-12;
}  // namespace tol

class HilbertFactorization {
 public:
  // Empty factorization: the one-dimensional (scalar) space.
  HilbertFactorization() = default;
  explicit HilbertFactorization(std::vector<std::size_t> factors);
  HilbertFactorization(std::initializer_list<std::size_t> factors);

  static HilbertFactorization uniform(std::size_t dim, std::size_t count);

  const std::vector<std::size_t>& factors() const noexcept { return factors_; }
  std::size_t factor(std::size_t i) const { return factors_.at(i); }
  std::size_t count() const noexcept { return factors_.size(); }
  std::size_t total() const noexcept { return total_; }

  // Factors at the given indices, in the order given.
  HilbertFactorization subset(std::span<const std::size_t> indices) const;
  // this ⊗ other.
  HilbertFactorization concat(const HilbertFactorization& other) const;

  // Multi-index <-> flat index under the slowest-first convention.
  std::vector<std::size_t> unflatten(std::size_t index) const;
  std::size_t flatten(std::span<const std::size_t> digits) const;

  friend bool operator==(const HilbertFactorization&, const HilbertFactorization&) = default;

 private:
  std::vector<std::size_t> factors_;
  std::size_t total_ = 1;
};

class StateVector {
 public:
  // Single-factor space of the vector's length.
  explicit StateVector(Vector amplitudes);
  StateVector(Vector amplitudes, HilbertFactorization space);

  static StateVector basis(const HilbertFactorization& space, std::size_t index);

  const Vector& amplitudes() const noexcept { return amplitudes_; }
  const HilbertFactorization& space() const noexcept { return space_; }
  std::size_t dim() const noexcept { return space_.total(); }

  double norm() const { return amplitudes_.norm(); }
  bool is_normalized(double tolerance = tol::kArithmetic) const;
  StateVector normalized() const;

 private:
  Vector amplitudes_;
  HilbertFactorization space_;
};

StateVector tensor_product(const StateVector& a, const StateVector& b);
// Overlap <a|b>.
Complex inner(const StateVector& a, const StateVector& b);

class DensityOperator {
 public:
  explicit DensityOperator(Matrix matrix);
  DensityOperator(Matrix matrix, HilbertFactorization space);

  static DensityOperator pure(const StateVector& psi);
  static DensityOperator maximally_mixed(const HilbertFactorization& space);

  const Matrix& matrix() const noexcept { return matrix_; }
  const HilbertFactorization& space() const noexcept { return space_; }
  std::size_t dim() const noexcept { return space_.total(); }

  Complex trace() const { return matrix_.trace(); }
  double hermiticity_residual() const;
  double min_eigenvalue() const;
  double purity() const;

  // Hermitian, unit trace, eigenvalues >= -tolerance.
  bool is_valid(double tolerance = tol::kStructural) const;

  // Spectrum with eigenvalues in [-kClampFloor, 0) clamped to zero.
  // Throws PreconditionError when an eigenvalue lies below the floor.
  std::vector<double> clamped_eigenvalues() const;
  // Diagonal populations in the computational basis, clamped the same way.
  std::vector<double> basis_probabilities() const;

  static constexpr double kClampFloor = 1e-10;

 private:
  Matrix matrix_;
  HilbertFactorization space_;
};

DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b);

struct SchmidtData {
  std::vector<double> coefficients;  // nonincreasing, squares sum to 1
  std::vector<StateVector> left_vectors;
  std::vector<StateVector> right_vectors;

  std::size_t rank() const noexcept { return coefficients.size(); }
  // Σ c_j |l_j⟩⊗|r_j⟩ with the left factors placed first.
  Vector reconstruct() const;
};

struct PolarDecomposition {
  Matrix unitary;   // unitary (square input) or isometry (tall input)
  Matrix positive;  // positive semidefinite, columns x columns
};

// Kronecker product a ⊗ b with the slowest-first layout.
Matrix tensor_product(const Matrix& a, const Matrix& b);

// Reduced operator on the kept factors, in their original relative order.
DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::size_t> keep);
DensityOperator partial_trace(const DensityOperator& rho, std::initializer_list<std::size_t> keep);

// exp(-i h t) for Hermitian h, via eigendecomposition.
Matrix herm_exp(const Matrix& h, double t, double hermiticity_tolerance = tol::kStructural);

// f·p = unitary·positive. Rank-deficient inputs receive the unitary completion
// supplied by the full SVD.
PolarDecomposition polar_decompose(const Matrix& f, const Matrix& p);

// Schmidt decomposition across (left | right); the two index sets must
// partition the factors of psi.space().
SchmidtData schmidt(const StateVector& psi, std::span<const std::size_t> left,
                    std::span<const std::size_t> right, double cutoff = 1e-14);

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const DensityOperator& rho, const DensityOperator& sigma);
// ⟨ψ|ρ|ψ⟩, the Uhlmann fidelity when one argument is pure.
double fidelity(const StateVector& psi, const DensityOperator& rho);

// (1/2)||rho - sigma||_1.
double trace_distance(const DensityOperator& rho, const DensityOperator& sigma);

// Largest singular value.
double operator_norm(const Matrix& a);
// Largest absolute eigenvalue of a Hermitian matrix (operator norm, cheaper).
double hermitian_operator_norm(const Matrix& a);
double max_abs(const Matrix& a);

Matrix sqrt_psd(const Matrix& a);

// Reorders the factors of a state: result factor i is input factor order[i].
StateVector permute_factors(const StateVector& psi, std::span<const std::size_t> order);

// Orthonormal basis for the orthogonal complement of the column span of an
// orthonormal `basis` (dim x r), obtained from a Householder QR.
Matrix orthonormal_complement(const Matrix& basis);

}  // namespace qlink
