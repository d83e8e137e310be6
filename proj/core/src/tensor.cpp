#include "qlink/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qlink/errors.hpp"

namespace qlink {

// ---------------------------------------------------------------------------
// HilbertFactorization

HilbertFactorization::HilbertFactorization(std::vector<std::size_t> factors)
    : factors_(std::move(factors)) {
  total_ = 1;
  for (std::size_t d : factors_) {
    if (d < 1) throw DimensionError("HilbertFactorization: every factor must be >= 1");
    total_ *= d;
  }
}

HilbertFactorization::HilbertFactorization(std::initializer_list<std::size_t> factors)
    : HilbertFactorization(std::vector<std::size_t>(factors)) {}

HilbertFactorization HilbertFactorization::uniform(std::size_t dim, std::size_t count) {
  return HilbertFactorization(std::vector<std::size_t>(count, dim));
}

HilbertFactorization HilbertFactorization::subset(std::span<const std::size_t> indices) const {
  std::vector<std::size_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= factors_.size()) {
      throw DimensionError("HilbertFactorization: subsystem index " + std::to_string(i) +
                           " out of range");
    }
    out.push_back(factors_[i]);
  }
  return HilbertFactorization(std::move(out));
}

HilbertFactorization HilbertFactorization::concat(const HilbertFactorization& other) const {
  std::vector<std::size_t> out = factors_;
  out.insert(out.end(), other.factors_.begin(), other.factors_.end());
  return HilbertFactorization(std::move(out));
}

std::vector<std::size_t> HilbertFactorization::unflatten(std::size_t index) const {
  std::vector<std::size_t> digits(factors_.size());
  for (std::size_t k = factors_.size(); k-- > 0;) {
    digits[k] = index % factors_[k];
    index /= factors_[k];
  }
  return digits;
}

std::size_t HilbertFactorization::flatten(std::span<const std::size_t> digits) const {
  std::size_t index = 0;
  for (std::size_t k = 0; k < factors_.size(); ++k) index = index * factors_[k] + digits[k];
  return index;
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(Vector amplitudes)
    : StateVector(amplitudes, HilbertFactorization({static_cast<std::size_t>(amplitudes.size())})) {}

StateVector::StateVector(Vector amplitudes, HilbertFactorization space)
    : amplitudes_(std::move(amplitudes)), space_(std::move(space)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != space_.total()) {
    throw DimensionError("StateVector: amplitude count does not match space dimension");
  }
}

StateVector StateVector::basis(const HilbertFactorization& space, std::size_t index) {
  if (index >= space.total()) throw DimensionError("StateVector::basis: index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(space.total()));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(v), space);
}

bool StateVector::is_normalized(double tolerance) const {
  return std::abs(amplitudes_.squaredNorm() - 1.0) <= tolerance;
}

StateVector StateVector::normalized() const {
  const double n = amplitudes_.norm();
  if (n == 0.0) throw PreconditionError("StateVector::normalized: zero vector");
  return StateVector(amplitudes_ / n, space_);
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  const auto na = a.amplitudes().size();
  const auto nb = b.amplitudes().size();
  Vector out(na * nb);
  for (Eigen::Index i = 0; i < na; ++i) out.segment(i * nb, nb) = a.amplitudes()(i) * b.amplitudes();
  return StateVector(std::move(out), a.space().concat(b.space()));
}

Complex inner(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw DimensionError("inner: dimension mismatch");
  return a.amplitudes().dot(b.amplitudes());
}

// ---------------------------------------------------------------------------
// DensityOperator

DensityOperator::DensityOperator(Matrix matrix)
    : DensityOperator(matrix, HilbertFactorization({static_cast<std::size_t>(matrix.rows())})) {}

DensityOperator::DensityOperator(Matrix matrix, HilbertFactorization space)
    : matrix_(std::move(matrix)), space_(std::move(space)) {
  if (matrix_.rows() != matrix_.cols() ||
      static_cast<std::size_t>(matrix_.rows()) != space_.total()) {
    throw DimensionError("DensityOperator: matrix shape does not match space dimension");
  }
}

DensityOperator DensityOperator::pure(const StateVector& psi) {
  return DensityOperator(psi.amplitudes() * psi.amplitudes().adjoint(), psi.space());
}

DensityOperator DensityOperator::maximally_mixed(const HilbertFactorization& space) {
  const auto d = static_cast<Eigen::Index>(space.total());
  return DensityOperator(Matrix::Identity(d, d) / static_cast<double>(d), space);
}

double DensityOperator::hermiticity_residual() const {
  return max_abs(matrix_ - matrix_.adjoint());
}

double DensityOperator::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (matrix_ + matrix_.adjoint()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double DensityOperator::purity() const {
  // Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho.
  return matrix_.cwiseAbs2().sum();
}

bool DensityOperator::is_valid(double tolerance) const {
  return hermiticity_residual() <= tolerance && std::abs(trace() - 1.0) <= tolerance &&
         min_eigenvalue() >= -tolerance;
}

std::vector<double> DensityOperator::clamped_eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (matrix_ + matrix_.adjoint()),
                                           Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  for (double& v : out) {
    if (v < -kClampFloor) {
      throw PreconditionError("DensityOperator: eigenvalue " + std::to_string(v) +
                              " below the clamping floor");
    }
    v = std::max(v, 0.0);
  }
  return out;
}

std::vector<double> DensityOperator::basis_probabilities() const {
  std::vector<double> out(static_cast<std::size_t>(matrix_.rows()));
  for (Eigen::Index i = 0; i < matrix_.rows(); ++i) {
    double v = matrix_(i, i).real();
    if (v < -kClampFloor) throw PreconditionError("DensityOperator: negative population");
    out[static_cast<std::size_t>(i)] = std::max(v, 0.0);
  }
  return out;
}

DensityOperator tensor_product(const DensityOperator& a, const DensityOperator& b) {
  return DensityOperator(tensor_product(a.matrix(), b.matrix()), a.space().concat(b.space()));
}

Vector SchmidtData::reconstruct() const {
  if (coefficients.empty()) return Vector();
  const auto nl = left_vectors.front().amplitudes().size();
  const auto nr = right_vectors.front().amplitudes().size();
  Vector out = Vector::Zero(nl * nr);
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    const Vector& l = left_vectors[j].amplitudes();
    const Vector& r = right_vectors[j].amplitudes();
    for (Eigen::Index i = 0; i < nl; ++i) out.segment(i * nr, nr) += coefficients[j] * l(i) * r;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operations

Matrix tensor_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

DensityOperator partial_trace(const DensityOperator& rho, std::span<const std::size_t> keep) {
  const HilbertFactorization& space = rho.space();
  const std::size_t n = space.count();
  std::vector<bool> kept(n, false);
  for (std::size_t i : keep) {
    if (i >= n) {
      throw DimensionError("partial_trace: invalid subsystem index " + std::to_string(i));
    }
    if (kept[i]) throw DimensionError("partial_trace: duplicate subsystem index");
    kept[i] = true;
  }
  std::vector<std::size_t> keep_sorted(keep.begin(), keep.end());
  std::sort(keep_sorted.begin(), keep_sorted.end());
  std::vector<std::size_t> traced;
  for (std::size_t i = 0; i < n; ++i) {
    if (!kept[i]) traced.push_back(i);
  }
  const HilbertFactorization keep_space = space.subset(keep_sorted);
  const HilbertFactorization trace_space = space.subset(traced);
  const std::size_t dk = keep_space.total();
  const std::size_t dt = trace_space.total();

  // full index of (kept digits, traced digits)
  std::vector<std::size_t> full(dk * dt);
  std::vector<std::size_t> digits(n);
  for (std::size_t a = 0; a < dk; ++a) {
    const auto kd = keep_space.unflatten(a);
    for (std::size_t t = 0; t < dt; ++t) {
      const auto td = trace_space.unflatten(t);
      for (std::size_t q = 0; q < keep_sorted.size(); ++q) digits[keep_sorted[q]] = kd[q];
      for (std::size_t q = 0; q < traced.size(); ++q) digits[traced[q]] = td[q];
      full[t * dk + a] = space.flatten(digits);
    }
  }

  const Matrix& m = rho.matrix();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
  for (std::size_t t = 0; t < dt; ++t) {
    const std::size_t* idx = &full[t * dk];
    for (std::size_t b = 0; b < dk; ++b) {
      for (std::size_t a = 0; a < dk; ++a) {
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            m(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
      }
    }
  }

  // keep order given by the caller is irrelevant: output uses original order
  return DensityOperator(std::move(out), keep_space);
}

DensityOperator partial_trace(const DensityOperator& rho, std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, std::span<const std::size_t>(keep.begin(), keep.size()));
}

Matrix herm_exp(const Matrix& h, double t, double hermiticity_tolerance) {
  if (h.rows() != h.cols()) throw DimensionError("herm_exp: matrix is not square");
  if (max_abs(h - h.adjoint()) > hermiticity_tolerance) {
    throw PreconditionError("herm_exp: input is not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
  Vector phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases(i) = std::exp(Complex(0.0, -es.eigenvalues()(i) * t));
  }
  const Matrix& v = es.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

PolarDecomposition polar_decompose(const Matrix& f, const Matrix& p) {
  if (f.cols() != p.rows() || p.rows() != p.cols()) {
    throw DimensionError("polar_decompose: f and p are incompatible");
  }
  const Matrix g = f * p;
  if (g.rows() < g.cols()) throw DimensionError("polar_decompose: input must not be wide");
  Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& w = svd.matrixU();
  const Matrix& v = svd.matrixV();
  PolarDecomposition out;
  out.unitary = w.leftCols(g.cols()) * v.adjoint();
  out.positive = v * svd.singularValues().cast<Complex>().asDiagonal() * v.adjoint();
  return out;
}

StateVector permute_factors(const StateVector& psi, std::span<const std::size_t> order) {
  const HilbertFactorization& space = psi.space();
  if (order.size() != space.count()) throw DimensionError("permute_factors: order size mismatch");
  std::vector<bool> seen(space.count(), false);
  for (std::size_t i : order) {
    if (i >= space.count() || seen[i]) throw DimensionError("permute_factors: not a permutation");
    seen[i] = true;
  }
  const HilbertFactorization target = space.subset(order);
  Vector out(psi.amplitudes().size());
  std::vector<std::size_t> new_digits(order.size());
  for (std::size_t f = 0; f < space.total(); ++f) {
    const auto digits = space.unflatten(f);
    for (std::size_t q = 0; q < order.size(); ++q) new_digits[q] = digits[order[q]];
    out(static_cast<Eigen::Index>(target.flatten(new_digits))) =
        psi.amplitudes()(static_cast<Eigen::Index>(f));
  }
  return StateVector(std::move(out), target);
}

SchmidtData schmidt(const StateVector& psi, std::span<const std::size_t> left,
                    std::span<const std::size_t> right, double cutoff) {
  const std::size_t n = psi.space().count();
  std::vector<std::size_t> order(left.begin(), left.end());
  order.insert(order.end(), right.begin(), right.end());
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> expected(n);
  std::iota(expected.begin(), expected.end(), 0);
  if (sorted != expected) {
    throw DimensionError("schmidt: bipartition does not cover all factors exactly once");
  }
  const StateVector permuted = permute_factors(psi, order);
  const HilbertFactorization lspace = psi.space().subset(left);
  const HilbertFactorization rspace = psi.space().subset(right);
  const auto dl = static_cast<Eigen::Index>(lspace.total());
  const auto dr = static_cast<Eigen::Index>(rspace.total());

  Matrix m(dl, dr);
  for (Eigen::Index i = 0; i < dl; ++i) m.row(i) = permuted.amplitudes().segment(i * dr, dr).transpose();

  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SchmidtData out;
  const auto& s = svd.singularValues();
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (s(j) <= cutoff) break;
    out.coefficients.push_back(s(j));
    out.left_vectors.emplace_back(svd.matrixU().col(j), lspace);
    out.right_vectors.emplace_back(svd.matrixV().col(j).conjugate(), rspace);
  }
  return out;
}

Matrix sqrt_psd(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()));
  RealVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim()) throw DimensionError("fidelity: dimension mismatch");
  const Matrix s = sqrt_psd(rho.matrix());
  const Matrix inner_m = s * sigma.matrix() * s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (inner_m + inner_m.adjoint()),
                                           Eigen::EigenvaluesOnly);
  double root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(root * root, 0.0, 1.0);
}

double fidelity(const StateVector& psi, const DensityOperator& rho) {
  if (psi.dim() != rho.dim()) throw DimensionError("fidelity: dimension mismatch");
  const double f = psi.amplitudes().dot(rho.matrix() * psi.amplitudes()).real();
  return std::clamp(f, 0.0, 1.0);
}

double trace_distance(const DensityOperator& rho, const DensityOperator& sigma) {
  if (rho.dim() != sigma.dim()) throw DimensionError("trace_distance: dimension mismatch");
  const Matrix d = rho.matrix() - sigma.matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double hermitian_operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

Matrix orthonormal_complement(const Matrix& basis) {
  const Eigen::Index d = basis.rows();
  const Eigen::Index r = basis.cols();
  if (r == 0) return Matrix::Identity(d, d);
  Eigen::HouseholderQR<Matrix> qr(basis);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  return q.rightCols(d - r);
}

}  // namespace qlink
