#include "qlink/zero_error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qlink/errors.hpp"
#include "qlink/nnls.hpp"

namespace qlink {

namespace {

std::size_t carrier_of(const HilbertFactorization& space) {
  return space.count() > 0 ? space.factor(0) : 1;
}

// Columns K_j|v⟩.
Matrix kraus_images(const KrausChannel& ch, const Vector& v) {
  const auto& ops = ch.operators();
  Matrix w(static_cast<Eigen::Index>(ch.output_dim()), static_cast<Eigen::Index>(ops.size()));
  for (std::size_t j = 0; j < ops.size(); ++j) w.col(static_cast<Eigen::Index>(j)) = ops[j] * v;
  return w;
}

// Orthonormal basis grown by repeated Gram–Schmidt, tracking squared row norms
// so that the distance of each basis vector e_i from the span is cheap to read.
class SpanBuilder {
 public:
  SpanBuilder(Eigen::Index dim, double threshold)
      : basis_(dim, dim), row_norm2_(RealVector::Zero(dim)), threshold_(threshold) {}

  Eigen::Index rank() const { return rank_; }
  Eigen::Index dim() const { return basis_.rows(); }
  bool full() const { return rank_ >= basis_.rows(); }
  double residual(Eigen::Index i) const { return std::max(0.0, 1.0 - row_norm2_(i)); }

  Vector project_out(Vector v) const {
    if (rank_ == 0) return v;
    auto s = basis_.leftCols(rank_);
    for (int pass = 0; pass < 2; ++pass) v -= s * (s.adjoint() * v);
    return v;
  }

  bool add(const Vector& v) {
    if (full()) return false;
    const double n0 = v.norm();
    if (n0 == 0.0) return false;
    Vector r = project_out(v);
    const double n1 = r.norm();
    if (n1 <= threshold_ * n0) return false;
    r /= n1;
    basis_.col(rank_) = r;
    row_norm2_ += r.cwiseAbs2();
    ++rank_;
    return true;
  }

 private:
  Matrix basis_;
  RealVector row_norm2_;
  Eigen::Index rank_ = 0;
  double threshold_;
};

void add_kraus_products(SpanBuilder& span, const KrausChannel& ch, const Vector& c) {
  const Matrix w = kraus_images(ch, c);
  for (const Matrix& k : ch.operators()) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      if (span.full()) return;
      span.add(k.adjoint() * w.col(j));
    }
  }
}

// Real coordinates of a Hermitian matrix: diagonal, then Re/Im of the upper triangle.
Eigen::VectorXd hermitian_coordinates(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Eigen::VectorXd out(d * d);
  Eigen::Index p = 0;
  for (Eigen::Index i = 0; i < d; ++i) out(p++) = m(i, i).real();
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const Complex h = 0.5 * (m(i, j) + std::conj(m(j, i)));
      out(p++) = h.real();
      out(p++) = h.imag();
    }
  }
  return out;
}

StateVector superpose(const ClassicalZeroErrorCode& code, const std::vector<std::size_t>& idx,
                      const std::vector<double>& weights) {
  const HilbertFactorization& space = code.codewords.front().space();
  Vector q = Vector::Zero(static_cast<Eigen::Index>(space.total()));
  for (std::size_t t = 0; t < idx.size(); ++t) {
    q += std::sqrt(weights[t]) * code.codewords[idx[t]].amplitudes();
  }
  return StateVector(std::move(q), space).normalized();
}

}  // namespace

// ---------------------------------------------------------------------------
// Classical codes

double ClassicalZeroErrorCode::rate() const {
  if (codewords.empty() || uses == 0) return 0.0;
  return std::log2(static_cast<double>(codewords.size())) / static_cast<double>(uses);
}

double ClassicalZeroErrorCode::size_bound() const {
  return std::pow(static_cast<double>(carrier_dim), static_cast<double>(uses)) /
         static_cast<double>(env_dim * env_dim);
}

ClassicalZeroErrorCode greedy_classical_code(const KrausChannel& ch, const GreedyOptions& options) {
  if (ch.env_dim() == 0) throw PreconditionError("greedy_classical_code: channel has no operators");
  const auto d = static_cast<Eigen::Index>(ch.input_dim());
  SpanBuilder span(d, options.dependence_threshold);

  ClassicalZeroErrorCode code;
  code.carrier_dim = carrier_of(ch.input_space());
  code.uses = ch.input_space().count();
  code.env_dim = ch.env_dim();

  while (!span.full()) {
    if (options.max_size && code.codewords.size() >= *options.max_size) break;
    // Any e_i whose residual is at least the average (D−r)/D, halved for slack.
    const double target = 0.5 * static_cast<double>(d - span.rank()) / static_cast<double>(d);
    Eigen::Index pick = -1;
    double best = -1.0;
    Eigen::Index best_i = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double r = span.residual(i);
      if (r >= target) {
        pick = i;
        break;
      }
      if (r > best) {
        best = r;
        best_i = i;
      }
    }
    if (pick < 0) pick = best_i;
    Vector e = Vector::Zero(d);
    e(pick) = 1.0;
    Vector c = span.project_out(e);
    const double n = c.norm();
    if (n <= std::sqrt(options.dependence_threshold)) break;
    c /= n;
    code.codewords.emplace_back(c, ch.input_space());
    add_kraus_products(span, ch, c);
  }

  for (const StateVector& c : code.codewords) {
    const Matrix w = kraus_images(ch, c.amplitudes());
    code.kl_matrices.push_back(w.adjoint() * w);
  }
  return code;
}

CodeReport verify_classical(const ClassicalZeroErrorCode& code, const KrausChannel& ch,
                            double tolerance) {
  std::vector<Matrix> images;
  images.reserve(code.size());
  for (const StateVector& c : code.codewords) {
    if (c.dim() != ch.input_dim()) throw DimensionError("verify_classical: codeword dimension");
    images.push_back(kraus_images(ch, c.amplitudes()));
  }
  CodeReport report;
  for (std::size_t a = 0; a < images.size(); ++a) {
    for (std::size_t b = a + 1; b < images.size(); ++b) {
      report.residual = std::max(report.residual, max_abs(images[a].adjoint() * images[b]));
    }
  }
  report.passes = report.residual <= tolerance;
  return report;
}

std::size_t greedy_span_dimension(const ClassicalZeroErrorCode& code, const KrausChannel& ch,
                                  double threshold) {
  SpanBuilder span(static_cast<Eigen::Index>(ch.input_dim()), threshold);
  for (const StateVector& c : code.codewords) add_kraus_products(span, ch, c.amplitudes());
  return static_cast<std::size_t>(span.rank());
}

// ---------------------------------------------------------------------------
// Radon partition

RadonPartition radon_partition(const std::vector<Matrix>& points, double tolerance) {
  if (points.empty()) throw ConstructionError("radon_partition: no points");
  const Eigen::Index d = points.front().rows();
  const auto k = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(d * d + 1, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Matrix& m = points[static_cast<std::size_t>(j)];
    if (m.rows() != d || m.cols() != d) throw DimensionError("radon_partition: point shape");
    a.col(j).head(d * d) = hermitian_coordinates(m);
    a(d * d, j) = 1.0;
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  Eigen::VectorXd alpha = svd.matrixV().col(k - 1);
  if ((a * alpha).cwiseAbs().maxCoeff() > tolerance * scale) {
    throw ConstructionError("radon_partition: points are affinely independent");
  }
  Eigen::Index imax = 0;
  alpha.cwiseAbs().maxCoeff(&imax);
  if (alpha(imax) < 0.0) alpha = -alpha;
  const double cut = 1e-12 * alpha(imax);

  RadonPartition out;
  double s1 = 0.0, s2 = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (alpha(j) > cut) {
      out.first.push_back(static_cast<std::size_t>(j));
      out.first_weights.push_back(alpha(j));
      s1 += alpha(j);
    } else if (alpha(j) < -cut) {
      out.second.push_back(static_cast<std::size_t>(j));
      out.second_weights.push_back(-alpha(j));
      s2 += -alpha(j);
    }
  }
  if (out.second.empty()) throw ConstructionError("radon_partition: degenerate dependence");
  for (double& w : out.first_weights) w /= s1;
  for (double& w : out.second_weights) w /= s2;

  Matrix c1 = Matrix::Zero(d, d), c2 = Matrix::Zero(d, d);
  for (std::size_t t = 0; t < out.first.size(); ++t) c1 += out.first_weights[t] * points[out.first[t]];
  for (std::size_t t = 0; t < out.second.size(); ++t) {
    c2 += out.second_weights[t] * points[out.second[t]];
  }
  out.residual = max_abs(c1 - c2);
  if (out.residual > tolerance * scale) {
    throw ConstructionError("radon_partition: convex combinations disagree");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Quantum codes

double QuantumZeroErrorCode::rate() const {
  if (basis.empty() || uses == 0) return 0.0;
  return std::log2(static_cast<double>(basis.size())) / static_cast<double>(uses);
}

Matrix QuantumZeroErrorCode::isometry() const {
  if (basis.empty()) return Matrix();
  Matrix q(static_cast<Eigen::Index>(basis.front().dim()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) q.col(static_cast<Eigen::Index>(k)) = basis[k].amplitudes();
  return q;
}

Matrix QuantumZeroErrorCode::projector() const {
  const Matrix q = isometry();
  return q * q.adjoint();
}

double QuantumZeroErrorCode::loose_size_bound() const {
  const double dy = static_cast<double>(env_dim);
  return std::pow(static_cast<double>(carrier_dim), static_cast<double>(uses)) / (dy * dy * dy * dy + dy * dy);
}

double QuantumZeroErrorCode::tight_size_bound() const {
  const double dy = static_cast<double>(env_dim);
  return std::pow(static_cast<double>(carrier_dim), static_cast<double>(uses)) / (dy * dy + 2.0);
}

QuantumZeroErrorCode make_quantum_code(std::vector<StateVector> basis, const KrausChannel& ch) {
  if (basis.empty()) throw ConstructionError("make_quantum_code: empty basis");
  QuantumZeroErrorCode code;
  const Matrix w = kraus_images(ch, basis.front().amplitudes());
  code.shared_matrix = w.adjoint() * w;
  code.basis = std::move(basis);
  code.carrier_dim = carrier_of(ch.input_space());
  code.uses = ch.input_space().count();
  code.env_dim = ch.env_dim();
  return code;
}

QuantumZeroErrorCode build_quantum_code(const ClassicalZeroErrorCode& code, const KrausChannel& ch,
                                        std::size_t logical_dim) {
  if (logical_dim < 2) throw PreconditionError("build_quantum_code: logical_dim must be >= 2");
  const std::size_t dy = ch.env_dim();
  std::vector<StateVector> basis;

  if (logical_dim == 2) {
    const std::size_t need = dy * dy + 2;
    const std::size_t take = std::min(need, code.size());
    if (take < 3) throw ConstructionError("build_quantum_code: need at least 3 codewords");
    std::vector<Matrix> pts(code.kl_matrices.begin(), code.kl_matrices.begin() + static_cast<long>(take));
    const RadonPartition rp = radon_partition(pts);
    basis.push_back(superpose(code, rp.first, rp.first_weights));
    basis.push_back(superpose(code, rp.second, rp.second_weights));
  } else {
    if (code.size() < logical_dim) throw ConstructionError("build_quantum_code: too few codewords");
    Matrix target = Matrix::Zero(static_cast<Eigen::Index>(dy), static_cast<Eigen::Index>(dy));
    for (const Matrix& m : code.kl_matrices) target += m;
    target /= static_cast<double>(code.size());
    const Eigen::VectorXd tc = hermitian_coordinates(target);
    for (std::size_t g = 0; g < logical_dim; ++g) {
      std::vector<std::size_t> pool;
      for (std::size_t k = g; k < code.size(); k += logical_dim) pool.push_back(k);
      const auto rows = tc.size() + 1;
      Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(pool.size()));
      for (std::size_t t = 0; t < pool.size(); ++t) {
        a.col(static_cast<Eigen::Index>(t)).head(tc.size()) = hermitian_coordinates(code.kl_matrices[pool[t]]);
        a(tc.size(), static_cast<Eigen::Index>(t)) = 1.0;
      }
      Eigen::VectorXd b(rows);
      b.head(tc.size()) = tc;
      b(tc.size()) = 1.0;
      const NnlsResult sol = nnls(a, b);
      if (sol.residual_norm > 1e-9) {
        throw ConstructionError("build_quantum_code: target not reachable in pool " + std::to_string(g));
      }
      std::vector<std::size_t> idx;
      std::vector<double> w;
      const double total = sol.x.sum();
      for (std::size_t t = 0; t < pool.size(); ++t) {
        const double x = sol.x(static_cast<Eigen::Index>(t));
        if (x > 0.0) {
          idx.push_back(pool[t]);
          w.push_back(x / total);
        }
      }
      basis.push_back(superpose(code, idx, w));
    }
  }
  return make_quantum_code(std::move(basis), ch);
}

CodeReport verify_quantum(const QuantumZeroErrorCode& code, const KrausChannel& ch, double tolerance) {
  std::vector<Matrix> images;
  for (const StateVector& q : code.basis) {
    if (q.dim() != ch.input_dim()) throw DimensionError("verify_quantum: basis dimension");
    images.push_back(kraus_images(ch, q.amplitudes()));
  }
  CodeReport report;
  for (std::size_t a = 0; a < images.size(); ++a) {
    for (std::size_t b = a; b < images.size(); ++b) {
      const Matrix g = images[a].adjoint() * images[b];
      const double r = (a == b) ? max_abs(g - code.shared_matrix) : max_abs(g);
      report.residual = std::max(report.residual, r);
    }
  }
  report.passes = report.residual <= tolerance;
  return report;
}

StateVector random_code_state(const QuantumZeroErrorCode& code, Rng& rng) {
  const Matrix q = code.isometry();
  const Vector coeffs = ginibre(q.cols(), 1, rng).col(0);
  return StateVector(q * coeffs, code.basis.front().space()).normalized();
}

// ---------------------------------------------------------------------------
// Decoder

Matrix DecoderBlock::projector() const { return range_basis * range_basis.adjoint(); }

double BlockDecoder::projector_residual() const {
  double r = 0.0;
  for (std::size_t a = 0; a < blocks_.size(); ++a) {
    for (std::size_t b = a; b < blocks_.size(); ++b) {
      Matrix g = blocks_[a].range_basis.adjoint() * blocks_[b].range_basis;
      if (a == b) g -= Matrix::Identity(g.rows(), g.cols());
      r = std::max(r, max_abs(g));
    }
  }
  return r;
}

double BlockDecoder::eigenvalue_sum() const {
  return std::accumulate(eigenvalues_.begin(), eigenvalues_.end(), 0.0);
}

BlockDecoder build_decoder(const QuantumZeroErrorCode& code, const KrausChannel& ch) {
  const auto dy = static_cast<Eigen::Index>(ch.env_dim());
  if (code.shared_matrix.rows() != dy) throw DimensionError("build_decoder: shared matrix size");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (code.shared_matrix + code.shared_matrix.adjoint()));
  if (es.eigenvalues().minCoeff() < -1e-9) {
    throw PreconditionError("build_decoder: shared matrix is not positive semidefinite");
  }

  BlockDecoder dec;
  dec.rotation_ = es.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = dy; j-- > 0;) dec.eigenvalues_.push_back(std::max(0.0, es.eigenvalues()(j)));
  dec.code_isometry_ = code.isometry();
  dec.input_space_ = ch.input_space();

  const Matrix& q = dec.code_isometry_;
  const Matrix p = q * q.adjoint();
  const auto& ops = ch.operators();
  std::vector<Matrix> fq;
  for (Eigen::Index j = 0; j < dy; ++j) {
    Matrix f = Matrix::Zero(ops.front().rows(), ops.front().cols());
    for (Eigen::Index i = 0; i < dy; ++i) f += dec.rotation_(i, j) * ops[static_cast<std::size_t>(i)];
    fq.push_back(f * q);
    const double lambda = dec.eigenvalues_[static_cast<std::size_t>(j)];
    if (lambda > BlockDecoder::kActiveThreshold) {
      DecoderBlock block;
      block.index = static_cast<std::size_t>(j);
      block.lambda = lambda;
      block.unitary = polar_decompose(f, p).unitary;
      block.range_basis = block.unitary * q;
      block.rotated_kraus = std::move(f);
      dec.blocks_.push_back(std::move(block));
    }
  }
  for (Eigen::Index a = 0; a < dy; ++a) {
    for (Eigen::Index b = a; b < dy; ++b) {
      Matrix g = fq[static_cast<std::size_t>(a)].adjoint() * fq[static_cast<std::size_t>(b)];
      if (a == b) g -= dec.eigenvalues_[static_cast<std::size_t>(a)] * Matrix::Identity(g.rows(), g.cols());
      dec.orthogonality_residual_ = std::max(dec.orthogonality_residual_, max_abs(g));
    }
  }
  return dec;
}

std::vector<DecodeBranch> decode_branches(const BlockDecoder& decoder, const DensityOperator& rho_out,
                                          double leakage_tolerance) {
  if (decoder.blocks().empty()) throw PreconditionError("decode: decoder has no active blocks");
  if (static_cast<Eigen::Index>(rho_out.dim()) != decoder.blocks().front().range_basis.rows()) {
    throw DimensionError("decode: output dimension mismatch");
  }
  std::vector<DecodeBranch> out;
  double total = 0.0;
  for (const DecoderBlock& b : decoder.blocks()) {
    const Matrix x = b.range_basis.adjoint() * rho_out.matrix() * b.range_basis;
    const double prob = x.trace().real();
    total += prob;
    const Matrix r = b.unitary.adjoint() * b.range_basis;
    Matrix rec = prob > 0.0 ? Matrix(r * x * r.adjoint() / prob)
                            : Matrix(Matrix::Zero(r.rows(), r.rows()));
    out.push_back({b.index, std::max(prob, 0.0), DensityOperator(std::move(rec), decoder.input_space())});
  }
  if (total < 1.0 - leakage_tolerance) {
    throw LeakageError("decode: state carries weight outside the code blocks", total);
  }
  return out;
}

DecodeBranch decode(const BlockDecoder& decoder, const DensityOperator& rho_out, Rng& rng,
                    double leakage_tolerance) {
  std::vector<DecodeBranch> branches = decode_branches(decoder, rho_out, leakage_tolerance);
  std::vector<double> probs;
  for (const auto& b : branches) probs.push_back(b.probability);
  std::discrete_distribution<std::size_t> dist(probs.begin(), probs.end());
  return std::move(branches[dist(rng)]);
}

double block_form_residual(const BlockDecoder& decoder, const KrausChannel& ch, const StateVector& psi) {
  const Matrix w = kraus_images(ch, psi.amplitudes());
  const Matrix direct = w * w.adjoint();
  Matrix blocks = Matrix::Zero(direct.rows(), direct.cols());
  for (const DecoderBlock& b : decoder.blocks()) {
    const Vector v = b.range_basis * (b.range_basis.adjoint() * (b.unitary * psi.amplitudes()));
    blocks += b.lambda * v * v.adjoint();
  }
  return max_abs(blocks - direct);
}

double block_form_residual(const BlockDecoder& decoder, const KrausChannel& ch, const DensityOperator& rho) {
  const Matrix direct = apply(ch, rho).matrix();
  Matrix blocks = Matrix::Zero(direct.rows(), direct.cols());
  for (const DecoderBlock& b : decoder.blocks()) {
    const Matrix pu = b.range_basis * (b.range_basis.adjoint() * b.unitary);
    blocks += b.lambda * pu * rho.matrix() * pu.adjoint();
  }
  return max_abs(blocks - direct);
}

// ---------------------------------------------------------------------------
// Schmidt structure

SchmidtStructureReport schmidt_structure_check(const QuantumZeroErrorCode& code,
                                               const UnitaryDilation& dilation, const StateVector& psi,
                                               double tolerance) {
  const KrausChannel full = dilation_to_kraus(dilation, PruneZeros::kNo);
  const QuantumZeroErrorCode local = make_quantum_code(code.basis, full);
  const BlockDecoder dec = build_decoder(local, full);

  const Vector global = dilation.unitary * tensor_product(psi, dilation.env_state).amplitudes();
  const HilbertFactorization out_space = dilation.system.concat(HilbertFactorization({dilation.env_dim()}));
  std::vector<std::size_t> left(dilation.system.count());
  std::iota(left.begin(), left.end(), 0);
  const std::vector<std::size_t> right{dilation.system.count()};
  const SchmidtData measured = schmidt(StateVector(global, out_space), left, right, 1e-10);

  SchmidtStructureReport report;
  report.measured_coefficients = measured.coefficients;
  std::vector<Vector> pl, pr;
  for (const DecoderBlock& b : dec.blocks()) {
    report.predicted_coefficients.push_back(std::sqrt(b.lambda));
    pl.push_back(b.unitary * psi.amplitudes());
    pr.push_back(dilation.env_basis * dec.rotation().col(static_cast<Eigen::Index>(b.index)).conjugate());
  }

  const std::size_t n = std::max(report.predicted_coefficients.size(), measured.coefficients.size());
  for (std::size_t j = 0; j < n; ++j) {
    const double a = j < report.predicted_coefficients.size() ? report.predicted_coefficients[j] : 0.0;
    const double b = j < measured.coefficients.size() ? measured.coefficients[j] : 0.0;
    report.coefficient_residual = std::max(report.coefficient_residual, std::abs(a - b));
  }

  // Compare spans group by group; equal coefficients make individual vectors arbitrary.
  const auto& pc = report.predicted_coefficients;
  std::size_t s = 0;
  while (s < pc.size()) {
    std::size_t e = s + 1;
    while (e < pc.size() && std::abs(pc[e] - pc[s]) <= 1e-6) ++e;
    if (e > measured.rank()) {
      report.vector_residual = 1.0;
      break;
    }
    const auto width = static_cast<Eigen::Index>(e - s);
    Matrix lp(pl.front().size(), width), ls(pl.front().size(), width);
    Matrix rp(pr.front().size(), width), rs(pr.front().size(), width);
    for (std::size_t j = s; j < e; ++j) {
      const auto c = static_cast<Eigen::Index>(j - s);
      lp.col(c) = pl[j];
      ls.col(c) = measured.left_vectors[j].amplitudes();
      rp.col(c) = pr[j];
      rs.col(c) = measured.right_vectors[j].amplitudes();
    }
    report.vector_residual = std::max(report.vector_residual, max_abs(lp - ls * (ls.adjoint() * lp)));
    report.vector_residual = std::max(report.vector_residual, max_abs(rp - rs * (rs.adjoint() * rp)));
    s = e;
  }
  report.passes = report.coefficient_residual <= tolerance && report.vector_residual <= tolerance;
  return report;
}

}  // namespace qlink
