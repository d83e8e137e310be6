#include "qlink/channel.hpp"

#include <cmath>

#include "qlink/errors.hpp"
#include "qlink/random.hpp"

namespace qlink {
namespace {

double completeness_of(const std::vector<Matrix>& ops, std::size_t input_dim) {
  const auto d = static_cast<Eigen::Index>(input_dim);
  Matrix sum = Matrix::Zero(d, d);
  for (const Matrix& k : ops) sum.noalias() += k.adjoint() * k;
  sum -= Matrix::Identity(d, d);
  return max_abs(sum);
}

std::size_t ipow(std::size_t base, std::size_t exp) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < exp; ++i) out *= base;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// KrausChannel

KrausChannel::KrausChannel(std::vector<Matrix> operators, HilbertFactorization input,
                           HilbertFactorization output, PruneZeros prune)
    : input_(std::move(input)), output_(std::move(output)) {
  for (Matrix& k : operators) {
    if (static_cast<std::size_t>(k.rows()) != output_.total() ||
        static_cast<std::size_t>(k.cols()) != input_.total()) {
      throw DimensionError("KrausChannel: operator shape does not match the declared spaces");
    }
    if (prune == PruneZeros::kYes && k.norm() < kPruneThreshold) continue;
    operators_.push_back(std::move(k));
  }
  completeness_residual_ = completeness_of(operators_, input_.total());
}

KrausChannel::KrausChannel(std::vector<Matrix> operators, PruneZeros prune)
    : KrausChannel(operators,
                   HilbertFactorization({operators.empty() ? std::size_t{1}
                                                           : static_cast<std::size_t>(operators.front().cols())}),
                   HilbertFactorization({operators.empty() ? std::size_t{1}
                                                           : static_cast<std::size_t>(operators.front().rows())}),
                   prune) {}

KrausChannel KrausChannel::identity(const HilbertFactorization& space) {
  const auto d = static_cast<Eigen::Index>(space.total());
  return KrausChannel({Matrix::Identity(d, d)}, space, space);
}

KrausChannel KrausChannel::unitary(const Matrix& u) { return KrausChannel({u}); }

double UnitaryDilation::residual() const {
  const auto n = unitary.rows();
  double r = max_abs(unitary.adjoint() * unitary - Matrix::Identity(n, n));
  const auto e = env_basis.cols();
  r = std::max(r, max_abs(env_basis.adjoint() * env_basis - Matrix::Identity(e, e)));
  return r;
}

// ---------------------------------------------------------------------------
// Application

DensityOperator apply(const KrausChannel& ch, const DensityOperator& rho, double cptp_tolerance) {
  if (rho.dim() != ch.input_dim()) throw DimensionError("apply: input dimension mismatch");
  if (ch.completeness_residual() > cptp_tolerance) {
    throw PreconditionError("apply: channel violates completeness (residual " +
                            std::to_string(ch.completeness_residual()) + ")");
  }
  const auto d = static_cast<Eigen::Index>(ch.output_dim());
  Matrix out = Matrix::Zero(d, d);
  for (const Matrix& k : ch.operators()) out.noalias() += k * rho.matrix() * k.adjoint();
  return DensityOperator(std::move(out), ch.output_space());
}

DensityOperator apply(const KrausChannel& ch, const StateVector& psi, double cptp_tolerance) {
  if (psi.dim() != ch.input_dim()) throw DimensionError("apply: input dimension mismatch");
  if (ch.completeness_residual() > cptp_tolerance) {
    throw PreconditionError("apply: channel violates completeness");
  }
  const auto d = static_cast<Eigen::Index>(ch.output_dim());
  Matrix out = Matrix::Zero(d, d);
  for (const Matrix& k : ch.operators()) {
    const Vector v = k * psi.amplitudes();
    out.noalias() += v * v.adjoint();
  }
  return DensityOperator(std::move(out), ch.output_space());
}

DensityOperator apply(const UnitaryDilation& dilation, const DensityOperator& rho) {
  if (rho.dim() != dilation.system.total()) throw DimensionError("apply: dilation input mismatch");
  const DensityOperator env = DensityOperator::pure(dilation.env_state);
  const DensityOperator joint(tensor_product(rho.matrix(), env.matrix()),
                              dilation.system.concat(env.space()));
  const DensityOperator evolved(dilation.unitary * joint.matrix() * dilation.unitary.adjoint(),
                                joint.space());
  std::vector<std::size_t> keep(dilation.system.count());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
  return partial_trace(evolved, keep);
}

CptpReport verify_cptp(const KrausChannel& ch, double tolerance) {
  return {ch.completeness_residual(), ch.completeness_residual() <= tolerance};
}

// ---------------------------------------------------------------------------
// Dilations

KrausChannel dilation_to_kraus(const UnitaryDilation& dilation, PruneZeros prune, double tolerance) {
  const auto ds = static_cast<Eigen::Index>(dilation.system.total());
  const auto de = static_cast<Eigen::Index>(dilation.env_dim());
  if (dilation.unitary.rows() != ds * de || dilation.unitary.cols() != ds * de) {
    throw DimensionError("dilation_to_kraus: unitary does not act on system ⊗ environment");
  }
  if (dilation.env_basis.rows() != de) {
    throw DimensionError("dilation_to_kraus: environment basis has the wrong dimension");
  }
  if (dilation.residual() > tolerance) {
    throw PreconditionError("dilation_to_kraus: dilation is not unitary/orthonormal");
  }
  // U (I ⊗ |ω⟩): column b is U(|b⟩⊗|ω⟩).
  Matrix u_omega = Matrix::Zero(ds * de, ds);
  const Vector& omega = dilation.env_state.amplitudes();
  for (Eigen::Index b = 0; b < ds; ++b) {
    for (Eigen::Index f = 0; f < de; ++f) {
      if (omega(f) == Complex(0.0)) continue;
      u_omega.col(b) += omega(f) * dilation.unitary.col(b * de + f);
    }
  }
  std::vector<Matrix> ops;
  ops.reserve(static_cast<std::size_t>(dilation.env_basis.cols()));
  for (Eigen::Index j = 0; j < dilation.env_basis.cols(); ++j) {
    Matrix k = Matrix::Zero(ds, ds);
    for (Eigen::Index a = 0; a < ds; ++a) {
      for (Eigen::Index e = 0; e < de; ++e) {
        const Complex w = std::conj(dilation.env_basis(e, j));
        if (w == Complex(0.0)) continue;
        k.row(a) += w * u_omega.row(a * de + e);
      }
    }
    ops.push_back(std::move(k));
  }
  return KrausChannel(std::move(ops), dilation.system, dilation.system, prune);
}

UnitaryDilation kraus_to_dilation(const KrausChannel& ch, double tolerance) {
  if (ch.input_dim() != ch.output_dim()) {
    throw DimensionError("kraus_to_dilation: input and output dimensions differ");
  }
  if (ch.completeness_residual() > tolerance) {
    throw PreconditionError("kraus_to_dilation: completeness violated");
  }
  const auto d = static_cast<Eigen::Index>(ch.input_dim());
  const auto de = static_cast<Eigen::Index>(std::max<std::size_t>(ch.env_dim(), 1));
  Matrix v = Matrix::Zero(d * de, d);
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(ch.env_dim()); ++j) {
    const Matrix& k = ch.operators()[static_cast<std::size_t>(j)];
    for (Eigen::Index a = 0; a < d; ++a) v.row(a * de + j) = k.row(a);
  }
  const Matrix complement = orthonormal_complement(v);
  Matrix u(d * de, d * de);
  Eigen::Index next = 0;
  for (Eigen::Index b = 0; b < d; ++b) {
    u.col(b * de) = v.col(b);
    for (Eigen::Index f = 1; f < de; ++f) u.col(b * de + f) = complement.col(next++);
  }
  Vector omega = Vector::Zero(de);
  omega(0) = 1.0;
  return UnitaryDilation{std::move(u), ch.input_space(),
                         StateVector(std::move(omega), HilbertFactorization({static_cast<std::size_t>(de)})),
                         Matrix::Identity(de, de)};
}

// ---------------------------------------------------------------------------
// Composition and comparison

KrausChannel compose(const KrausChannel& a, const KrausChannel& b, ComposeMode mode) {
  std::vector<Matrix> ops;
  ops.reserve(a.env_dim() * b.env_dim());
  if (mode == ComposeMode::kSequential) {
    if (a.input_dim() != b.output_dim()) throw DimensionError("compose: a.input != b.output");
    for (const Matrix& ka : a.operators()) {
      for (const Matrix& kb : b.operators()) ops.push_back(ka * kb);
    }
    return KrausChannel(std::move(ops), b.input_space(), a.output_space());
  }
  for (const Matrix& ka : a.operators()) {
    for (const Matrix& kb : b.operators()) ops.push_back(tensor_product(ka, kb));
  }
  return KrausChannel(std::move(ops), a.input_space().concat(b.input_space()),
                      a.output_space().concat(b.output_space()));
}

Matrix choi(const KrausChannel& ch) {
  const auto din = static_cast<Eigen::Index>(ch.input_dim());
  const auto dout = static_cast<Eigen::Index>(ch.output_dim());
  Matrix c = Matrix::Zero(din * dout, din * dout);
  Vector v(din * dout);
  for (const Matrix& k : ch.operators()) {
    for (Eigen::Index a = 0; a < din; ++a) v.segment(a * dout, dout) = k.col(a);
    c.noalias() += v * v.adjoint();
  }
  return c;
}

Matrix choi(const UnitaryDilation& dilation) {
  const auto d = static_cast<Eigen::Index>(dilation.system.total());
  Matrix c = Matrix::Zero(d * d, d * d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      Matrix e = Matrix::Zero(d, d);
      e(a, b) = 1.0;
      const DensityOperator out = apply(dilation, DensityOperator(e, dilation.system));
      c.block(a * d, b * d, d, d) = out.matrix();
    }
  }
  return c;
}

double choi_distance(const KrausChannel& a, const KrausChannel& b) {
  if (a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim()) {
    throw DimensionError("choi_distance: channels act on different spaces");
  }
  return hermitian_operator_norm(choi(a) - choi(b));
}

// ---------------------------------------------------------------------------
// Multi-use families

MultiUseFamily::MultiUseFamily(Generator generator, std::size_t carrier_dim,
                               FactorSelector last_use_outputs, EnvDims env_dims)
    : generator_(std::move(generator)),
      carrier_dim_(carrier_dim),
      last_use_outputs_(std::move(last_use_outputs)),
      env_dims_(std::move(env_dims)) {}

KrausChannel MultiUseFamily::channel(std::size_t n) const { return generator_(n); }

std::size_t MultiUseFamily::env_dim(std::size_t n) const {
  return env_dims_ ? env_dims_(n) : generator_(n).env_dim();
}

std::vector<std::size_t> MultiUseFamily::last_use_outputs(std::size_t n) const {
  if (last_use_outputs_) return last_use_outputs_(n);
  const KrausChannel ch = generator_(n);
  return {ch.output_space().count() - 1};
}

MultiUseFamily memoryless_family(const KrausChannel& single) {
  const std::size_t per_use = single.output_space().count();
  auto generator = [single](std::size_t n) {
    KrausChannel out = single;
    for (std::size_t k = 1; k < n; ++k) out = compose(out, single, ComposeMode::kParallel);
    return out;
  };
  auto last = [per_use](std::size_t n) {
    std::vector<std::size_t> idx;
    for (std::size_t q = 0; q < per_use; ++q) idx.push_back((n - 1) * per_use + q);
    return idx;
  };
  const std::size_t env = single.env_dim();
  return MultiUseFamily(generator, single.input_dim(), last,
                        [env](std::size_t n) { return ipow(env, n); });
}

KrausChannel finite_memory_channel(const Matrix& coupling, std::size_t carrier_dim,
                                   std::size_t memory_dim, std::size_t uses) {
  const auto d = static_cast<Eigen::Index>(carrier_dim);
  const auto dm = static_cast<Eigen::Index>(memory_dim);
  if (coupling.rows() != d * dm || coupling.cols() != d * dm) {
    throw DimensionError("finite_memory_channel: coupling must act on carrier ⊗ memory");
  }
  const auto total = static_cast<Eigen::Index>(ipow(carrier_dim, uses));
  // rows: (x_1..x_n, memory), columns: input basis
  Matrix state = Matrix::Zero(total * dm, total);
  for (Eigen::Index x = 0; x < total; ++x) state(x * dm, x) = 1.0;

  Matrix block(d * dm, total);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(d * dm));
  for (std::size_t k = 0; k < uses; ++k) {
    const auto pre_count = static_cast<Eigen::Index>(ipow(carrier_dim, k));
    const auto post_count = static_cast<Eigen::Index>(ipow(carrier_dim, uses - k - 1));
    for (Eigen::Index pre = 0; pre < pre_count; ++pre) {
      for (Eigen::Index post = 0; post < post_count; ++post) {
        for (Eigen::Index xk = 0; xk < d; ++xk) {
          for (Eigen::Index m = 0; m < dm; ++m) {
            rows[static_cast<std::size_t>(xk * dm + m)] = (((pre * d + xk) * post_count + post) * dm) + m;
          }
        }
        for (std::size_t r = 0; r < rows.size(); ++r) block.row(static_cast<Eigen::Index>(r)) = state.row(rows[r]);
        const Matrix evolved = coupling * block;
        for (std::size_t r = 0; r < rows.size(); ++r) state.row(rows[r]) = evolved.row(static_cast<Eigen::Index>(r));
      }
    }
  }
  std::vector<Matrix> ops;
  for (Eigen::Index j = 0; j < dm; ++j) {
    Matrix k(total, total);
    for (Eigen::Index x = 0; x < total; ++x) k.row(x) = state.row(x * dm + j);
    ops.push_back(std::move(k));
  }
  const auto space = HilbertFactorization::uniform(carrier_dim, uses);
  return KrausChannel(std::move(ops), space, space);
}

MultiUseFamily finite_memory_family(const Matrix& coupling, std::size_t carrier_dim,
                                    std::size_t memory_dim) {
  return MultiUseFamily(
      [coupling, carrier_dim, memory_dim](std::size_t n) {
        return finite_memory_channel(coupling, carrier_dim, memory_dim, n);
      },
      carrier_dim, [](std::size_t n) { return std::vector<std::size_t>{n - 1}; },
      [memory_dim](std::size_t) { return memory_dim; });
}

double marginal_deviation(const MultiUseFamily& family, std::size_t n, std::size_t panel_size,
                          std::uint64_t seed) {
  if (n < 2) throw PreconditionError("marginal_consistency: n must be >= 2");
  const KrausChannel full = family.channel(n);
  const KrausChannel reduced = family.channel(n - 1);
  const std::size_t d = family.carrier_dim();
  const auto last = family.last_use_outputs(n);
  std::vector<bool> dropped(full.output_space().count(), false);
  for (std::size_t i : last) dropped.at(i) = true;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < dropped.size(); ++i) {
    if (!dropped[i]) keep.push_back(i);
  }

  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t p = 0; p < panel_size; ++p) {
    const DensityOperator rho = random_density(HilbertFactorization::uniform(d, n - 1), rng);
    const DensityOperator sigma = random_density(HilbertFactorization({d}), rng);
    const DensityOperator out = apply(full, tensor_product(rho, sigma));
    const DensityOperator marginal = partial_trace(out, keep);
    const DensityOperator expected = apply(reduced, rho);
    if (marginal.dim() != expected.dim()) {
      throw DimensionError("marginal_consistency: marginal and Λ^(n−1) output dims differ");
    }
    worst = std::max(worst, max_abs(marginal.matrix() - expected.matrix()));
  }
  return worst;
}

bool marginal_consistency(const MultiUseFamily& family, std::size_t n, double tolerance,
                          std::size_t panel_size, std::uint64_t seed) {
  return marginal_deviation(family, n, panel_size, seed) <= tolerance;
}

std::vector<double> pm_rate(const MultiUseFamily& family, std::size_t n_max) {
  if (n_max < 1) throw PreconditionError("pm_rate: n_max must be >= 1");
  std::vector<double> out;
  for (std::size_t n = 1; n <= n_max; ++n) {
    out.push_back(std::log2(static_cast<double>(family.env_dim(n))) / static_cast<double>(n));
  }
  return out;
}

}  // namespace qlink
