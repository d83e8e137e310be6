#include "qlink/dual_rail.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <Eigen/SVD>

#include "qlink/channel.hpp"
#include "qlink/errors.hpp"
#include "qlink/zero_error.hpp"

namespace qlink {

namespace {

Vector masked(const Vector& v, const std::vector<bool>& mask) {
  Vector out = v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) out(i) = 0.0;
  }
  return out;
}

Matrix masked_columns(Matrix m, const std::vector<bool>& mask) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (!mask[static_cast<std::size_t>(i)]) m.row(i).setZero();
  }
  return m;
}

}  // namespace

DualRailProtocol::DualRailProtocol(LinkModel model, Schedule schedule)
    : sim_(std::move(model), std::move(schedule)) {
  const Schedule& s = sim_.schedule();
  const std::size_t n = s.uses();
  const std::size_t d = sim_.dim();
  yes_mask_.assign(d, true);
  ground_mask_.assign(d, false);
  step_masks_.assign(n, std::vector<bool>(d, false));
  for (std::size_t i = 0; i < d; ++i) {
    const Configuration c = sim_.basis().config(i);
    ground_mask_[i] = c.mediator == 0;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t count = 0;
      for (std::size_t l = 0; l < s.budget(k); ++l) count += c.registers[n + s.offset(k) + l] != kEmpty;
      if (count != 1) yes_mask_[i] = false;
      step_masks_[k][i] = count == 1 && c.mediator == 0;
    }
  }
}

Vector DualRailProtocol::project_yes(const Vector& v) const { return masked(v, yes_mask_); }

Vector DualRailProtocol::project_no(const Vector& v) const { return v - project_yes(v); }

std::vector<double> DualRailProtocol::success_probabilities(const Vector& psi) const {
  Vector v = sim_.initial_state(psi);
  std::vector<double> p;
  for (std::size_t k = 0; k < uses(); ++k) {
    sim_.alice_gate(v, k);
    sim_.apply_v(v, k);
    v = masked(v, step_masks_[k]);
    const double pk = v.squaredNorm();
    p.push_back(pk);
    if (pk <= 0.0) {
      p.resize(uses(), 0.0);
      break;
    }
    v /= std::sqrt(pk);
  }
  return p;
}

ProtocolRun DualRailProtocol::run(const Vector& psi) const {
  if (static_cast<std::uint64_t>(psi.size()) != (std::uint64_t{1} << uses())) {
    throw PreconditionError("run: input must have 2^n amplitudes");
  }
  if (std::abs(psi.squaredNorm() - 1.0) > 1e-10) throw PreconditionError("run: input must be normalized");

  ProtocolRun r;
  r.input = psi;
  r.final_state = sim_.initial_state(psi);
  sim_.apply_w(r.final_state);
  r.p_list = success_probabilities(psi);
  r.pi_n = 1.0;
  for (double p : r.p_list) r.pi_n *= p;

  const Vector ground = masked(r.final_state, ground_mask_);
  r.eta0 = ground.squaredNorm();
  const Vector rest = r.final_state - ground;
  r.phi_component = r.eta0 > 0.0 ? Vector(ground / std::sqrt(r.eta0)) : Vector(Vector::Zero(ground.size()));
  r.chi_component = r.eta0 < 1.0 - 1e-15 ? Vector(rest / std::sqrt(1.0 - r.eta0)) : Vector(Vector::Zero(rest.size()));

  const Vector yes = project_yes(r.final_state);
  const double pyes = yes.squaredNorm();
  r.yes_component = pyes > 0.0 ? Vector(yes / std::sqrt(pyes)) : Vector(Vector::Zero(yes.size()));
  const double ratio = r.eta0 > 0.0 ? std::min(1.0, r.pi_n / r.eta0) : 0.0;
  const Vector drest = r.phi_component - std::sqrt(ratio) * r.yes_component;
  r.delta_component = ratio < 1.0 - 1e-15 ? Vector(drest / std::sqrt(1.0 - ratio)) : Vector(Vector::Zero(drest.size()));

  double res = 0.0;
  res = std::max(res, (r.final_state - std::sqrt(r.eta0) * r.phi_component -
                       std::sqrt(std::max(0.0, 1.0 - r.eta0)) * r.chi_component).cwiseAbs().maxCoeff());
  res = std::max(res, (r.phi_component - std::sqrt(ratio) * r.yes_component -
                       std::sqrt(1.0 - ratio) * r.delta_component).cwiseAbs().maxCoeff());
  res = std::max(res, std::abs(r.phi_component.dot(r.chi_component)));
  res = std::max(res, masked(r.chi_component, ground_mask_).cwiseAbs().maxCoeff());
  res = std::max(res, std::abs(r.yes_component.dot(r.delta_component)));
  res = std::max(res, std::abs(pyes - r.pi_n));
  res = std::max(res, std::max(0.0, r.pi_n - r.eta0));
  r.decomposition_residual = res;

  // Schmidt decomposition across (registers | mediator).
  std::map<std::uint64_t, Eigen::Index> rows, cols;
  for (std::size_t i = 0; i < sim_.dim(); ++i) {
    rows.try_emplace(sim_.basis().register_index(i), 0);
    cols.try_emplace(sim_.basis().mediator(i), 0);
  }
  Eigen::Index t = 0;
  for (auto& [key, idx] : rows) idx = t++;
  t = 0;
  for (auto& [key, idx] : cols) idx = t++;
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < sim_.dim(); ++i) {
    m(rows.at(sim_.basis().register_index(i)), cols.at(sim_.basis().mediator(i))) =
        r.final_state(static_cast<Eigen::Index>(i));
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinV);
  for (Eigen::Index j = 0; j < svd.singularValues().size(); ++j) {
    if (svd.singularValues()(j) > 1e-14) r.schmidt_coefficients.push_back(svd.singularValues()(j));
  }
  r.schmidt_ground_overlap = std::abs(svd.matrixV()(cols.at(0), 0));
  return r;
}

double DualRailProtocol::input_independence(const std::vector<Vector>& panel) const {
  if (panel.empty()) return 0.0;
  std::vector<double> lo, hi;
  for (const Vector& psi : panel) {
    const ProtocolRun r = run(psi);
    std::vector<double> v = r.p_list;
    v.push_back(r.eta0);
    if (lo.empty()) {
      lo = v;
      hi = v;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      lo[i] = std::min(lo[i], v[i]);
      hi[i] = std::max(hi[i], v[i]);
    }
  }
  double spread = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) spread = std::max(spread, hi[i] - lo[i]);
  return spread;
}

DualRailProtocol::ParityOutcome DualRailProtocol::parity_measurement(const ProtocolRun& run, Rng& rng) const {
  const Vector yes = project_yes(run.final_state);
  const double p = std::clamp(yes.squaredNorm(), 0.0, 1.0);
  std::bernoulli_distribution coin(p);
  ParityOutcome out;
  out.yes = coin(rng);
  out.probability = out.yes ? p : 1.0 - p;
  const Vector post = out.yes ? yes : Vector(run.final_state - yes);
  out.post_state = post / std::sqrt(out.probability);
  return out;
}

DualRailProtocol::SamplingReport DualRailProtocol::sample_parity(const ProtocolRun& run, Rng& rng,
                                                                 std::size_t shots) const {
  const double p = std::clamp(project_yes(run.final_state).squaredNorm(), 0.0, 1.0);
  std::bernoulli_distribution coin(p);
  SamplingReport s;
  s.shots = shots;
  for (std::size_t i = 0; i < shots; ++i) s.yes_count += coin(rng) ? 1 : 0;
  s.frequency = static_cast<double>(s.yes_count) / static_cast<double>(shots);
  s.sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(shots));
  s.within_three_sigma = std::abs(s.frequency - run.pi_n) <= 3.0 * s.sigma + 1e-12;
  return s;
}

Matrix DualRailProtocol::evolved_basis() const {
  const auto dx = static_cast<Eigen::Index>(std::uint64_t{1} << uses());
  Matrix out(static_cast<Eigen::Index>(sim_.dim()), dx);
  for (Eigen::Index x = 0; x < dx; ++x) {
    Vector e = Vector::Zero(dx);
    e(x) = 1.0;
    Vector v = sim_.initial_state(e);
    sim_.apply_w(v);
    out.col(x) = v;
  }
  return out;
}

std::vector<std::vector<Complex>> DualRailProtocol::bob_profiles() const {
  const std::size_t n = uses();
  const Schedule& s = sim_.schedule();
  Vector e = Vector::Zero(static_cast<Eigen::Index>(std::uint64_t{1} << n));
  e(0) = 1.0;
  Vector v = sim_.initial_state(e);
  sim_.apply_w(v);
  v = project_yes(v);
  Eigen::Index best = 0;
  v.cwiseAbs().maxCoeff(&best);
  const Configuration anchor = sim_.basis().config(static_cast<std::size_t>(best));

  std::vector<std::vector<Complex>> profiles(n);
  for (std::size_t k = 0; k < n; ++k) {
    double norm = 0.0;
    for (std::size_t l = 0; l < s.budget(k); ++l) {
      Configuration c = anchor;
      for (std::size_t q = 0; q < s.budget(k); ++q) c.registers[n + s.offset(k) + q] = q == l ? kZero : kEmpty;
      const auto idx = sim_.basis().index_of(c);
      const Complex a = idx ? v(static_cast<Eigen::Index>(*idx)) : Complex(0.0);
      profiles[k].push_back(a);
      norm += std::norm(a);
    }
    for (Complex& a : profiles[k]) a /= std::sqrt(norm);
  }
  return profiles;
}

DualRailProtocol::YesRecovery DualRailProtocol::recover_yes(const ProtocolRun& run) const {
  if (run.pi_n <= 1e-12) throw PreconditionError("recover_yes: YES branch has zero probability");
  const std::size_t n = uses();
  const Schedule& s = sim_.schedule();
  const auto profiles = bob_profiles();

  YesRecovery out;
  out.decoded = Vector::Zero(run.input.size());
  for (std::size_t i = 0; i < sim_.dim(); ++i) {
    if (!yes_mask_[i]) continue;
    const Complex amp = run.yes_component(static_cast<Eigen::Index>(i));
    if (amp == Complex(0.0)) continue;
    const Configuration c = sim_.basis().config(i);
    Complex w = 1.0;
    std::uint64_t x = 0;
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t l = 0; l < s.budget(k); ++l) {
        const std::uint8_t sym = c.registers[n + s.offset(k) + l];
        if (sym == kEmpty) continue;
        w *= std::conj(profiles[k][l]);
        x = (x << 1) | sym;
      }
    }
    out.decoded(static_cast<Eigen::Index>(x)) += w * amp;
  }
  out.fidelity = std::norm(run.input.dot(out.decoded));

  // U' = Σ|f_x⟩⟨e_x| + |e_x⟩⟨f_x| + (I − P_e − P_f).
  const Matrix f = masked_columns(evolved_basis(), yes_mask_) / std::sqrt(run.pi_n);
  const auto dx = static_cast<Eigen::Index>(run.input.size());
  Matrix e(static_cast<Eigen::Index>(sim_.dim()), dx);
  for (Eigen::Index x = 0; x < dx; ++x) {
    Vector ex = Vector::Zero(dx);
    ex(x) = 1.0;
    e.col(x) = sim_.initial_state(ex);
  }
  auto u_prime = [&](const Matrix& v) -> Matrix {
    const Matrix ev = e.adjoint() * v, fv = f.adjoint() * v;
    return f * ev + e * fv + v - e * ev - f * fv;
  };
  const Vector mapped = u_prime(sim_.initial_state(run.input)).col(0);
  out.swap_residual = (mapped - run.yes_component).cwiseAbs().maxCoeff();
  Matrix c(e.rows(), 2 * dx);
  c << e, f;
  const Matrix uc = u_prime(c);
  out.unitarity_residual = max_abs(uc.adjoint() * uc - Matrix::Identity(2 * dx, 2 * dx));
  return out;
}

DualRailProtocol::NoBranchState DualRailProtocol::no_branch_state(const ProtocolRun& run) const {
  const Vector no = project_no(run.final_state);
  std::map<std::uint64_t, Eigen::Index> rows, cols;
  for (std::size_t i = 0; i < sim_.dim(); ++i) {
    if (no(static_cast<Eigen::Index>(i)) == Complex(0.0)) continue;
    rows.try_emplace(sim_.basis().register_index(i), 0);
    cols.try_emplace(sim_.basis().mediator(i), 0);
  }
  NoBranchState out;
  Eigen::Index t = 0;
  for (auto& [key, idx] : rows) {
    idx = t++;
    out.configurations.push_back(key);
  }
  t = 0;
  for (auto& [key, idx] : cols) idx = t++;
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < sim_.dim(); ++i) {
    const Complex v = no(static_cast<Eigen::Index>(i));
    if (v == Complex(0.0)) continue;
    a(rows.at(sim_.basis().register_index(i)), cols.at(sim_.basis().mediator(i))) = v;
  }
  const double pno = 1.0 - run.pi_n;
  out.sigma = pno > 1e-15 ? Matrix(a * a.adjoint() / pno) : Matrix(a * a.adjoint());
  return out;
}

std::vector<Matrix> DualRailProtocol::no_branch_kraus() const {
  const Matrix all = evolved_basis();
  const Matrix no = all - masked_columns(all, yes_mask_);
  std::map<std::uint64_t, Eigen::Index> rows;
  std::map<std::uint64_t, std::vector<std::size_t>> by_mu;
  for (std::size_t i = 0; i < sim_.dim(); ++i) {
    if (no.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff() == 0.0) continue;
    rows.try_emplace(sim_.basis().register_index(i), 0);
    by_mu[sim_.basis().mediator(i)].push_back(i);
  }
  Eigen::Index t = 0;
  for (auto& [key, idx] : rows) idx = t++;
  std::vector<Matrix> out;
  for (const auto& [mu, idx] : by_mu) {
    Matrix k = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), no.cols());
    for (std::size_t i : idx) k.row(rows.at(sim_.basis().register_index(i))) = no.row(static_cast<Eigen::Index>(i));
    out.push_back(std::move(k));
  }
  return out;
}

double DualRailProtocol::no_branch_residual(const Matrix& basis) const {
  const std::vector<Matrix> ops = no_branch_kraus();
  double pno = 0.0;
  for (const Matrix& k : ops) pno += k.col(0).squaredNorm();
  if (ops.empty() || pno <= 1e-12) return 0.0;
  std::vector<Matrix> kq;
  for (const Matrix& k : ops) kq.push_back(k * basis);
  const auto dim = basis.cols();
  double res = 0.0;
  for (std::size_t a = 0; a < kq.size(); ++a) {
    for (std::size_t b = 0; b < kq.size(); ++b) {
      const Matrix g = kq[a].adjoint() * kq[b] / pno;
      res = std::max(res, max_abs(g - g(0, 0) * Matrix::Identity(dim, dim)));
    }
  }
  return res;
}

double DualRailProtocol::no_branch_residual() const {
  const auto dx = static_cast<Eigen::Index>(std::uint64_t{1} << uses());
  return no_branch_residual(Matrix::Identity(dx, dx));
}

std::optional<Matrix> DualRailProtocol::no_branch_code_subspace() const {
  std::vector<Matrix> ops = no_branch_kraus();
  if (ops.empty()) return std::nullopt;
  const double dm = static_cast<double>(ops.size());
  const double logical = std::pow(2.0, static_cast<double>(uses()));
  if (logical <= 2.0 * dm * dm * (dm * dm + 1.0)) return std::nullopt;
  const auto rows = static_cast<std::size_t>(ops.front().rows());
  const KrausChannel ch(std::move(ops), HilbertFactorization::uniform(2, uses()), HilbertFactorization({rows}),
                        PruneZeros::kNo);
  try {
    const ClassicalZeroErrorCode code = greedy_classical_code(ch);
    return build_quantum_code(code, ch).isometry();
  } catch (const ConstructionError&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Resources

std::string to_string(FallbackMode mode) { return mode == FallbackMode::kTeleport ? "teleport" : "retry"; }

RateReport resource_accounting(std::size_t n, const std::vector<double>& pi_values, std::size_t mediator_dim,
                               FallbackMode mode, std::size_t rounds) {
  if (n == 0) throw PreconditionError("resource_accounting: n must be positive");
  if (pi_values.empty()) throw PreconditionError("resource_accounting: no success probabilities given");
  for (double p : pi_values) {
    if (!(p > 0.0 && p <= 1.0)) throw PreconditionError("resource_accounting: success probabilities must lie in (0,1]");
  }
  const double log3 = std::log2(3.0);
  const double dm2 = static_cast<double>(mediator_dim) * static_cast<double>(mediator_dim);
  const double overhead = std::log2(dm2 * (dm2 + 1.0));
  const double pi = pi_values.front();
  const double nd = static_cast<double>(n);

  RateReport r;
  r.mode = mode;
  r.epsilon = 1.0 - pi;
  r.n1 = nd * log3 + overhead;
  r.teleport_ebits = (1.0 - pi) * log3;
  r.teleport_cbits = 2.0 * (1.0 - pi) * log3;
  r.first_round_rate = nd / (nd + r.n1 * (1.0 - pi));
  if (mode == FallbackMode::kTeleport) return r;

  for (double p : pi_values) {
    if (std::abs(p - pi) > 1e-12) throw PreconditionError("resource_accounting: retry mode needs a uniform Π");
  }
  if (r.epsilon * log3 >= 1.0) throw PreconditionError("resource_accounting: ε·log2(3) must be below 1");
  r.asymptotic_rate = 1.0 - r.epsilon * log3;
  double ni = r.n1, eps_i = r.epsilon, denom = nd;
  for (std::size_t k = 1; k <= rounds; ++k) {
    denom += ni * eps_i;
    r.retry_rate_sequence.push_back(nd / denom);
    ni = ni * log3 + overhead;
    eps_i *= r.epsilon;
  }
  return r;
}

}  // namespace qlink
