#include "qlink/mixing.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "qlink/errors.hpp"

namespace qlink {

Vector vectorize(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

Matrix unvectorize(const Vector& v, Eigen::Index dim) { return Eigen::Map<const Matrix>(v.data(), dim, dim); }

Superoperator::Superoperator(const KrausChannel& source) : source_(source) {
  if (source.input_dim() != source.output_dim()) {
    throw DimensionError("Superoperator: channel must map a space to itself");
  }
  const auto d = static_cast<Eigen::Index>(source.input_dim());
  matrix_ = Matrix::Zero(d * d, d * d);
  for (const Matrix& k : source.operators()) matrix_ += tensor_product(Matrix(k.conjugate()), k);
}

Matrix Superoperator::apply(const Matrix& rho) const {
  return unvectorize(matrix_ * vectorize(rho), rho.rows());
}

SpectralReport to_spectrum(const Superoperator& sup) {
  Eigen::ComplexEigenSolver<Matrix> es(sup.matrix());
  const auto& vals = es.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(vals.size()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double ma = std::abs(vals(a)), mb = std::abs(vals(b));
    if (std::abs(ma - mb) > 1e-13) return ma > mb;
    return std::arg(vals(a)) < std::arg(vals(b));
  });

  SpectralReport r;
  const auto d = static_cast<Eigen::Index>(sup.dim());
  std::size_t peripheral = 0;
  for (Eigen::Index idx : order) {
    const Complex lambda = vals(idx);
    r.eigenvalues.push_back(lambda);
    if (std::abs(lambda) > 1.0 - SpectralReport::kPeripheral) ++peripheral;
    if (std::abs(lambda - 1.0) <= SpectralReport::kPeripheral) {
      Matrix x = unvectorize(es.eigenvectors().col(idx), d);
      const Complex tr = x.trace();
      if (std::abs(tr) < 1e-12) continue;
      x /= tr;
      x = 0.5 * (x + x.adjoint()).eval();
      r.fixed_points.emplace_back(x, sup.source().input_space());
    }
  }
  r.is_mixing = peripheral == 1 && r.fixed_points.size() == 1;
  r.gap = r.eigenvalues.size() > 1 ? 1.0 - std::abs(r.eigenvalues[1]) : 1.0;
  if (r.fixed_points.size() == 1) r.fixed_point_purity = r.fixed_points.front().purity();
  return r;
}

double fixed_point_purity(const SpectralReport& report) {
  if (report.fixed_points.size() != 1) {
    throw PreconditionError("fixed_point_purity: the map has " + std::to_string(report.fixed_points.size()) +
                            " fixed points");
  }
  return report.fixed_points.front().purity();
}

bool is_information_draining(const SpectralReport& report) {
  return fixed_point_purity(report) >= 1.0 - 1e-9;
}

std::vector<std::uint64_t> mediator_sector(const LinkModel& model, std::size_t max_excitations) {
  model.validate();
  std::vector<std::uint64_t> out;
  for (std::uint64_t x = 0; x < model.mediator_dim(); ++x) {
    if (popcount(x) <= max_excitations) out.push_back(x);
  }
  return out;
}

namespace {

std::uint64_t spin_bit(const LinkModel& model, std::size_t chain, std::size_t site) {
  return std::uint64_t{1} << (model.spins() - 1 - (chain * model.sites + site));
}

struct SwapResult {
  std::uint8_t symbol;
  std::uint64_t mediator;
};

// The dual-rail transposition between one qutrit and the spin pair at `site`.
SwapResult rail_swap(const LinkModel& model, std::size_t site, std::uint8_t s, std::uint64_t mu) {
  const std::uint64_t b0 = spin_bit(model, 0, site), b1 = spin_bit(model, 1, site);
  const bool u0 = (mu & b0) != 0, u1 = (mu & b1) != 0;
  if (s == kZero && !u0 && !u1) return {kEmpty, mu | b0};
  if (s == kOne && !u0 && !u1) return {kEmpty, mu | b1};
  if (s == kEmpty && u0 && !u1) return {kZero, mu & ~b0};
  if (s == kEmpty && !u0 && u1) return {kOne, mu & ~b1};
  return {s, mu};
}

}  // namespace

KrausChannel receiver_map(const LinkModel& model, std::size_t max_excitations) {
  if (model.chains != 2) throw PreconditionError("receiver_map: the dual-rail link needs exactly 2 chains");
  const std::vector<std::uint64_t> configs = mediator_sector(model, max_excitations);
  std::map<std::uint64_t, Eigen::Index> where;
  for (std::size_t i = 0; i < configs.size(); ++i) where.emplace(configs[i], static_cast<Eigen::Index>(i));
  const auto d = static_cast<Eigen::Index>(configs.size());
  const Matrix u = herm_exp(build_hamiltonian(model, configs), model.tau);

  std::vector<Matrix> gates(3, Matrix::Zero(d, d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const SwapResult r = rail_swap(model, model.sites - 1, kEmpty, configs[static_cast<std::size_t>(i)]);
    gates[r.symbol](where.at(r.mediator), i) = 1.0;
  }
  std::vector<Matrix> ops;
  for (const Matrix& g : gates) ops.push_back(g * u);
  const HilbertFactorization space({static_cast<std::size_t>(d)});
  return KrausChannel(std::move(ops), space, space);
}

std::vector<double> iterate_convergence(const KrausChannel& ch, const DensityOperator& omega0, std::size_t steps) {
  const SpectralReport rep = to_spectrum(Superoperator(ch));
  if (!rep.is_mixing) throw PreconditionError("iterate_convergence: map is not mixing");
  const DensityOperator& fixed = rep.fixed_points.front();
  std::vector<double> out;
  DensityOperator rho = omega0;
  out.push_back(trace_distance(rho, fixed));
  for (std::size_t k = 0; k < steps; ++k) {
    rho = apply(ch, rho);
    out.push_back(trace_distance(rho, fixed));
  }
  return out;
}

double tail_decay_ratio(const std::vector<double>& distances, std::size_t window) {
  if (distances.size() <= window || window == 0) {
    throw PreconditionError("tail_decay_ratio: sequence shorter than the window");
  }
  const double last = distances.back();
  const double first = distances[distances.size() - 1 - window];
  if (first <= 0.0) return 0.0;
  return std::pow(last / first, 1.0 / static_cast<double>(window));
}

KrausChannel effective_memoryless(const LinkModel& model, std::size_t max_excitations) {
  const KrausChannel n = receiver_map(model, max_excitations);
  const SpectralReport rep = to_spectrum(Superoperator(n));
  if (!rep.is_mixing) throw PreconditionError("effective_memoryless: receiver map is not mixing");
  const std::vector<std::uint64_t> configs = mediator_sector(model, max_excitations);

  Eigen::SelfAdjointEigenSolver<Matrix> es(rep.fixed_points.front().matrix());
  std::vector<Matrix> ops;
  for (Eigen::Index r = 0; r < es.eigenvalues().size(); ++r) {
    const double p = es.eigenvalues()(r);
    if (p <= 1e-14) continue;
    std::map<std::uint64_t, Matrix> by_mu;
    for (std::uint8_t x = 0; x < 2; ++x) {
      for (std::size_t c = 0; c < configs.size(); ++c) {
        const Complex amp = std::sqrt(p) * es.eigenvectors()(static_cast<Eigen::Index>(c), r);
        if (amp == Complex(0.0)) continue;
        const SwapResult s = rail_swap(model, 0, x, configs[c]);
        auto [it, fresh] = by_mu.try_emplace(s.mediator);
        if (fresh) it->second = Matrix::Zero(3, 2);
        it->second(s.symbol, x) += amp;
      }
    }
    for (auto& [mu, k] : by_mu) ops.push_back(std::move(k));
  }
  return KrausChannel(std::move(ops), HilbertFactorization({2}), HilbertFactorization({3}));
}

double memoryless_distance(const LinkModel& model, const Schedule& schedule, std::size_t max_excitations) {
  const KrausChannel single = effective_memoryless(model, max_excitations);
  KrausChannel product = single;
  for (std::size_t k = 1; k < schedule.uses(); ++k) product = compose(product, single, ComposeMode::kParallel);
  return choi_distance(channel_a_to_a(model, schedule), product);
}

}  // namespace qlink
