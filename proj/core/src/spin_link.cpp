#include "qlink/spin_link.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <unordered_map>

#include "qlink/errors.hpp"

namespace qlink {

namespace {

std::uint64_t pow3(std::size_t k) {
  std::uint64_t p = 1;
  for (std::size_t i = 0; i < k; ++i) p *= 3;
  return p;
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::uint64_t spin_bit(std::size_t spins, std::size_t q) { return std::uint64_t{1} << (spins - 1 - q); }

}  // namespace

// ---------------------------------------------------------------------------
// Model and schedule

LinkModel LinkModel::uniform(std::size_t sites, double coupling, double tau, std::size_t chains) {
  LinkModel m;
  m.chains = chains;
  m.sites = sites;
  m.tau = tau;
  m.couplings.assign(chains, std::vector<double>(sites > 0 ? sites - 1 : 0, coupling));
  return m;
}

void LinkModel::validate() const {
  if (chains < 1 || sites < 1) throw PreconditionError("LinkModel: chains and sites must be >= 1");
  if (spins() > 24) throw PreconditionError("LinkModel: at most 24 mediator spins are supported");
  if (couplings.size() != chains) throw PreconditionError("LinkModel: one coupling row per chain required");
  for (const auto& row : couplings) {
    if (row.size() != sites - 1) throw PreconditionError("LinkModel: couplings must cover sites-1 bonds per chain");
  }
}

Schedule::Schedule(std::vector<std::size_t> budgets) : budgets_(std::move(budgets)) {
  for (std::size_t b : budgets_) {
    if (b < 1) throw PreconditionError("Schedule: every m_k must be >= 1");
  }
  for (std::size_t b : budgets_) {
    offsets_.push_back(total_);
    total_ += b;
  }
}

Schedule Schedule::uniform(std::size_t uses, std::size_t budget) {
  return Schedule(std::vector<std::size_t>(uses, budget));
}

Schedule Schedule::hypothetical(std::vector<std::size_t> budgets) {
  Schedule s;
  s.budgets_ = std::move(budgets);
  for (std::size_t b : s.budgets_) {
    s.offsets_.push_back(s.total_);
    s.total_ += b;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Hamiltonian

std::size_t popcount(std::uint64_t x) noexcept { return static_cast<std::size_t>(std::popcount(x)); }

std::vector<std::uint64_t> mediator_configs(std::size_t spins, std::size_t e) {
  std::vector<std::uint64_t> out;
  const std::uint64_t n = std::uint64_t{1} << spins;
  for (std::uint64_t x = 0; x < n; ++x) {
    if (popcount(x) == e) out.push_back(x);
  }
  return out;
}

Matrix build_hamiltonian(const LinkModel& model, const std::vector<std::uint64_t>& configs) {
  model.validate();
  std::unordered_map<std::uint64_t, Eigen::Index> where;
  for (std::size_t i = 0; i < configs.size(); ++i) where.emplace(configs[i], static_cast<Eigen::Index>(i));
  const auto d = static_cast<Eigen::Index>(configs.size());
  Matrix h = Matrix::Zero(d, d);
  const std::size_t spins = model.spins();
  for (Eigen::Index col = 0; col < d; ++col) {
    const std::uint64_t x = configs[static_cast<std::size_t>(col)];
    for (std::size_t c = 0; c < model.chains; ++c) {
      for (std::size_t s = 0; s + 1 < model.sites; ++s) {
        const double j = model.couplings[c][s];
        const std::uint64_t b1 = spin_bit(spins, c * model.sites + s);
        const std::uint64_t b2 = spin_bit(spins, c * model.sites + s + 1);
        const bool u1 = (x & b1) != 0, u2 = (x & b2) != 0;
        h(col, col) += 0.5 * j * (u1 == u2 ? 1.0 : -1.0);
        if (u1 != u2) {
          const auto it = where.find(x ^ (b1 | b2));
          if (it == where.end()) throw DimensionError("build_hamiltonian: configuration set not closed");
          h(it->second, col) += j;
        }
      }
    }
  }
  return h;
}

Matrix build_hamiltonian(const LinkModel& model) {
  std::vector<std::uint64_t> all(model.mediator_dim());
  for (std::uint64_t x = 0; x < all.size(); ++x) all[x] = x;
  return build_hamiltonian(model, all);
}

std::size_t sector_dimension(const LinkModel& model, std::size_t registers, std::size_t excitations) {
  std::uint64_t total = 0;
  for (std::size_t z = 0; z <= std::min(registers, excitations); ++z) {
    const std::size_t e = excitations - z;
    if (e > model.spins()) continue;
    total += binomial(registers, z) * (std::uint64_t{1} << z) * binomial(model.spins(), e);
  }
  return static_cast<std::size_t>(total);
}

// ---------------------------------------------------------------------------
// Sector basis

std::uint64_t encode_registers(const std::vector<std::uint8_t>& digits) {
  std::uint64_t r = 0;
  for (std::uint8_t d : digits) r = r * 3 + d;
  return r;
}

std::vector<std::uint8_t> decode_registers(std::uint64_t index, std::size_t count) {
  std::vector<std::uint8_t> out(count);
  for (std::size_t k = count; k-- > 0;) {
    out[k] = static_cast<std::uint8_t>(index % 3);
    index /= 3;
  }
  return out;
}

SectorBasis::SectorBasis(const LinkModel& model, std::size_t registers, std::size_t excitations)
    : registers_(registers), spins_(model.spins()), excitations_(excitations) {
  model.validate();
  if (static_cast<double>(registers) * std::log2(3.0) + static_cast<double>(spins_) > 63.0) {
    throw PreconditionError("SectorBasis: register and spin count exceed the 64-bit configuration key");
  }
  mask_ = (std::uint64_t{1} << spins_) - 1;
  std::vector<std::vector<std::uint64_t>> by_count(spins_ + 1);
  for (std::size_t e = 0; e <= spins_ && e <= excitations; ++e) by_count[e] = mediator_configs(spins_, e);

  // Depth-first over register digits in lexicographic order, pruning prefixes
  // whose excitation count can no longer fit the sector.
  auto visit = [&](auto&& self, std::size_t pos, std::uint64_t r, std::size_t z) -> void {
    if (z > excitations) return;
    if (z + (registers - pos) + spins_ < excitations) return;
    if (pos == registers) {
      const std::size_t e = excitations - z;
      blocks_.push_back({keys_.size(), e});
      for (std::uint64_t mu : by_count[e]) keys_.push_back((r << spins_) | mu);
      return;
    }
    for (std::uint8_t d = 0; d < 3; ++d) self(self, pos + 1, r * 3 + d, z + (d != kEmpty ? 1 : 0));
  };
  visit(visit, 0, 0, 0);
}

Configuration SectorBasis::config(std::size_t i) const {
  return {decode_registers(register_index(i), registers_), mediator(i)};
}

std::optional<std::size_t> SectorBasis::index_of(std::uint64_t reg, std::uint64_t mediator) const {
  const std::uint64_t key = (reg << spins_) | mediator;
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::optional<std::size_t> SectorBasis::index_of(const Configuration& c) const {
  if (c.registers.size() != registers_) throw DimensionError("SectorBasis::index_of: register count");
  return index_of(encode_registers(c.registers), c.mediator);
}

// ---------------------------------------------------------------------------
// Simulator

LinkSimulator::LinkSimulator(LinkModel model, Schedule schedule)
    : model_(std::move(model)),
      schedule_(std::move(schedule)),
      basis_(model_, schedule_.uses() + schedule_.total(), schedule_.uses()) {
  if (model_.chains != 2) throw PreconditionError("LinkSimulator: the dual-rail link needs exactly 2 chains");
  for (std::size_t e = 0; e <= std::min(schedule_.uses(), model_.spins()); ++e) {
    propagators_.push_back(herm_exp(build_hamiltonian(model_, mediator_configs(model_.spins(), e)), model_.tau));
  }
  for (std::size_t k = 0; k < schedule_.uses(); ++k) alice_perm_.push_back(swap_permutation(k, 0));
  for (std::size_t j = 0; j < schedule_.total(); ++j) {
    bob_perm_.push_back(swap_permutation(schedule_.uses() + j, model_.sites - 1));
  }
}

std::vector<std::size_t> LinkSimulator::swap_permutation(std::size_t reg, std::size_t site) const {
  const std::size_t spins = model_.spins();
  const std::uint64_t b0 = spin_bit(spins, site);
  const std::uint64_t b1 = spin_bit(spins, model_.sites + site);
  const std::uint64_t place = pow3(registers() - 1 - reg);
  std::vector<std::size_t> perm(basis_.size());
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const std::uint64_t r = basis_.register_index(i);
    const std::uint64_t mu = basis_.mediator(i);
    const auto s = static_cast<std::uint8_t>((r / place) % 3);
    const bool u0 = (mu & b0) != 0, u1 = (mu & b1) != 0;
    std::uint8_t ns = s;
    std::uint64_t nmu = mu;
    if (s == kZero && !u0 && !u1) {
      ns = kEmpty;
      nmu |= b0;
    } else if (s == kOne && !u0 && !u1) {
      ns = kEmpty;
      nmu |= b1;
    } else if (s == kEmpty && u0 && !u1) {
      ns = kZero;
      nmu &= ~b0;
    } else if (s == kEmpty && !u0 && u1) {
      ns = kOne;
      nmu &= ~b1;
    }
    if (ns == s) {
      perm[i] = i;
      continue;
    }
    const std::uint64_t nr = r - s * place + ns * place;
    const auto j = basis_.index_of(nr, nmu);
    if (!j) throw InvariantViolation("LinkSimulator: gate left the excitation sector");
    perm[i] = *j;
  }
  return perm;
}

Vector LinkSimulator::initial_state(const Vector& message) const {
  const std::size_t n = schedule_.uses();
  if (static_cast<std::uint64_t>(message.size()) != (std::uint64_t{1} << n)) {
    throw DimensionError("initial_state: message must have 2^n amplitudes");
  }
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim()));
  std::vector<std::uint8_t> digits(registers(), kEmpty);
  for (std::uint64_t x = 0; x < static_cast<std::uint64_t>(message.size()); ++x) {
    for (std::size_t k = 0; k < n; ++k) digits[k] = static_cast<std::uint8_t>((x >> (n - 1 - k)) & 1U);
    const auto i = basis_.index_of(encode_registers(digits), 0);
    v(static_cast<Eigen::Index>(*i)) = message(static_cast<Eigen::Index>(x));
  }
  return v;
}

void LinkSimulator::free_evolution(Vector& v) const {
  for (const auto& b : basis_.blocks()) {
    const Matrix& u = propagators_[b.excitations];
    const auto start = static_cast<Eigen::Index>(b.start);
    v.segment(start, u.rows()) = (u * v.segment(start, u.rows())).eval();
  }
}

namespace {
void permute(Vector& v, const std::vector<std::size_t>& perm) {
  Vector out(v.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out(static_cast<Eigen::Index>(perm[i])) = v(static_cast<Eigen::Index>(i));
  v = std::move(out);
}
}  // namespace

void LinkSimulator::alice_gate(Vector& v, std::size_t k) const { permute(v, alice_perm_.at(k)); }

void LinkSimulator::bob_gate(Vector& v, std::size_t j) const { permute(v, bob_perm_.at(j)); }

void LinkSimulator::apply_v(Vector& v, std::size_t k) const {
  for (std::size_t l = 0; l < schedule_.budget(k); ++l) {
    free_evolution(v);
    bob_gate(v, schedule_.offset(k) + l);
  }
}

void LinkSimulator::apply_w(Vector& v) const {
  for (std::size_t k = 0; k < schedule_.uses(); ++k) {
    alice_gate(v, k);
    apply_v(v, k);
  }
}

template <class F>
Matrix LinkSimulator::as_matrix(F&& f) const {
  const auto d = static_cast<Eigen::Index>(dim());
  Matrix m(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    Vector v = Vector::Zero(d);
    v(c) = 1.0;
    f(v);
    m.col(c) = v;
  }
  return m;
}

Matrix LinkSimulator::free_matrix() const {
  return as_matrix([this](Vector& v) { free_evolution(v); });
}
Matrix LinkSimulator::alice_gate_matrix(std::size_t k) const {
  return as_matrix([this, k](Vector& v) { alice_gate(v, k); });
}
Matrix LinkSimulator::bob_gate_matrix(std::size_t j) const {
  return as_matrix([this, j](Vector& v) { bob_gate(v, j); });
}
Matrix LinkSimulator::v_matrix(std::size_t k) const {
  return as_matrix([this, k](Vector& v) { apply_v(v, k); });
}
Matrix LinkSimulator::w_matrix() const {
  return as_matrix([this](Vector& v) { apply_w(v); });
}

RealVector LinkSimulator::mediator_excitations() const {
  RealVector z(static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < dim(); ++i) z(static_cast<Eigen::Index>(i)) = static_cast<double>(popcount(basis_.mediator(i)));
  return z;
}

RealVector LinkSimulator::total_excitations() const {
  RealVector z = mediator_excitations();
  for (std::size_t i = 0; i < dim(); ++i) {
    for (std::uint8_t s : decode_registers(basis_.register_index(i), registers())) {
      if (s != kEmpty) z(static_cast<Eigen::Index>(i)) += 1.0;
    }
  }
  return z;
}

// ---------------------------------------------------------------------------
// Induced channels

namespace {

enum class Keep { kAll, kAlice, kBob };

// Kraus operators ⟨μ, t|W|x, E^m, ω⟩ where t runs over the traced registers;
// rows index the kept registers. Only (μ, t) pairs that occur are built.
KrausChannel induced_channel(const LinkModel& model, const Schedule& schedule, Keep keep) {
  const LinkSimulator sim(model, schedule);
  const std::size_t n = schedule.uses();
  const std::size_t m = schedule.total();
  const std::size_t kept = keep == Keep::kAll ? n + m : (keep == Keep::kAlice ? n : m);
  const std::uint64_t bob_dim = pow3(m);
  const auto din = static_cast<Eigen::Index>(std::uint64_t{1} << n);
  const auto dout = static_cast<Eigen::Index>(pow3(kept));
  std::map<std::pair<std::uint64_t, std::uint64_t>, Matrix> ops;
  for (Eigen::Index x = 0; x < din; ++x) {
    Vector e = Vector::Zero(din);
    e(x) = 1.0;
    Vector v = sim.initial_state(e);
    sim.apply_w(v);
    for (std::size_t i = 0; i < sim.dim(); ++i) {
      const Complex a = v(static_cast<Eigen::Index>(i));
      if (a == Complex(0.0)) continue;
      const std::uint64_t r = sim.basis().register_index(i);
      std::uint64_t row = r, traced = 0;
      if (keep == Keep::kAlice) {
        row = r / bob_dim;
        traced = r % bob_dim;
      } else if (keep == Keep::kBob) {
        row = r % bob_dim;
        traced = r / bob_dim;
      }
      auto [it, fresh] = ops.try_emplace({sim.basis().mediator(i), traced});
      if (fresh) it->second = Matrix::Zero(dout, din);
      it->second(static_cast<Eigen::Index>(row), x) = a;
    }
  }
  std::vector<Matrix> out;
  for (auto& [key, k] : ops) out.push_back(std::move(k));
  return KrausChannel(std::move(out), HilbertFactorization::uniform(2, n), HilbertFactorization::uniform(3, kept));
}

}  // namespace

KrausChannel channel_a_to_ab(const LinkModel& model, const Schedule& schedule) {
  return induced_channel(model, schedule, Keep::kAll);
}

KrausChannel channel_a_to_b(const LinkModel& model, const Schedule& schedule) {
  return induced_channel(model, schedule, Keep::kBob);
}

KrausChannel channel_a_to_a(const LinkModel& model, const Schedule& schedule) {
  return induced_channel(model, schedule, Keep::kAlice);
}

MultiUseFamily link_family(const LinkModel& model, std::size_t budget) {
  auto gen = [model, budget](std::size_t n) { return channel_a_to_ab(model, Schedule::uniform(n, budget)); };
  auto last = [budget](std::size_t n) {
    std::vector<std::size_t> f{n - 1};
    for (std::size_t l = 0; l < budget; ++l) f.push_back(n + (n - 1) * budget + l);
    return f;
  };
  const std::size_t dm = model.mediator_dim();
  return MultiUseFamily(gen, 2, last, [dm](std::size_t) { return dm; });
}

}  // namespace qlink
