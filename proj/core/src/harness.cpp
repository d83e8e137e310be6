#include "qlink/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "qlink/channel.hpp"
#include "qlink/dual_rail.hpp"
#include "qlink/errors.hpp"
#include "qlink/mixing.hpp"
#include "qlink/random.hpp"
#include "qlink/zero_error.hpp"

namespace qlink {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

const std::set<std::string> kExperiments{"code-build", "protocol", "mixing", "sweep"};

// Collects violations while reading typed fields out of a JSON object.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& violations) : v_(violations) {}

  void fail(const std::string& field, const std::string& what) { v_.push_back(field + ": " + what); }

  template <class T>
  void number(const json& obj, const char* key, const std::string& field, T& out, double min_value) {
    if (!obj.contains(key)) return;
    const json& j = obj.at(key);
    if (!j.is_number()) return fail(field, "expected a number");
    const double d = j.get<double>();
    if (!std::isfinite(d) || d < min_value) {
      std::ostringstream os;
      os << "must be >= " << min_value;
      return fail(field, os.str());
    }
    if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) return fail(field, "expected an integer");
      out = static_cast<T>(j.get<std::int64_t>());
    } else {
      out = static_cast<T>(d);
    }
  }

  void text(const json& obj, const char* key, const std::string& field, std::string& out,
            const std::set<std::string>& allowed) {
    if (!obj.contains(key)) return;
    const json& j = obj.at(key);
    if (!j.is_string()) return fail(field, "expected a string");
    if (!allowed.empty() && !allowed.count(j.get<std::string>())) return fail(field, "unknown value '" + j.get<std::string>() + "'");
    out = j.get<std::string>();
  }

  template <class T>
  void grid(const json& obj, const char* key, const std::string& field, std::vector<T>& out, double min_value) {
    if (!obj.contains(key)) return;
    const json& j = obj.at(key);
    if (!j.is_array()) return fail(field, "expected an array");
    if (j.empty()) return fail(field, "grid is empty");
    for (const json& e : j) {
      if (!e.is_number() || e.get<double>() < min_value || (std::is_integral_v<T> && !e.is_number_integer())) {
        std::ostringstream os;
        os << "entries must be " << (std::is_integral_v<T> ? "integers " : "numbers ") << ">= " << min_value;
        return fail(field, os.str());
      }
      out.push_back(std::is_integral_v<T> ? static_cast<T>(e.get<std::int64_t>()) : static_cast<T>(e.get<double>()));
    }
  }

  void section(const json& root, const char* key, const std::set<std::string>& known) {
    if (!root.contains(key)) return;
    if (!root.at(key).is_object()) return fail(key, "expected an object");
    for (const auto& [k, val] : root.at(key).items()) {
      if (!known.count(k)) fail(std::string(key) + "." + k, "unknown field");
    }
  }

 private:
  std::vector<std::string>& v_;
};

std::size_t mixing_sector_size(const LinkModel& model, std::size_t max_excitations) {
  std::size_t d = 0;
  for (std::size_t e = 0; e <= std::min(max_excitations, model.spins()); ++e) {
    std::size_t c = 1;
    for (std::size_t i = 1; i <= e; ++i) c = c * (model.spins() - e + i) / i;
    d += c;
  }
  return d;
}

void check_point(const ExperimentConfig& cfg, const std::string& experiment, const LinkModel& link,
                 std::size_t uses, std::size_t budget_total, std::vector<std::string>& v) {
  if (link.spins() > 20) {
    v.push_back("link.sites: " + std::to_string(link.spins()) + " mediator spins exceed the limit of 20");
    return;
  }
  const bool needs_link = experiment == "protocol" || experiment == "mixing" ||
                          (experiment == "code-build" && cfg.code.source == "link");
  if (needs_link && link.chains != 2) v.push_back("link.chains: the dual-rail link needs exactly 2 chains");
  if (experiment == "protocol" || (experiment == "code-build" && cfg.code.source == "link")) {
    if (uses == 0) v.push_back("schedule.n: must be >= 1");
    const std::size_t d = sector_dimension(link, uses + budget_total, uses);
    if (d > ExperimentConfig::kSectorBudget) {
      v.push_back("schedule: sector dimension " + std::to_string(d) + " exceeds the budget of " +
                  std::to_string(ExperimentConfig::kSectorBudget));
    }
    if (experiment == "code-build" && std::pow(3.0, static_cast<double>(uses + budget_total)) > 4096.0) {
      v.push_back("schedule: link code output dimension exceeds 4096");
    }
  }
  if (experiment == "mixing") {
    const std::size_t d = mixing_sector_size(link, cfg.mixing.max_excitations);
    if (d > 64) {
      v.push_back("mixing.max_excitations: receiver sector dimension " + std::to_string(d) + " exceeds 64");
    }
  }
}

LinkModel with_sites(const LinkModel& base, std::size_t sites) {
  double j = 1.0;
  for (const auto& row : base.couplings) {
    if (!row.empty()) {
      j = row.front();
      break;
    }
  }
  return LinkModel::uniform(sites, j, base.tau, base.chains);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid config: " + join(violations)), violations_(std::move(violations)) {}

// ---------------------------------------------------------------------------
// Parsing

ExperimentConfig parse_config(const json& root) {
  std::vector<std::string> v;
  Reader rd(v);
  ExperimentConfig cfg;
  if (!root.is_object()) throw ConfigError({"config: expected a JSON object"});

  const std::set<std::string> top{"experiment", "seed", "link", "schedule", "code", "mixing",
                                  "protocol",   "sweep", "output", "workers"};
  for (const auto& [k, val] : root.items()) {
    if (!top.count(k)) v.push_back(k + ": unknown field");
  }
  rd.text(root, "experiment", "experiment", cfg.experiment, kExperiments);
  rd.number(root, "seed", "seed", cfg.seed, 0);
  rd.number(root, "workers", "workers", cfg.workers, 1);

  rd.section(root, "link", {"chains", "sites", "couplings", "tau"});
  if (root.contains("link") && root.at("link").is_object()) {
    const json& l = root.at("link");
    std::size_t chains = 2, sites = 1;
    double tau = 0.0;
    rd.number(l, "chains", "link.chains", chains, 1);
    rd.number(l, "sites", "link.sites", sites, 1);
    rd.number(l, "tau", "link.tau", tau, -1e300);
    cfg.link = LinkModel::uniform(sites, 1.0, tau, chains);
    if (l.contains("couplings")) {
      const json& c = l.at("couplings");
      if (c.is_number()) {
        cfg.link = LinkModel::uniform(sites, c.get<double>(), tau, chains);
      } else if (c.is_array() && std::all_of(c.begin(), c.end(), [](const json& e) { return e.is_number(); })) {
        if (c.size() != sites - 1) {
          v.push_back("link.couplings: expected " + std::to_string(sites - 1) + " bond strengths");
        } else {
          cfg.link.couplings.assign(chains, c.get<std::vector<double>>());
        }
      } else if (c.is_array() && std::all_of(c.begin(), c.end(), [](const json& e) { return e.is_array(); })) {
        bool ok = c.size() == chains;
        for (const json& row : c) ok = ok && row.size() == sites - 1 &&
                                       std::all_of(row.begin(), row.end(), [](const json& e) { return e.is_number(); });
        if (!ok) {
          v.push_back("link.couplings: expected " + std::to_string(chains) + " rows of " + std::to_string(sites - 1) +
                      " bond strengths");
        } else {
          cfg.link.couplings = c.get<std::vector<std::vector<double>>>();
        }
      } else {
        v.push_back("link.couplings: expected a number, a list per bond, or a list per chain");
      }
    }
  }

  rd.section(root, "schedule", {"n", "m_k"});
  if (root.contains("schedule") && root.at("schedule").is_object()) {
    const json& s = root.at("schedule");
    rd.number(s, "n", "schedule.n", cfg.uses, 0);
    cfg.budgets.assign(cfg.uses, 1);
    if (s.contains("m_k")) {
      const json& m = s.at("m_k");
      if (m.is_number_integer()) {
        if (m.get<std::int64_t>() < 1) {
          v.push_back("schedule.m_k: must be >= 1");
        } else {
          cfg.budgets.assign(cfg.uses, static_cast<std::size_t>(m.get<std::int64_t>()));
        }
      } else if (m.is_array()) {
        std::vector<std::size_t> b;
        bool ok = true;
        for (const json& e : m) {
          if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
            ok = false;
          } else {
            b.push_back(static_cast<std::size_t>(e.get<std::int64_t>()));
          }
        }
        if (!ok) v.push_back("schedule.m_k: every entry must be an integer >= 1");
        else if (b.size() != cfg.uses) v.push_back("schedule.m_k: expected " + std::to_string(cfg.uses) + " entries");
        else cfg.budgets = b;
      } else {
        v.push_back("schedule.m_k: expected an integer or a list of integers");
      }
    }
  } else {
    cfg.budgets.assign(cfg.uses, 1);
  }

  rd.section(root, "code", {"source", "carrier_dim", "memory_dim", "uses", "logical_dim", "trials"});
  if (root.contains("code") && root.at("code").is_object()) {
    const json& c = root.at("code");
    rd.text(c, "source", "code.source", cfg.code.source, {"synthetic", "link"});
    rd.number(c, "carrier_dim", "code.carrier_dim", cfg.code.carrier_dim, 2);
    rd.number(c, "memory_dim", "code.memory_dim", cfg.code.memory_dim, 1);
    rd.number(c, "uses", "code.uses", cfg.code.uses, 1);
    rd.number(c, "logical_dim", "code.logical_dim", cfg.code.logical_dim, 2);
    rd.number(c, "trials", "code.trials", cfg.code.trials, 1);
  }
  if (cfg.code.source == "synthetic" &&
      std::pow(static_cast<double>(cfg.code.carrier_dim), static_cast<double>(cfg.code.uses)) > 4096.0) {
    v.push_back("code.uses: input dimension carrier_dim^uses exceeds 4096");
  }

  rd.section(root, "mixing", {"max_excitations", "steps"});
  if (root.contains("mixing") && root.at("mixing").is_object()) {
    rd.number(root.at("mixing"), "max_excitations", "mixing.max_excitations", cfg.mixing.max_excitations, 0);
    rd.number(root.at("mixing"), "steps", "mixing.steps", cfg.mixing.steps, 11);
  }

  rd.section(root, "protocol", {"shots"});
  if (root.contains("protocol") && root.at("protocol").is_object()) {
    rd.number(root.at("protocol"), "shots", "protocol.shots", cfg.protocol.shots, 1);
  }

  rd.section(root, "sweep", {"experiment", "tau", "sites", "m_k"});
  if (root.contains("sweep") && root.at("sweep").is_object()) {
    const json& s = root.at("sweep");
    ExperimentConfig::Sweep sw;
    rd.text(s, "experiment", "sweep.experiment", sw.experiment, {"protocol", "mixing"});
    rd.grid(s, "tau", "sweep.tau", sw.tau, -1e300);
    rd.grid(s, "sites", "sweep.sites", sw.sites, 1);
    rd.grid(s, "m_k", "sweep.m_k", sw.budgets, 1);
    if (!s.contains("tau") && !s.contains("sites") && !s.contains("m_k")) {
      v.push_back("sweep: at least one grid (tau, sites, m_k) is required");
    }
    cfg.sweep = sw;
  }
  if (cfg.experiment == "sweep" && !cfg.sweep) v.push_back("sweep: required for the sweep experiment");

  rd.section(root, "output", {"path", "format"});
  if (root.contains("output") && root.at("output").is_object()) {
    const json& o = root.at("output");
    std::string path, format = "json";
    rd.text(o, "path", "output.path", path, {});
    rd.text(o, "format", "output.format", format, {"json", "csv"});
    if (!path.empty()) cfg.output_path = path;
    cfg.format = format == "csv" ? OutputFormat::kCsv : OutputFormat::kJson;
  }

  if (!v.empty()) throw ConfigError(std::move(v));
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  std::vector<std::string> v;
  if (!kExperiments.count(cfg.experiment)) v.push_back("experiment: unknown value '" + cfg.experiment + "'");
  if (cfg.budgets.size() != cfg.uses) v.push_back("schedule.m_k: expected " + std::to_string(cfg.uses) + " entries");
  for (std::size_t b : cfg.budgets) {
    if (b < 1) v.push_back("schedule.m_k: every entry must be >= 1");
  }
  if (cfg.workers < 1) v.push_back("workers: must be >= 1");
  if (!v.empty()) throw ConfigError(std::move(v));

  std::size_t total = 0;
  for (std::size_t b : cfg.budgets) total += b;
  if (cfg.experiment == "sweep") {
    if (!cfg.sweep) throw ConfigError({"sweep: required for the sweep experiment"});
    const auto& s = *cfg.sweep;
    const std::vector<std::size_t> sites = s.sites.empty() ? std::vector<std::size_t>{cfg.link.sites} : s.sites;
    for (std::size_t n : sites) {
      const LinkModel link = with_sites(cfg.link, n);
      if (s.budgets.empty()) {
        check_point(cfg, s.experiment, link, cfg.uses, total, v);
      } else {
        for (std::size_t b : s.budgets) check_point(cfg, s.experiment, link, cfg.uses, b * cfg.uses, v);
      }
    }
  } else {
    check_point(cfg, cfg.experiment, cfg.link, cfg.uses, total, v);
  }
  if (!v.empty()) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    throw ConfigError(std::move(v));
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"config: cannot open " + path.string()});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("config: parse error: ") + e.what()});
  }
  return parse_config(j);
}

json ExperimentConfig::canonical() const {
  json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["link"] = {{"chains", link.chains}, {"sites", link.sites}, {"couplings", link.couplings}, {"tau", link.tau}};
  j["schedule"] = {{"n", uses}, {"m_k", budgets}};
  j["code"] = {{"source", code.source},     {"carrier_dim", code.carrier_dim}, {"memory_dim", code.memory_dim},
               {"uses", code.uses},         {"logical_dim", code.logical_dim}, {"trials", code.trials}};
  j["mixing"] = {{"max_excitations", mixing.max_excitations}, {"steps", mixing.steps}};
  j["protocol"] = {{"shots", protocol.shots}};
  if (sweep) {
    j["sweep"] = {{"experiment", sweep->experiment}, {"tau", sweep->tau}, {"sites", sweep->sites}, {"m_k", sweep->budgets}};
  }
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.canonical().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

json ResultRecord::to_json() const {
  json j = json::object();
  for (const auto& [k, val] : values) j[k] = val;
  j["metadata"] = metadata;
  return j;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvariantViolation(what);
}

void echo(ResultRecord& r, const ExperimentConfig& cfg, const std::string& hash, const std::string& experiment) {
  r.values["config_hash"] = hash;
  r.values["seed"] = cfg.seed;
  r.values["experiment"] = experiment;
  r.values["link.chains"] = cfg.link.chains;
  r.values["link.sites"] = cfg.link.sites;
  r.values["link.tau"] = cfg.link.tau;
  r.values["link.couplings"] = cfg.link.couplings;
  r.values["schedule.n"] = cfg.uses;
  r.values["schedule.m_k"] = cfg.budgets;
}

Vector random_message(std::size_t n, Rng& rng) {
  return random_state(HilbertFactorization::uniform(2, n), rng).amplitudes();
}

ResultRecord run_code(const ExperimentConfig& cfg, const std::string& hash) {
  ResultRecord r;
  echo(r, cfg, hash, "code-build");
  Rng rng(cfg.seed);
  const KrausChannel ch = [&] {
    if (cfg.code.source == "link") return channel_a_to_ab(cfg.link, cfg.schedule());
    const Matrix u = random_unitary(static_cast<Eigen::Index>(cfg.code.carrier_dim * cfg.code.memory_dim), rng);
    return finite_memory_channel(u, cfg.code.carrier_dim, cfg.code.memory_dim, cfg.code.uses);
  }();
  r.values["code.source"] = cfg.code.source;
  r.values["metrics.input_dim"] = ch.input_dim();
  r.values["metrics.env_dim"] = ch.env_dim();

  const ClassicalZeroErrorCode cc = greedy_classical_code(ch);
  const CodeReport cr = verify_classical(cc, ch);
  r.values["metrics.classical_size"] = cc.size();
  r.values["metrics.classical_bound"] = std::ceil(cc.size_bound() - 1e-9);
  r.values["metrics.classical_rate"] = cc.rate();
  r.values["metrics.classical_residual"] = cr.residual;
  r.values["metrics.span_dimension"] = greedy_span_dimension(cc, ch);
  require(cr.passes, "classical code residual " + std::to_string(cr.residual) + " exceeds 1e-9");
  require(static_cast<double>(cc.size()) >= std::ceil(cc.size_bound() - 1e-9),
          "classical code smaller than the guaranteed bound");

  try {
    const QuantumZeroErrorCode qc = build_quantum_code(cc, ch, cfg.code.logical_dim);
    const CodeReport qr = verify_quantum(qc, ch);
    const BlockDecoder dec = build_decoder(qc, ch);
    double worst = 1.0;
    for (std::size_t t = 0; t < cfg.code.trials; ++t) {
      const StateVector psi = random_code_state(qc, rng);
      for (const DecodeBranch& b : decode_branches(dec, apply(ch, psi))) {
        if (b.probability > 1e-12) worst = std::min(worst, fidelity(psi, b.recovered));
      }
    }
    r.values["metrics.quantum_size"] = qc.size();
    r.values["metrics.quantum_rate"] = qc.rate();
    r.values["metrics.quantum_residual"] = qr.residual;
    r.values["metrics.eigenvalue_sum"] = dec.eigenvalue_sum();
    r.values["metrics.decoder_min_fidelity"] = worst;
    require(qr.passes, "quantum code residual " + std::to_string(qr.residual) + " exceeds 1e-8");
  } catch (const ConstructionError& e) {
    r.values["metrics.quantum_error"] = e.what();
  }
  return r;
}

ResultRecord run_protocol(const ExperimentConfig& cfg, const std::string& hash) {
  ResultRecord r;
  echo(r, cfg, hash, "protocol");
  Rng rng(cfg.seed);
  const DualRailProtocol proto(cfg.link, cfg.schedule());
  const std::size_t n = cfg.uses;
  const auto dx = static_cast<Eigen::Index>(std::uint64_t{1} << n);
  const Vector psi = random_message(n, rng);
  const ProtocolRun run = proto.run(psi);

  Vector zeros = Vector::Zero(dx), ones = Vector::Zero(dx);
  zeros(0) = 1.0;
  ones(dx - 1) = 1.0;
  const Vector plus = Vector::Constant(dx, 1.0 / std::sqrt(static_cast<double>(dx)));

  r.values["metrics.eta0"] = run.eta0;
  r.values["metrics.pi_n"] = run.pi_n;
  r.values["metrics.p_list"] = run.p_list;
  r.values["metrics.decomposition_residual"] = run.decomposition_residual;
  r.values["metrics.schmidt_lambda0"] = run.schmidt_coefficients.empty()
                                            ? 0.0
                                            : run.schmidt_coefficients.front() * run.schmidt_coefficients.front();
  r.values["metrics.schmidt_ground_overlap"] = run.schmidt_ground_overlap;
  r.values["metrics.input_spread"] = proto.input_independence({zeros, ones, plus, psi});
  r.values["metrics.no_branch_residual"] = proto.no_branch_residual();
  const auto sampled = proto.sample_parity(run, rng, cfg.protocol.shots);
  r.values["metrics.parity_frequency"] = sampled.frequency;
  r.values["metrics.parity_within_3sigma"] = sampled.within_three_sigma;
  if (run.pi_n > 1e-12) {
    const auto yes = proto.recover_yes(run);
    r.values["metrics.yes_fidelity"] = yes.fidelity;
    require(yes.fidelity >= 1.0 - 1e-9, "YES-branch fidelity below 1 - 1e-9");
  }
  const double pi_clamped = std::max(run.pi_n, 1e-300);
  const RateReport rates = resource_accounting(n, {pi_clamped}, proto.simulator().model().mediator_dim(),
                                               FallbackMode::kTeleport);
  r.values["metrics.teleport_ebits"] = rates.teleport_ebits;
  r.values["metrics.first_round_rate"] = rates.first_round_rate;
  require(run.decomposition_residual <= 1e-9, "protocol decomposition residual exceeds 1e-9");
  require(run.eta0 >= run.pi_n - 1e-10, "eta0 below Pi_n");
  return r;
}

ResultRecord run_mixing(const ExperimentConfig& cfg, const std::string& hash) {
  ResultRecord r;
  echo(r, cfg, hash, "mixing");
  Rng rng(cfg.seed);
  const KrausChannel ch = receiver_map(cfg.link, cfg.mixing.max_excitations);
  const SpectralReport rep = to_spectrum(Superoperator(ch));
  r.values["mixing.max_excitations"] = cfg.mixing.max_excitations;
  r.values["metrics.sector_dim"] = ch.input_dim();
  r.values["metrics.gap"] = rep.gap;
  r.values["metrics.is_mixing"] = rep.is_mixing;
  r.values["metrics.fixed_points"] = rep.fixed_points.size();
  r.values["metrics.lambda2_abs"] = rep.eigenvalues.size() > 1 ? std::abs(rep.eigenvalues[1]) : 0.0;
  const double radius = rep.eigenvalues.empty() ? 0.0 : std::abs(rep.eigenvalues.front());
  r.values["metrics.spectral_radius"] = radius;
  require(radius <= 1.0 + 1e-10, "spectral radius exceeds 1");
  if (rep.is_mixing) {
    r.values["metrics.fixed_point_purity"] = rep.fixed_point_purity;
    const DensityOperator w0 = random_density(ch.input_space(), rng);
    const std::vector<double> d = iterate_convergence(ch, w0, cfg.mixing.steps);
    r.values["metrics.tail_ratio"] = tail_decay_ratio(d);
    r.values["metrics.final_distance"] = d.back();
    r.values["metrics.distance_after_20"] = d.size() > 20 ? d[20] : d.back();
  }
  return r;
}

ResultRecord run_single(const ExperimentConfig& cfg, const std::string& experiment, const std::string& hash) {
  if (experiment == "code-build") return run_code(cfg, hash);
  if (experiment == "protocol") return run_protocol(cfg, hash);
  if (experiment == "mixing") return run_mixing(cfg, hash);
  throw PreconditionError("run_experiment: unknown experiment '" + experiment + "'");
}

ResultRecord timed(const ExperimentConfig& cfg, const std::string& experiment, const std::string& hash) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultRecord r = run_single(cfg, experiment, hash);
  const auto t1 = std::chrono::steady_clock::now();
  r.metadata["elapsed_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return r;
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.experiment == "sweep") return run_sweep(cfg);
  return {timed(cfg, cfg.experiment, config_hash(cfg))};
}

std::vector<ResultRecord> run_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  if (!cfg.sweep) throw ConfigError({"sweep: required for the sweep experiment"});
  const auto& s = *cfg.sweep;
  const std::string hash = config_hash(cfg);
  const std::vector<double> taus = s.tau.empty() ? std::vector<double>{cfg.link.tau} : s.tau;
  const std::vector<std::size_t> sites = s.sites.empty() ? std::vector<std::size_t>{cfg.link.sites} : s.sites;

  std::vector<ExperimentConfig> points;
  for (std::size_t n : sites) {
    for (double tau : taus) {
      const std::size_t nb = s.budgets.empty() ? 1 : s.budgets.size();
      for (std::size_t b = 0; b < nb; ++b) {
        ExperimentConfig p = cfg;
        if (!s.sites.empty()) p.link = with_sites(cfg.link, n);
        p.link.tau = tau;
        if (!s.budgets.empty()) p.budgets.assign(p.uses, s.budgets[b]);
        points.push_back(std::move(p));
      }
    }
  }

  std::vector<ResultRecord> records(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex collector;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        ResultRecord r = timed(points[i], s.experiment, hash);
        r.values["sweep.index"] = i;
        std::lock_guard lock(collector);
        records[i] = std::move(r);
      } catch (...) {
        std::lock_guard lock(collector);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::min(cfg.workers, points.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  // Π_n monotonicity along the m_k axis at fixed (sites, tau).
  if (s.experiment == "protocol" && !s.budgets.empty()) {
    const std::size_t nb = s.budgets.size();
    for (std::size_t g = 0; g < records.size(); g += nb) {
      std::vector<std::pair<std::size_t, double>> axis;
      for (std::size_t b = 0; b < nb; ++b) {
        axis.emplace_back(s.budgets[b], records[g + b].values.at("metrics.pi_n").get<double>());
      }
      std::stable_sort(axis.begin(), axis.end());
      bool monotone = true;
      for (std::size_t b = 1; b < axis.size(); ++b) monotone = monotone && axis[b].second >= axis[b - 1].second - 1e-12;
      for (std::size_t b = 0; b < nb; ++b) records[g + b].values["metrics.pi_n_monotone_in_m_k"] = monotone;
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Output

std::string to_json_text(const std::vector<ResultRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(r.to_json());
  return arr.dump(2) + "\n";
}

namespace {
std::string csv_cell(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  return s;
}
}  // namespace

std::string to_csv_text(const std::vector<ResultRecord>& records) {
  std::set<std::string> keys;
  for (const auto& r : records) {
    for (const auto& [k, val] : r.values) keys.insert(k);
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& k : keys) {
    os << (first ? "" : ",") << csv_cell(k);
    first = false;
  }
  os << "\n";
  for (const auto& r : records) {
    first = true;
    for (const auto& k : keys) {
      os << (first ? "" : ",");
      const auto it = r.values.find(k);
      if (it != r.values.end()) os << csv_cell(it->second);
      first = false;
    }
    os << "\n";
  }
  return os.str();
}

void write_records(const std::vector<ResultRecord>& records, const std::filesystem::path& path, OutputFormat format) {
  const std::string text = format == OutputFormat::kCsv ? to_csv_text(records) : to_json_text(records);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_records: cannot open " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write_records: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace qlink
