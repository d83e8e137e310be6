#pragma once

// Configuration-driven experiment runner.
//
// A config is a JSON document (schema in docs/config.schema.json). Every
// result record carries the config hash and seed; values are deterministic
// for a fixed config and seed, wall-clock data lives under "metadata".

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qlink/spin_link.hpp"

namespace qlink {

// Parse or validation failure; `violations` names every offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

enum class OutputFormat { kJson, kCsv };

struct ExperimentConfig {
  std::string experiment = "protocol";  // code-build | protocol | mixing | sweep
  std::uint64_t seed = 0;

  LinkModel link = LinkModel::uniform(1, 1.0, 0.0);
  std::size_t uses = 1;
  std::vector<std::size_t> budgets{1};

  struct Code {
    std::string source = "synthetic";  // synthetic | link
    std::size_t carrier_dim = 2;
    std::size_t memory_dim = 2;
    std::size_t uses = 9;
    std::size_t logical_dim = 2;
    std::size_t trials = 10;
  } code;

  struct Mixing {
    std::size_t max_excitations = 1;
    std::size_t steps = 40;
  } mixing;

  struct Protocol {
    std::size_t shots = 10000;
  } protocol;

  struct Sweep {
    std::string experiment = "protocol";  // protocol | mixing
    std::vector<double> tau;
    std::vector<std::size_t> sites;
    std::vector<std::size_t> budgets;  // uniform m_k per grid point
  };
  std::optional<Sweep> sweep;

  std::optional<std::filesystem::path> output_path;
  OutputFormat format = OutputFormat::kJson;
  std::size_t workers = 1;

  static constexpr std::size_t kSectorBudget = 100000;

  Schedule schedule() const { return Schedule(budgets); }
  // The fields that determine results (output and worker settings excluded).
  nlohmann::json canonical() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
// Re-runs validation (e.g. after command-line overrides).
void validate(const ExperimentConfig& cfg);

// 64-bit FNV-1a of the canonical config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct ResultRecord {
  std::map<std::string, nlohmann::json> values;  // flat keys
  nlohmann::json metadata = nlohmann::json::object();

  nlohmann::json to_json() const;
};

// Throws InvariantViolation when a computed result fails its own checks.
std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg);
std::vector<ResultRecord> run_sweep(const ExperimentConfig& cfg);

std::string to_json_text(const std::vector<ResultRecord>& records);
std::string to_csv_text(const std::vector<ResultRecord>& records);
// Writes via a temporary file and rename.
void write_records(const std::vector<ResultRecord>& records, const std::filesystem::path& path, OutputFormat format);

}  // namespace qlink
