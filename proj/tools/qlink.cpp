// qlink: run code-build, protocol, mixing and sweep experiments from a JSON config.
//
// Exit codes: 0 success, 1 other failure, 2 config error, 3 numerical invariant violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qlink/errors.hpp"
#include "qlink/harness.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App& sub, Options& opt) {
  sub.add_option("--config", opt.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub.add_option("--out", opt.out, "output path (default: stdout)");
  sub.add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub.add_option("--seed", opt.seed, "override the config seed");
  sub.add_option("--workers", opt.workers, "sweep worker threads")->check(CLI::PositiveNumber);
}

int run(const std::string& experiment, const Options& opt) {
  qlink::ExperimentConfig cfg = qlink::load_config(opt.config);
  cfg.experiment = experiment;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.workers) cfg.workers = *opt.workers;
  if (opt.format) cfg.format = *opt.format == "csv" ? qlink::OutputFormat::kCsv : qlink::OutputFormat::kJson;
  if (opt.out) cfg.output_path = *opt.out;
  qlink::validate(cfg);

  const auto records = qlink::run_experiment(cfg);
  if (cfg.output_path) {
    qlink::write_records(records, *cfg.output_path, cfg.format);
  } else {
    std::cout << (cfg.format == qlink::OutputFormat::kCsv ? qlink::to_csv_text(records) : qlink::to_json_text(records));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qlink experiment runner"};
  app.require_subcommand(1);
  Options opt;
  for (const char* name : {"code-build", "protocol", "mixing", "sweep"}) add_common(*app.add_subcommand(name), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), opt);
  } catch (const qlink::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << "\n";
    return 2;
  } catch (const qlink::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
