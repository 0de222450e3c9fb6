// gmc-lab: run, validate and list laboratory experiments.
//
// Exit codes: 0 all checks pass, 1 a check failed or the run stopped on a
// numeric error, 2 config or usage error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "gmc/runner/config.hpp"
#include "gmc/runner/emit.hpp"
#include "gmc/runner/experiments.hpp"

namespace {

using gmc::runner::ConfigError;
using nlohmann::json;

constexpr int kPass = 0, kFail = 1, kUsage = 2;

json load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw gmc::UsageError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw gmc::UsageError(path + ": not valid JSON: " + e.what());
  }
}

void print_issues(const ConfigError& e) {
  std::cerr << "config error:\n";
  for (const auto& i : e.issues()) std::cerr << "  " << i << "\n";
}

int cmd_validate(const std::string& path) {
  const auto cfg = gmc::runner::validate_config(load(path));
  std::cout << cfg.normalized.dump(2) << "\n";
  return kPass;
}

int cmd_run(const std::string& path, std::optional<std::string> out, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> replicas) {
  json doc = load(path);
  if (seed) doc["seed"] = *seed;
  if (replicas) doc["replicas"] = *replicas;
  const auto cfg = gmc::runner::validate_config(doc);

  std::string dir = cfg.output;
  if (const char* env = std::getenv("GMC_LAB_OUT")) dir = env;
  if (out) dir = *out;

  const auto report = gmc::runner::run_experiment(cfg);
  gmc::runner::emit_results(report, cfg, dir);

  for (const auto& c : report.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  if (!report.error.empty()) std::cerr << "error: " << report.error << " (partial results written)\n";
  std::cout << "results in " << dir << "\n";
  return report.all_passed() ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical chaos laboratory"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config");
  run->add_option("config", config, "Config file (JSON)")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--replicas", replicas, "Override the replica count");

  auto* validate = app.add_subcommand("validate", "Validate a config and print it with defaults filled in");
  validate->add_option("config", config, "Config file (JSON)")->required();

  auto* list = app.add_subcommand("list-experiments", "List registered experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kPass : kUsage;
  }

  try {
    if (list->parsed()) {
      for (const auto& n : gmc::runner::experiment_names()) std::cout << n << "\n";
      return kPass;
    }
    if (validate->parsed()) return cmd_validate(config);
    return cmd_run(config, out, seed, replicas);
  } catch (const ConfigError& e) {
    print_issues(e);
    return kUsage;
  } catch (const gmc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const gmc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
}
