#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmc/brownian.hpp"
#include "gmc/envelope.hpp"
#include "gmc/errors.hpp"
#include "gmc/gmc.hpp"
#include "gmc/kernel.hpp"
#include "gmc/measures.hpp"

namespace gmc::runner {

// Every problem found in a config, each prefixed with a JSON pointer into it.
class ConfigError : public UsageError {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct KernelSpec {
  double eta1 = 0.5;
  double eta2 = 1.0;
  int d = 1;
  BumpFamily kappa = BumpFamily::Exp;
  std::size_t samples = 4096;

  StarScaleKernel build() const;
};

struct MeasureSpec {
  std::string scheme;  // lebesgue | cantor | occupation
  Box box;
  double h = 1.0 / 256;
  CantorSpec cantor;
  double horizon = 1.0;  // occupation
  double dt = 1.0 / 1024;
  std::uint64_t seed = 0;

  ReferenceMeasure build() const;
};

struct PathSettings {
  std::size_t replicas = 100000;
  double dt = 1e-3;
  double horizon = 10000.0;  // envelope survival horizon
  double growth = 0.0;       // geometric step growth for long horizons
};

struct RunConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t replicas = 1000;
  unsigned threads = 1;
  std::string output = "out";

  std::optional<KernelSpec> kernel;
  std::optional<MeasureSpec> measure;
  std::optional<EnvelopeFn> envelope;
  TruncationParams truncation;
  std::vector<double> checkpoints{0.0, 1.0, 2.0, 4.0, 8.0};
  double dt = 0.05;
  std::vector<double> eps;
  std::vector<BumpFamily> mollifiers{BumpFamily::Exp};
  PathSettings paths;
  std::vector<std::string> checks;  // empty: every check of the experiment

  // degeneracy
  std::optional<MeasureSpec> contrast;
  std::optional<EnvelopeFn> contrast_envelope;
  double alpha = 0.5;

  nlohmann::json normalized;  // the config with defaults filled in

  bool wants(const std::string& check) const;
  ScaleGrid grid() const { return ScaleGrid(checkpoints, dt); }
};

std::vector<std::string> experiment_names();

// Parses, validates and normalizes a config document.
RunConfig validate_config(const std::string& text);
RunConfig validate_config(const nlohmann::json& doc);

EnvelopeFn parse_envelope(const nlohmann::json& j);
nlohmann::json envelope_to_json(const EnvelopeFn& f);

}  // namespace gmc::runner
