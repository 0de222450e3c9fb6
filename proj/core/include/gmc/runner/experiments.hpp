#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmc/runner/config.hpp"

namespace gmc::runner {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
  nlohmann::json values = nlohmann::json::object();
};

// Long-format data row. Replica -1 marks an ensemble aggregate.
struct Row {
  long replica = -1;
  double checkpoint = 0.0;
  std::string statistic;
  double value = 0.0;
};

struct Report {
  std::string experiment;
  std::vector<Check> checks;
  std::vector<Row> rows;
  nlohmann::json summary = nlohmann::json::object();
  std::string error;  // set when the run stopped early

  bool all_passed() const;
  const Check* find(const std::string& name) const;
};

// Runs the named experiment. A gmc::Error raised midway is recorded in
// report.error together with whatever was computed before it.
Report run_experiment(const RunConfig& cfg);

}  // namespace gmc::runner
