// Runs the standard configs and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gmc/runner/config.hpp"
#include "gmc/runner/emit.hpp"
#include "gmc/runner/experiments.hpp"

using namespace gmc::runner;
using nlohmann::json;

namespace {

constexpr double kZ = 3.0;
constexpr double kClosedFormSeconds = 120.0;

std::filesystem::path config_dir;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Timed {
  Report report;
  double seconds = 0.0;
};

std::map<std::string, Timed> cache;

const Report& run(const std::string& name) {
  auto it = cache.find(name);
  if (it != cache.end()) return it->second.report;
  std::ifstream is(config_dir / (name + ".json"));
  std::stringstream ss;
  ss << is.rdbuf();
  const RunConfig cfg = validate_config(ss.str());
  const auto start = std::chrono::steady_clock::now();
  Report r = run_experiment(cfg);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "  [" << name << " finished in " << fmt(s) << " s]\n";
  return cache.emplace(name, Timed{std::move(r), s}).first->second.report;
}

double seconds(const std::string& name) { return cache.at(name).seconds; }

// Check lookups; a missing check or a run error counts as a failure.
const Check* check(const Report& r, const std::string& name, std::string& why) {
  if (!r.error.empty()) {
    why = r.error;
    return nullptr;
  }
  const Check* c = r.find(name);
  if (!c) why = "check " + name + " missing";
  return c;
}

Outcome all_of(const Report& r, const std::vector<std::string>& names) {
  Outcome o{true, ""};
  for (const auto& n : names) {
    std::string why;
    const Check* c = check(r, n, why);
    if (!o.detail.empty()) o.detail += "; ";
    if (!c) {
      o.passed = false;
      o.detail += why;
      continue;
    }
    o.passed = o.passed && c->passed;
    o.detail += n + ": " + c->detail;
  }
  return o;
}

// max z over the listed checkpoints of a mean check.
Outcome mean_check_on(const Report& r, const std::string& name, const std::vector<double>& ts,
                      const std::string& label) {
  std::string why;
  const Check* c = check(r, name, why);
  if (!c) return {false, why};
  double worst = 0.0;
  std::size_t seen = 0;
  for (const auto& v : c->values) {
    const double t = v["t"];
    for (double want : ts)
      if (std::abs(t - want) < 1e-9) {
        worst = std::max(worst, v["z"].get<double>());
        ++seen;
      }
  }
  if (seen != ts.size()) return {false, label + " " + name + ": missing checkpoints"};
  return {worst <= kZ, label + " " + name + " max|z| " + fmt(worst)};
}

Outcome combine(const std::vector<Outcome>& parts) {
  Outcome o{true, ""};
  for (const auto& p : parts) {
    o.passed = o.passed && p.passed;
    o.detail += (o.detail.empty() ? "" : "; ") + p.detail;
  }
  return o;
}

Outcome criterion_1() {
  Outcome o = all_of(run("brownian-closed-forms"), {"stay-positive", "bridge-positive", "below-line"});
  const double s = seconds("brownian-closed-forms");
  o.passed = o.passed && s <= kClosedFormSeconds;
  o.detail += "; runtime " + fmt(s) + " s (limit " + fmt(kClosedFormSeconds) + ")";
  return o;
}

Outcome criterion_2() { return all_of(run("brownian-closed-forms"), {"doob-mckean"}); }

Outcome criterion_3() { return all_of(run("covariance-validation"), {"covariance", "variance"}); }

Outcome criterion_4() {
  const std::vector<double> ts{1, 2, 4, 8};
  const Report& leb = run("martingale-lebesgue");
  const Report& can = run("martingale-cantor");
  Outcome o = combine({mean_check_on(leb, "mean-mass", ts, "lebesgue"), mean_check_on(leb, "mean-dq", ts, "lebesgue"),
                       mean_check_on(can, "mean-mass", ts, "cantor"), mean_check_on(can, "mean-dq", ts, "cantor")});
  return o;
}

Outcome criterion_5() { return all_of(run("martingale-lebesgue"), {"supermartingale", "plateau"}); }

Outcome criterion_6() { return all_of(run("convergence"), {"second-moment"}); }

Outcome criterion_7() { return all_of(run("convergence"), {"correlation-trend"}); }

Outcome criterion_8() { return all_of(run("degeneracy"), {"cantor-decay", "contrast-band"}); }

Outcome criterion_9() { return all_of(run("capacity"), {"bracket", "alpha-threshold", "de-classifier"}); }

Outcome criterion_10() {
  return combine({all_of(run("martingale-lebesgue"), {"null-measure"}), all_of(run("martingale-cantor"), {"null-measure"}),
                  all_of(run("mollified-convergence"), {"null-measure"})});
}

Outcome criterion_11() {
  std::string why;
  const Check* c = check(run("mollified-convergence"), "mollifier-invariance", why);
  if (!c) return {false, why};
  const double target = std::exp(-6.0);
  for (const auto& v : c->values)
    if (std::abs(v["eps"].get<double>() - target) < 1e-12) {
      const double z = v["z"];
      return {z <= kZ, "eps = e^-6: |z| " + fmt(z) + " between bump families"};
    }
  return {false, "eps = e^-6 not in the mollifier run"};
}

Outcome criterion_12() {
  std::ifstream is(config_dir / "reproducibility.json");
  std::stringstream ss;
  ss << is.rdbuf();
  const RunConfig cfg = validate_config(ss.str());
  const auto base = std::filesystem::temp_directory_path() / "gmc_acceptance_repro";
  std::vector<std::string> csv;
  for (int i = 0; i < 2; ++i) {
    const auto dir = base / std::to_string(i);
    std::filesystem::remove_all(dir);
    emit_results(run_experiment(cfg), cfg, dir);
    std::ifstream f(dir / "data.csv", std::ios::binary);
    std::stringstream b;
    b << f.rdbuf();
    csv.push_back(b.str());
  }
  const bool same = csv[0] == csv[1] && !csv[0].empty();
  return {same, std::to_string(csv[0].size()) + " CSV bytes, " + (same ? "identical" : "different") + " across two runs"};
}

}  // namespace

int main(int argc, char** argv) {
  config_dir = argc > 1 ? argv[1] : GMC_CONFIG_DIR;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed forms", criterion_1},         {"doob-mckean", criterion_2},
      {"covariance", criterion_3},           {"martingale identities", criterion_4},
      {"supermartingale plateau", criterion_5}, {"second-moment scaling", criterion_6},
      {"convergence trend", criterion_7},    {"degeneracy dichotomy", criterion_8},
      {"capacity", criterion_9},             {"null-measure exactness", criterion_10},
      {"mollifier invariance", criterion_11}, {"reproducibility", criterion_12},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.passed;
    std::printf("[%2zu] %-24s %s  %s\n", i + 1, criteria[i].first.c_str(), o.passed ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
