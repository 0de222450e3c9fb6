#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "gmc/runner/config.hpp"
#include "gmc/runner/emit.hpp"
#include "gmc/runner/experiments.hpp"

using namespace gmc;
using namespace gmc::runner;
using nlohmann::json;

namespace {
std::vector<std::string> issues_of(const json& doc) {
  try {
    validate_config(doc);
  } catch (const ConfigError& e) {
    return e.issues();
  }
  return {};
}
bool mentions(const std::vector<std::string>& issues, const std::string& s) {
  for (const auto& i : issues)
    if (i.find(s) != std::string::npos) return true;
  return false;
}
std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}
}  // namespace

TEST(Sha256, KnownDigests) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ValidateConfig, EmptyListsRequiredKeys) {
  const auto issues = issues_of(json::object());
  EXPECT_TRUE(mentions(issues, "/experiment"));
  EXPECT_TRUE(mentions(issues, "/seed"));
}

TEST(ValidateConfig, UnknownKeysRejectedWithPath) {
  const auto issues = issues_of({{"experiment", "capacity"}, {"seed", 1}, {"bogus", 2},
                                 {"measure", {{"scheme", "cantor"}, {"levle", 3}}}});
  EXPECT_TRUE(mentions(issues, "/bogus"));
  EXPECT_TRUE(mentions(issues, "/measure/levle"));
}

TEST(ValidateConfig, UnknownExperimentListsNames) {
  const auto issues = issues_of({{"experiment", "nope"}, {"seed", 1}});
  ASSERT_FALSE(issues.empty());
  EXPECT_TRUE(mentions(issues, "brownian-closed-forms"));
}

TEST(ValidateConfig, DefaultsFilledIn) {
  const RunConfig c = validate_config(json{{"experiment", "brownian-closed-forms"}, {"seed", 3}});
  EXPECT_EQ(c.dt, 0.05);
  EXPECT_EQ(c.replicas, 1000u);
  EXPECT_EQ(c.normalized["grid"]["dt"], 0.05);
  EXPECT_EQ(c.normalized["replicas"], 1000);
}

TEST(ValidateConfig, DegeneracyNeedsDivergentSchedule) {
  const json doc{{"experiment", "degeneracy"},
                 {"seed", 1},
                 {"kernel", json::object()},
                 {"measure", {{"scheme", "cantor"}, {"level", 6}, {"schedule", {{"kind", "power"}, {"gamma", 0.3}, {"scale", 0.5}}}}},
                 {"contrast",
                  {{"measure", {{"scheme", "lebesgue"}, {"h", 0.0625}}}, {"envelope", {{"kind", "power"}, {"gamma", 0.3}}}}}};
  EXPECT_TRUE(mentions(issues_of(doc), "/measure/schedule"));
}

TEST(ValidateConfig, ConvergenceNeedsConvergentEnvelope) {
  const json doc{{"experiment", "convergence"},
                 {"seed", 1},
                 {"kernel", json::object()},
                 {"measure", {{"scheme", "lebesgue"}, {"h", 0.0625}}},
                 {"envelope", {{"kind", "power"}, {"gamma", 0.5}}}};
  EXPECT_TRUE(mentions(issues_of(doc), "/envelope"));
}

TEST(ValidateConfig, MalformedTextIsUsageError) { EXPECT_THROW(validate_config(std::string("{")), UsageError); }

TEST(Emit, EmptyReportGivesHeaderOnlyCsv) {
  std::ostringstream os;
  write_csv({}, os);
  EXPECT_EQ(os.str(), "replica,checkpoint,statistic,value\n");
}

TEST(Emit, RoundTripPrecision) {
  std::ostringstream os;
  write_csv({{3, 0.1, "M", 1.0 / 3}}, os);
  const std::string line = os.str().substr(os.str().find('\n') + 1);
  EXPECT_EQ(line, "3,0.10000000000000001,M,0.33333333333333331\n");
}

TEST(Emit, AggregateSeIsSdOverRootN) {
  Report rep;
  rep.experiment = "capacity";
  const std::vector<double> xs{1.0, 2.0, 4.0, 7.0};
  for (std::size_t i = 0; i < xs.size(); ++i) rep.rows.push_back({static_cast<long>(i), 2.0, "M", xs[i]});
  const RunConfig cfg = validate_config(json{{"experiment", "brownian-closed-forms"}, {"seed", 3}});
  const json s = summary_json(rep, cfg);
  ASSERT_EQ(s["aggregates"].size(), 1u);
  const double sd = std::sqrt((6.25 + 2.25 + 0.25 + 12.25) / 3.0);
  EXPECT_NEAR(s["aggregates"][0]["se"].get<double>(), sd / 2.0, 1e-14);
  EXPECT_NEAR(s["aggregates"][0]["mean"].get<double>(), 3.5, 1e-15);
}

TEST(Emit, ManifestListsEveryFile) {
  const RunConfig cfg = validate_config(json{{"experiment", "brownian-closed-forms"}, {"seed", 3}});
  Report rep;
  rep.experiment = cfg.experiment;
  rep.rows.push_back({-1, 0.0, "x", 1.0});
  const auto dir = std::filesystem::temp_directory_path() / "gmc_emit_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_results(rep, cfg, dir);
  EXPECT_EQ(files.size(), 3u);
  const json m = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["files"]["data.csv"], sha256_hex(slurp(dir / "data.csv")));
  EXPECT_EQ(m["files"]["summary.json"], sha256_hex(slurp(dir / "summary.json")));
  EXPECT_EQ(m["config_sha256"], sha256_hex(cfg.normalized.dump()));
  EXPECT_EQ(m["seed"], 3);
}

TEST(Emit, UnwritableDirectoryNamesPath) {
  const RunConfig cfg = validate_config(json{{"experiment", "brownian-closed-forms"}, {"seed", 3}});
  try {
    emit_results(Report{}, cfg, "/proc/definitely/not/here");
    FAIL();
  } catch (const ResourceError& e) {
    EXPECT_NE(std::string(e.what()).find("/proc/definitely"), std::string::npos);
  }
}

TEST(RunExperiment, CapacityDeterministic) {
  const RunConfig cfg = validate_config(json{
      {"experiment", "capacity"},
      {"seed", 5},
      {"alpha", 1.5},
      {"measure",
       {{"scheme", "cantor"}, {"level", 6}, {"schedule", {{"kind", "power"}, {"gamma", 0.5}, {"scale", 1}, {"offset", 1}}}}}});
  const Report a = run_experiment(cfg), b = run_experiment(cfg);
  std::ostringstream ca, cb;
  write_csv(a.rows, ca);
  write_csv(b.rows, cb);
  EXPECT_EQ(ca.str(), cb.str());
  EXPECT_TRUE(a.all_passed());
}

TEST(RunExperiment, SnapshotGivesOneRowPerStatistic) {
  const RunConfig cfg = validate_config(json{{"experiment", "martingale-identities"},
                                             {"seed", 2},
                                             {"replicas", 100},
                                             {"kernel", json::object()},
                                             {"measure", {{"scheme", "lebesgue"}, {"h", 0.125}}},
                                             {"envelope", {{"kind", "power"}, {"gamma", 0.3}}},
                                             {"grid", {{"checkpoints", {0, 1}}, {"dt", 0.1}}},
                                             {"checks", {"null-measure", "ordering"}}});
  const Report r = run_experiment(cfg);
  std::size_t n = 0;
  for (const auto& row : r.rows)
    if (row.replica == 0 && row.checkpoint == 1.0 && row.statistic.find(':') == std::string::npos) ++n;
  EXPECT_EQ(n, 6u);
  EXPECT_TRUE(r.all_passed());
}
