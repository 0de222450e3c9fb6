#include "gmc/runner/emit.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "gmc/errors.hpp"
#include "gmc/statistics.hpp"

namespace gmc::runner {

using nlohmann::json;

namespace {

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw ResourceError("cannot open " + p.string() + " for writing");
  os << bytes;
  if (!os.flush()) throw ResourceError("write failed for " + p.string());
}

}  // namespace

void write_csv(const std::vector<Row>& rows, std::ostream& os) {
  os << "replica,checkpoint,statistic,value\n";
  for (const Row& r : rows)
    os << r.replica << ',' << g17(r.checkpoint) << ',' << csv_field(r.statistic) << ',' << g17(r.value) << '\n';
}

json summary_json(const Report& report, const RunConfig& cfg) {
  // mean and SE over replicas for every (statistic, checkpoint) with per-replica rows
  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const Row& r : report.rows)
    if (r.replica >= 0) groups[{r.statistic, r.checkpoint}].push_back(r.value);
  json aggregates = json::array();
  for (const auto& [key, xs] : groups) {
    const McEstimate m = mc_mean(xs);
    aggregates.push_back(
        {{"statistic", key.first}, {"checkpoint", key.second}, {"n", m.n}, {"mean", m.value}, {"se", m.se}});
  }
  json checks = json::array();
  for (const Check& c : report.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"values", c.values}});
  json out{{"experiment", report.experiment},
           {"seed", cfg.seed},
           {"passed", report.all_passed()},
           {"checks", checks},
           {"aggregates", aggregates},
           {"results", report.summary}};
  if (!report.error.empty()) out["error"] = report.error;
  return out;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw ResourceError("SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::vector<std::filesystem::path> emit_results(const Report& report, const RunConfig& cfg,
                                                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ResourceError("cannot create output directory " + dir.string() + ": " + ec.message());

  std::ostringstream csv;
  write_csv(report.rows, csv);
  const std::string data = csv.str();
  const std::string summary = summary_json(report, cfg).dump(2) + "\n";

  const auto data_path = dir / "data.csv", summary_path = dir / "summary.json", manifest_path = dir / "manifest.json";
  write_file(data_path, data);
  write_file(summary_path, summary);

  json manifest{{"version", kVersion},
                {"experiment", report.experiment},
                {"seed", cfg.seed},
                {"config_sha256", sha256_hex(cfg.normalized.dump())},
                {"config", cfg.normalized},
                {"files",
                 {{"data.csv", sha256_hex(data)}, {"summary.json", sha256_hex(summary)}}}};
  write_file(manifest_path, manifest.dump(2) + "\n");
  return {data_path, summary_path, manifest_path};
}

}  // namespace gmc::runner
