#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmc/runner/experiments.hpp"

namespace gmc::runner {

inline constexpr const char* kVersion = "0.1.0";

// replica,checkpoint,statistic,value with round-trip precision.
void write_csv(const std::vector<Row>& rows, std::ostream& os);

nlohmann::json summary_json(const Report& report, const RunConfig& cfg);

std::string sha256_hex(const std::string& bytes);

// Writes data.csv, summary.json and manifest.json into dir; returns the
// written paths. I/O failures raise ResourceError naming the path.
std::vector<std::filesystem::path> emit_results(const Report& report, const RunConfig& cfg,
                                                const std::filesystem::path& dir);

}  // namespace gmc::runner
