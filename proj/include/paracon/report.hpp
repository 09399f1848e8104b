#pragma once

// Command runners behind the CLI. Each returns the report document and the
// process exit code: 0 for a definite result, 2 for inconclusive or
// not_regular.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "paracon/manifest.hpp"

namespace paracon {

struct RunOptions {
  Exec exec = Exec::parallel;
  bool timings = false;                // wall-clock per stage (breaks byte-identity)
  std::optional<int> steps;            // overrides RK4 and quadrature steps
  std::optional<std::uint64_t> seed;   // overrides the manifest seed
};

struct RunResult {
  nlohmann::json report;
  int exit_code = 0;
};

RunResult run_analyze(const Manifest& manifest, const RunOptions& opts = {});
RunResult run_global(const Manifest& manifest, const RunOptions& opts = {});
/// Missing trailing coordinates are taken from the base point.
RunResult run_flag(const Manifest& manifest, const std::vector<double>& point,
                   const RunOptions& opts = {});
RunResult run_holonomy(const Manifest& manifest, const std::string& loop,
                       const RunOptions& opts = {});

/// Pretty-printed JSON with sorted keys and a trailing newline.
std::string dump_report(const nlohmann::json& report);

/// Short human-readable summary of a report.
std::string text_summary(const nlohmann::json& report);

nlohmann::json to_json(const Mat& m);
nlohmann::json to_json(const Vec& v);

}  // namespace paracon
