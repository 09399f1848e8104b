#pragma once

// JSON manifest: chart, parameters, connection, loops, grid, base point and
// numerical settings. Parsing validates everything up front and reports the
// offending location as a JSON pointer.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "paracon/bundle.hpp"
#include "paracon/flag.hpp"
#include "paracon/global.hpp"
#include "paracon/transport.hpp"

namespace paracon {

struct LoopSpec {
  std::string name;
  std::string param = "t";
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<expr::Expr> coords;
};

struct Tolerances {
  double rank_tol = 1e-7;
  double stencil_h = 1e-4;
  double holonomy_tol = 1e-5;
  double period_tol = 1e-4;
  double pd_tol = 1e-8;
};

struct Manifest {
  std::string id;
  std::string description;
  std::vector<Coordinate> coords;
  Params params;
  ConnectionSpec connection;
  std::vector<expr::Expr> excluded;
  double exclusion_radius = 1e-6;
  std::vector<LoopSpec> loops;
  Grid grid;
  Point base_point;
  Tolerances tolerances;
  int rk4_steps = 4096;
  int quadrature_steps = 4096;
  std::uint64_t seed = 0;
  int pd_restarts = 32;
  /// Reference fiber vectors as expressions in the coordinates; holonomies
  /// are also reported in this basis (evaluated at the base point).
  std::vector<std::vector<expr::Expr>> holonomy_basis;

  nlohmann::json document;  // the parsed input, for digests and echoing

  Domain domain() const;
  Connection build_connection() const;
  std::vector<Curve> build_loops(const Domain& domain) const;
  GlobalOptions global_options(Exec exec = Exec::parallel) const;
  /// Columns are the reference vectors at q. Empty when none are declared.
  Mat reference_basis(const Domain& domain, std::span<const double> q) const;
  /// FNV-1a 64 of the canonical (sorted-key) serialization, as 16 hex digits.
  std::string digest() const;
};

/// Throws AnalysisError(ManifestInvalid) naming the JSON pointer at fault.
Manifest parse_manifest(const nlohmann::json& doc);
Manifest parse_manifest_text(const std::string& text);
Manifest load_manifest(const std::filesystem::path& path);

std::string fnv1a_hex(std::string_view bytes);

}  // namespace paracon
