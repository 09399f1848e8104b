#pragma once

// Derived flag of a connection at sample points: the curvature kernel, then
// repeated kernels of the second fundamental form, down to the terminal
// subspace that holds every local parallel section.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paracon/bundle.hpp"
#include "paracon/linalg.hpp"
#include "paracon/parallel.hpp"
#include "paracon/pdcone.hpp"

namespace paracon {

struct FlagOptions {
  double rank_tol = 1e-7;
  double stencil_h = 1e-4;
  int max_levels = 0;  // 0: fiber rank + 1
};

struct FlagLevel {
  int level = 0;
  Subspace space;
  int dim() const { return static_cast<int>(space.dim()); }
};

struct FlagTrace {
  Point point;
  std::vector<FlagLevel> levels;
  Subspace terminal;
  int stabilization_level = 0;

  std::vector<int> dims() const;
};

/// Sample points with a neighbour relation used to locate dimension jumps.
struct Grid {
  std::vector<Point> points;
  std::vector<std::pair<std::size_t, std::size_t>> neighbours;

  /// Cartesian product of per-coordinate sample values; neighbours differ by
  /// one step along one axis. Points are ordered with the last axis fastest.
  static Grid product(const std::vector<std::vector<double>>& axes);
  /// Explicit point list; consecutive points are neighbours.
  static Grid sequence(std::vector<Point> points);
};

struct RegularityReport {
  std::vector<Point> points;
  std::vector<std::optional<int>> terminal_dims;  // empty where the point was irregular
  std::vector<std::string> failures;              // per point; empty string if none
  std::vector<std::pair<std::size_t, std::size_t>> jumps;
  bool regular_on_grid = false;
};

struct LocalMetricity {
  bool locally_metric = false;
  PdResult certificate;
};

Subspace curvature_kernel(const Connection& conn, std::span<const double> p,
                          const FlagOptions& opts = {});

using LevelFn = std::function<Subspace(std::span<const double>)>;

/// Kernel of the second fundamental form of V at p. `same_level` recomputes V
/// at nearby points; a dimension change there throws IrregularPoint carrying
/// `level`.
Subspace second_fundamental_kernel(const Connection& conn, std::span<const double> p,
                                   const Subspace& v, const LevelFn& same_level,
                                   const FlagOptions& opts = {}, int level = 1);

/// Flag level `level` at p, recomputed from scratch.
Subspace flag_level(const Connection& conn, std::span<const double> p, int level,
                    const FlagOptions& opts = {});

FlagTrace derived_flag(const Connection& conn, std::span<const double> p,
                       const FlagOptions& opts = {});

RegularityReport regularity_scan(const Connection& conn, const Grid& grid,
                                 const FlagOptions& opts = {}, Exec exec = Exec::parallel);

/// Serial reference of regularity_scan, kept for tests and the benchmark.
inline RegularityReport regularity_scan_serial(const Connection& conn, const Grid& grid,
                                               const FlagOptions& opts = {}) {
  return regularity_scan(conn, grid, opts, Exec::serial);
}

LocalMetricity local_metricity(const Connection& conn, const FlagTrace& trace,
                               const PdOptions& pd = {});

}  // namespace paracon
