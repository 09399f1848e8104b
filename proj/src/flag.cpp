#include "paracon/flag.hpp"

#include <array>

#include "paracon/errors.hpp"

namespace paracon {

std::vector<int> FlagTrace::dims() const {
  std::vector<int> out;
  for (const auto& l : levels) out.push_back(l.dim());
  return out;
}

Grid Grid::product(const std::vector<std::vector<double>>& axes) {
  Grid g;
  if (axes.empty()) return g;
  std::vector<std::size_t> sizes;
  std::size_t total = 1;
  for (const auto& a : axes) {
    sizes.push_back(a.size());
    total *= a.size();
  }
  if (total == 0) return g;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t k = axes.size(); k-- > 0;) {
      idx[k] = rem % sizes[k];
      rem /= sizes[k];
    }
    Point p(axes.size());
    for (std::size_t k = 0; k < axes.size(); ++k) p[k] = axes[k][idx[k]];
    g.points.push_back(std::move(p));
    std::size_t stride = 1;
    for (std::size_t k = axes.size(); k-- > 0;) {
      if (idx[k] + 1 < sizes[k]) g.neighbours.emplace_back(flat, flat + stride);
      stride *= sizes[k];
    }
  }
  return g;
}

Grid Grid::sequence(std::vector<Point> points) {
  Grid g;
  g.points = std::move(points);
  for (std::size_t i = 0; i + 1 < g.points.size(); ++i) g.neighbours.emplace_back(i, i + 1);
  return g;
}

Subspace curvature_kernel(const Connection& conn, std::span<const double> p,
                          const FlagOptions& opts) {
  const auto curvature = conn.curvature_operators(p);
  if (curvature.empty()) return Subspace::full(conn.N());
  return kernel_intersection(curvature, opts.rank_tol);
}

Subspace second_fundamental_kernel(const Connection& conn, std::span<const double> p,
                                   const Subspace& v, const LevelFn& same_level,
                                   const FlagOptions& opts, int level) {
  const Eigen::Index d = v.dim();
  const Eigen::Index big_n = v.ambient();
  if (d == 0 || d == big_n) return v;

  const Mat& b = v.basis;
  const auto omega = conn.connection_matrices(p);
  const double h = opts.stencil_h;
  constexpr std::array<int, 4> kOffsets{-2, -1, 1, 2};
  constexpr std::array<double, 4> kWeights{1.0, -8.0, 8.0, -1.0};  // / (12 h)

  std::vector<Mat> projected;
  // sqrt|R| has the units of Omega and stays positive where Omega vanishes
  // (the sphere equator), so the threshold cannot collapse onto FD noise.
  double scale = 0.0;
  for (const auto& r : conn.curvature_operators(p)) scale = std::max(scale, std::sqrt(r.norm()));
  for (int k = 0; k < conn.n(); ++k) {
    Mat dx = Mat::Zero(big_n, d);
    for (std::size_t s = 0; s < kOffsets.size(); ++s) {
      Point q(p.begin(), p.end());
      q[static_cast<std::size_t>(k)] += kOffsets[s] * h;
      if (!conn.domain().contains(q)) {
        throw AnalysisError(ErrorCode::OutsideDomain,
                            "stencil leaves the domain; point too close to boundary");
      }
      const Subspace vq = same_level(q);
      if (vq.dim() != d) {
        throw AnalysisError(ErrorCode::IrregularPoint,
                            "flag dimension changes from " + std::to_string(d) + " to " +
                                std::to_string(vq.dim()) + " inside the stencil",
                            level);
      }
      // Local section through V(p): project p's basis onto V(q).
      const Mat aligned = orthonormalize(vq.basis * (vq.basis.transpose() * b));
      dx += (kWeights[s] / (12.0 * h)) * aligned;
    }
    const Mat transport_part = omega[static_cast<std::size_t>(k)] * b;
    const Mat nabla = dx + transport_part;
    projected.push_back(nabla - b * (b.transpose() * nabla));
    scale = std::max({scale, transport_part.norm(), dx.norm()});
  }
  const Subspace coeffs = kernel_intersection(projected, opts.rank_tol, scale);
  Subspace out;
  out.basis = b * coeffs.basis;
  out.threshold = coeffs.threshold;
  out.smallest_kept = coeffs.smallest_kept;
  out.largest_dropped = coeffs.largest_dropped;
  return out;
}

Subspace flag_level(const Connection& conn, std::span<const double> p, int level,
                    const FlagOptions& opts) {
  Subspace v = curvature_kernel(conn, p, opts);
  for (int i = 0; i < level; ++i) {
    if (v.dim() == 0 || v.dim() == conn.N()) continue;
    const LevelFn prev = [&conn, &opts, i](std::span<const double> q) {
      return flag_level(conn, q, i, opts);
    };
    v = second_fundamental_kernel(conn, p, v, prev, opts, i + 1);
  }
  return v;
}

FlagTrace derived_flag(const Connection& conn, std::span<const double> p,
                       const FlagOptions& opts) {
  FlagTrace trace;
  trace.point.assign(p.begin(), p.end());
  conn.nudge_off_breakpoints(trace.point);
  const auto& x = trace.point;
  const int max_levels = opts.max_levels > 0 ? opts.max_levels : conn.N() + 1;

  trace.levels.push_back({0, curvature_kernel(conn, x, opts)});
  for (;;) {
    const FlagLevel& cur = trace.levels.back();
    if (cur.dim() == 0 || cur.dim() == conn.N()) break;
    if (cur.level + 1 > max_levels) {
      throw AnalysisError(ErrorCode::MaxLevelsExceeded,
                          "flag did not stabilize within " + std::to_string(max_levels) +
                              " levels");
    }
    const int i = cur.level;
    const LevelFn prev = [&conn, &opts, i](std::span<const double> q) {
      return flag_level(conn, q, i, opts);
    };
    Subspace next = second_fundamental_kernel(conn, x, cur.space, prev, opts, i + 1);
    const bool stable = next.dim() == cur.dim();
    trace.levels.push_back({i + 1, std::move(next)});
    if (stable) break;
  }
  const std::size_t count = trace.levels.size();
  const bool repeated = count >= 2 && trace.levels[count - 1].dim() == trace.levels[count - 2].dim();
  trace.stabilization_level = static_cast<int>(repeated ? count - 2 : count - 1);
  trace.terminal = trace.levels.back().space;
  return trace;
}

RegularityReport regularity_scan(const Connection& conn, const Grid& grid,
                                 const FlagOptions& opts, Exec exec) {
  if (grid.points.empty()) throw AnalysisError(ErrorCode::EmptyGrid, "no grid points");
  struct Item {
    std::optional<int> dim;
    std::string failure;
  };
  const auto items = parallel_map<Item>(
      grid.points.size(),
      [&](std::size_t i) -> Item {
        try {
          return {static_cast<int>(derived_flag(conn, grid.points[i], opts).terminal.dim()), {}};
        } catch (const AnalysisError& err) {
          if (err.code() != ErrorCode::IrregularPoint) throw;
          return {std::nullopt, err.what()};
        }
      },
      exec);

  RegularityReport report;
  report.points = grid.points;
  for (const auto& it : items) {
    report.terminal_dims.push_back(it.dim);
    report.failures.push_back(it.failure);
  }
  bool all_equal = true;
  std::optional<int> first;
  for (const auto& d : report.terminal_dims) {
    if (!d) {
      all_equal = false;
      continue;
    }
    if (!first) first = d;
    if (*d != *first) all_equal = false;
  }
  for (const auto& [a, b] : grid.neighbours) {
    if (report.terminal_dims[a] != report.terminal_dims[b]) report.jumps.emplace_back(a, b);
  }
  report.regular_on_grid = all_equal;
  return report;
}

LocalMetricity local_metricity(const Connection& conn, const FlagTrace& trace,
                               const PdOptions& pd) {
  if (conn.kind() != ConnectionSpec::Kind::christoffel) {
    throw AnalysisError(ErrorCode::NotSym2Bundle,
                        "local metricity is defined for connections on Sym^2 T*M only");
  }
  LocalMetricity out;
  if (trace.terminal.dim() == 0) {
    const int n = conn.n();
    out.certificate.status = PdStatus::infeasible_certified;
    out.certificate.witness = Mat::Identity(n, n) / n;
    return out;
  }
  out.certificate = pd_feasible(SymSpan::from_fiber(conn.sym(), trace.terminal.basis), pd);
  out.locally_metric = out.certificate.status == PdStatus::feasible;
  return out;
}

}  // namespace paracon
