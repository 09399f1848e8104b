#pragma once

// Parallel transport along curves (fixed-step RK4), holonomy of the terminal
// flag subspace around loops, and sampled local parallel sections.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "paracon/bundle.hpp"
#include "paracon/linalg.hpp"
#include "paracon/parallel.hpp"

namespace paracon {

/// Parametrized curve t in [t0, t1] -> chart, with its velocity.
class Curve {
 public:
  using Fn = std::function<void(double t, std::span<double> x, std::span<double> xdot)>;

  Curve() = default;
  Curve(std::string name, int n, double t0, double t1, Fn fn);

  /// Coordinates given as expressions in `t_name` (and manifest parameters).
  /// `closed` is set when the endpoints agree modulo declared periods.
  static Curve from_exprs(std::string name, const Domain& domain,
                          const std::vector<expr::Expr>& coords, const std::string& t_name,
                          double t0, double t1);
  static Curve segment(const Point& a, const Point& b);

  Curve reversed() const;

  void at(double t, std::span<double> x, std::span<double> xdot) const { fn_(t, x, xdot); }
  Point start() const;
  Point end() const;

  const std::string& name() const { return name_; }
  int dim() const { return n_; }
  double t0() const { return t0_; }
  double t1() const { return t1_; }
  bool closed() const { return closed_; }
  void set_closed(bool c) { closed_ = c; }

  /// Coordinate-space arc length by the trapezoid rule.
  double length(int samples = 1024) const;

 private:
  std::string name_;
  int n_ = 0;
  double t0_ = 0.0;
  double t1_ = 1.0;
  bool closed_ = false;
  Fn fn_;
};

/// True when a and b agree within tol after reducing periodic coordinates.
bool same_point(const Domain& domain, std::span<const double> a, std::span<const double> b,
                double tol = 1e-9);

struct TransportResult {
  Mat final;  // transported columns
  int steps = 0;
};

/// Solves v' = -(sum_k Omega_k(gamma) gamma_dot^k) v for every column of v0.
TransportResult transport(const Connection& conn, const Curve& curve, const Mat& v0, int steps);

struct HolonomyResult {
  Point base;
  std::string loop;
  Mat matrix;           // d x d, transport of the basis in that basis
  double defect = 0.0;  // || V_end - B H ||_F
};

/// Holonomy of span(basis) around a closed loop starting at p. Throws
/// DefectTooLarge when transport leaves the subspace by more than tol.
HolonomyResult holonomy_matrix(const Connection& conn, std::span<const double> p,
                               const Subspace& wtilde, const Curve& loop, int steps,
                               double tol = 1e-5);

struct SampledSection {
  std::vector<Point> nodes;
  std::vector<Vec> values;
  double residual = 0.0;  // max |ray transport - two-leg transport| over sampled nodes
};

/// Extends w from p to the grid nodes inside the coordinate ball of the given
/// radius by transport along straight rays. When `wtilde` is given, w must
/// lie in it.
SampledSection parallel_extend(const Connection& conn, std::span<const double> p, const Vec& w,
                               double radius, int grid_res, int steps = 256,
                               const Subspace* wtilde = nullptr, Exec exec = Exec::parallel);

}  // namespace paracon
