#include "paracon/transport.hpp"

#include <array>
#include <cmath>
#include <memory>

#include "paracon/errors.hpp"

namespace paracon {

Curve::Curve(std::string name, int n, double t0, double t1, Fn fn)
    : name_(std::move(name)), n_(n), t0_(t0), t1_(t1), fn_(std::move(fn)) {}

Curve Curve::from_exprs(std::string name, const Domain& domain,
                        const std::vector<expr::Expr>& coords, const std::string& t_name,
                        double t0, double t1) {
  if (static_cast<int>(coords.size()) != domain.dim()) {
    throw AnalysisError(ErrorCode::InvalidArgument,
                        "curve " + name + " needs one expression per coordinate");
  }
  std::vector<std::string> slots{t_name};
  std::vector<double> params;
  for (const auto& [pname, value] : domain.params()) {
    slots.push_back(pname);
    params.push_back(value);
  }
  struct Programs {
    std::vector<expr::Program> x, xdot;
    std::vector<double> params;
  };
  auto progs = std::make_shared<Programs>();
  progs->params = params;
  try {
    for (const auto& c : coords) {
      progs->x.push_back(expr::Program::compile(c, slots));
      progs->xdot.push_back(expr::Program::compile(expr::diff(c, t_name), slots));
    }
  } catch (const expr::EvalError& err) {
    throw AnalysisError(ErrorCode::ExpressionFailure, "curve " + name + ": " + err.what());
  }
  const int n = domain.dim();
  Curve c(std::move(name), n, t0, t1,
          [progs](double t, std::span<double> x, std::span<double> xdot) {
            std::array<double, 32> buf{};
            std::vector<double> heap;
            double* slots = buf.data();
            const std::size_t count = progs->params.size() + 1;
            if (count > buf.size()) {
              heap.resize(count);
              slots = heap.data();
            }
            slots[0] = t;
            std::copy(progs->params.begin(), progs->params.end(), slots + 1);
            const std::span<const double> sv(slots, count);
            try {
              for (std::size_t k = 0; k < progs->x.size(); ++k) {
                x[k] = progs->x[k].run(sv);
                xdot[k] = progs->xdot[k].run(sv);
              }
            } catch (const expr::EvalError& err) {
              throw AnalysisError(ErrorCode::ExpressionFailure, err.what());
            }
          });
  c.closed_ = same_point(domain, c.start(), c.end());
  return c;
}

Curve Curve::segment(const Point& a, const Point& b) {
  const int n = static_cast<int>(a.size());
  return Curve("segment", n, 0.0, 1.0, [a, b](double t, std::span<double> x, std::span<double> xdot) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      x[k] = a[k] + t * (b[k] - a[k]);
      xdot[k] = b[k] - a[k];
    }
  });
}

Curve Curve::reversed() const {
  auto fn = fn_;
  const double t0 = t0_;
  const double t1 = t1_;
  Curve c(name_ + "^-1", n_, t0, t1, [fn, t0, t1](double t, std::span<double> x, std::span<double> xdot) {
    fn(t0 + t1 - t, x, xdot);
    for (auto& v : xdot) v = -v;
  });
  c.closed_ = closed_;
  return c;
}

Point Curve::start() const {
  Point x(static_cast<std::size_t>(n_)), v(static_cast<std::size_t>(n_));
  fn_(t0_, x, v);
  return x;
}

Point Curve::end() const {
  Point x(static_cast<std::size_t>(n_)), v(static_cast<std::size_t>(n_));
  fn_(t1_, x, v);
  return x;
}

double Curve::length(int samples) const {
  Point x(static_cast<std::size_t>(n_)), v(static_cast<std::size_t>(n_));
  const double dt = (t1_ - t0_) / samples;
  double total = 0.0;
  for (int i = 0; i <= samples; ++i) {
    fn_(t0_ + i * dt, x, v);
    double speed = 0.0;
    for (double c : v) speed += c * c;
    speed = std::sqrt(speed);
    total += (i == 0 || i == samples) ? 0.5 * speed : speed;
  }
  return total * dt;
}

bool same_point(const Domain& domain, std::span<const double> a, std::span<const double> b,
                double tol) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    double diff = a[k] - b[k];
    const auto& period = domain.coords()[k].period;
    if (period) diff -= *period * std::round(diff / *period);
    if (std::abs(diff) >= tol) return false;
  }
  return true;
}

TransportResult transport(const Connection& conn, const Curve& curve, const Mat& v0, int steps) {
  if (steps < 16) throw AnalysisError(ErrorCode::InvalidArgument, "transport needs >= 16 steps");
  const auto n = static_cast<std::size_t>(conn.n());
  Point x(n), xdot(n);
  auto generator = [&](double t) {
    curve.at(t, x, xdot);
    if (!conn.domain().contains(x)) {
      throw AnalysisError(ErrorCode::CurveLeavesDomain,
                          "curve " + curve.name() + " leaves the domain at t = " +
                              std::to_string(t));
    }
    return conn.connection_along(x, xdot);
  };
  const double dt = (curve.t1() - curve.t0()) / steps;
  Mat v = v0;
  for (int s = 0; s < steps; ++s) {
    const double t = curve.t0() + s * dt;
    const Mat a1 = generator(t);
    const Mat a2 = generator(t + 0.5 * dt);
    const Mat a4 = generator(t + dt);
    const Mat k1 = -a1 * v;
    const Mat k2 = -a2 * (v + 0.5 * dt * k1);
    const Mat k3 = -a2 * (v + 0.5 * dt * k2);
    const Mat k4 = -a4 * (v + dt * k3);
    v += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return {v, steps};
}

HolonomyResult holonomy_matrix(const Connection& conn, std::span<const double> p,
                               const Subspace& wtilde, const Curve& loop, int steps, double tol) {
  if (!loop.closed()) {
    throw AnalysisError(ErrorCode::CurveNotClosed, "loop " + loop.name() + " is not closed");
  }
  if (!same_point(conn.domain(), loop.start(), p)) {
    throw AnalysisError(ErrorCode::InvalidArgument,
                        "loop " + loop.name() + " does not start at the base point");
  }
  HolonomyResult out;
  out.base.assign(p.begin(), p.end());
  out.loop = loop.name();
  const Mat& b = wtilde.basis;
  const Mat end = transport(conn, loop, b, steps).final;
  out.matrix = b.transpose() * end;
  out.defect = (end - b * out.matrix).norm();
  if (!(out.defect < tol)) {
    throw AnalysisError(ErrorCode::DefectTooLarge,
                        "transport around " + loop.name() + " leaves the subspace (defect " +
                            std::to_string(out.defect) + ")");
  }
  return out;
}

SampledSection parallel_extend(const Connection& conn, std::span<const double> p, const Vec& w,
                               double radius, int grid_res, int steps, const Subspace* wtilde,
                               Exec exec) {
  if (grid_res < 2) throw AnalysisError(ErrorCode::InvalidArgument, "grid_res must be >= 2");
  if (wtilde != nullptr) {
    const Vec residual = w - wtilde->basis * (wtilde->basis.transpose() * w);
    if (residual.norm() > 1e-6 * std::max(1.0, w.norm())) {
      throw AnalysisError(ErrorCode::InvalidArgument, "w is not in the terminal subspace");
    }
  }
  const auto n = static_cast<std::size_t>(conn.n());
  const Point origin(p.begin(), p.end());

  SampledSection out;
  std::size_t total = 1;
  for (std::size_t k = 0; k < n; ++k) total *= static_cast<std::size_t>(grid_res);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point q(n);
    std::size_t rem = flat;
    double dist2 = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      const auto i = rem % static_cast<std::size_t>(grid_res);
      rem /= static_cast<std::size_t>(grid_res);
      const double off = -radius + 2.0 * radius * static_cast<double>(i) / (grid_res - 1);
      q[k] = origin[k] + off;
      dist2 += off * off;
    }
    if (dist2 <= radius * radius * (1.0 + 1e-12)) out.nodes.push_back(std::move(q));
  }

  auto corner_of = [&](const Point& q) {
    Point c = origin;
    c[0] = q[0];
    return c;
  };
  for (const auto& q : out.nodes) {
    if (!conn.domain().contains(q) || !conn.domain().contains(corner_of(q))) {
      throw AnalysisError(ErrorCode::OutsideDomain, "extension ball exits the domain");
    }
  }

  const Mat w0 = w;
  out.values = parallel_map<Vec>(
      out.nodes.size(),
      [&](std::size_t i) -> Vec {
        if (out.nodes[i] == origin) return w;
        return transport(conn, Curve::segment(origin, out.nodes[i]), w0, steps).final.col(0);
      },
      exec);

  const std::size_t stride = std::max<std::size_t>(1, out.nodes.size() / 16);
  std::vector<std::size_t> sample;
  for (std::size_t i = 0; i < out.nodes.size(); i += stride) sample.push_back(i);
  const auto deviations = parallel_map<double>(
      sample.size(),
      [&](std::size_t s) -> double {
        const Point& q = out.nodes[sample[s]];
        const Point c = corner_of(q);
        Mat v = w0;
        if (c != origin) v = transport(conn, Curve::segment(origin, c), v, steps).final;
        if (c != q) v = transport(conn, Curve::segment(c, q), v, steps).final;
        return (v.col(0) - out.values[sample[s]]).norm();
      },
      exec);
  for (double dev : deviations) out.residual = std::max(out.residual, dev);
  return out;
}

}  // namespace paracon
