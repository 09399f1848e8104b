#include "paracon/global.hpp"

#include <array>
#include <cmath>

#include <Eigen/LU>

#include "paracon/errors.hpp"

namespace paracon {

namespace {

constexpr const char* kLoopCaveat =
    "conditional on the declared loops generating the fundamental group of the chart domain";
constexpr const char* kChartCaveat = "certified on the declared chart only";

}  // namespace

PhiSampler::PhiSampler(const Connection& conn, FlagOptions flag, double derivative_h,
                       std::optional<expr::Expr> scale)
    : conn_(&conn), flag_(flag), h_(derivative_h) {
  if (scale) {
    try {
      scale_ = expr::Program::compile(*scale, conn.domain().slot_names());
    } catch (const expr::EvalError& err) {
      throw AnalysisError(ErrorCode::ExpressionFailure, err.what());
    }
  }
}

Vec PhiSampler::generator(std::span<const double> q) const {
  const FlagTrace trace = derived_flag(*conn_, q, flag_);
  if (trace.terminal.dim() != 1) {
    throw AnalysisError(ErrorCode::RankNotOne, "terminal subspace has dimension " +
                                                   std::to_string(trace.terminal.dim()));
  }
  const SymIndex& sym = conn_->sym();
  Vec s = trace.terminal.basis.col(0);
  s /= std::sqrt(sym.frobenius(s, s));
  const double tr = sym.to_matrix(s).trace();
  if (tr < 0.0) s = -s;
  if (!is_positive_definite(sym.to_matrix(s))) {
    throw AnalysisError(ErrorCode::GeneratorNotPD, "generator is not positive definite");
  }
  if (scale_) {
    std::vector<double> slots;
    conn_->domain().fill_slots(q, slots);
    double f = 0.0;
    try {
      f = scale_->run(slots);
    } catch (const expr::EvalError& err) {
      throw AnalysisError(ErrorCode::ExpressionFailure, err.what());
    }
    if (!(f > 0.0)) throw AnalysisError(ErrorCode::InvalidArgument, "tracker scale must be positive");
    s *= f;
  }
  return s;
}

Vec PhiSampler::operator()(std::span<const double> q) const {
  constexpr std::array<int, 4> kOffsets{-2, -1, 1, 2};
  constexpr std::array<double, 4> kWeights{1.0, -8.0, 8.0, -1.0};
  const SymIndex& sym = conn_->sym();
  const Vec s = generator(q);
  const auto omega = conn_->connection_matrices(q);
  const double norm2 = sym.frobenius(s, s);
  Vec phi(conn_->n());
  for (int k = 0; k < conn_->n(); ++k) {
    Vec ds = Vec::Zero(s.size());
    for (std::size_t i = 0; i < kOffsets.size(); ++i) {
      Point x(q.begin(), q.end());
      x[static_cast<std::size_t>(k)] += kOffsets[i] * h_;
      ds += (kWeights[i] / (12.0 * h_)) * generator(x);
    }
    const Vec nabla = ds + omega[static_cast<std::size_t>(k)] * s;
    phi(k) = sym.frobenius(nabla, s) / norm2;
  }
  return phi;
}

PhiSampler phi_form(const Connection& conn, std::span<const double> p, const Subspace& wtilde,
                    const FlagOptions& flag, std::optional<expr::Expr> scale) {
  if (conn.kind() != ConnectionSpec::Kind::christoffel) {
    throw AnalysisError(ErrorCode::NotSym2Bundle, "Phi needs a connection on Sym^2 T*M");
  }
  if (wtilde.dim() != 1) {
    throw AnalysisError(ErrorCode::RankNotOne,
                        "terminal subspace has dimension " + std::to_string(wtilde.dim()));
  }
  PhiSampler sampler(conn, flag, 1e-3, std::move(scale));
  sampler.generator(p);  // precondition check at p
  return sampler;
}

PhiPeriods phi_periods(const PhiSampler& phi, std::span<const Curve> loops, int quadrature_steps,
                       Exec exec) {
  PhiPeriods out;
  const auto n = static_cast<std::size_t>(phi.connection().n());
  for (const auto& loop : loops) {
    if (!loop.closed()) {
      throw AnalysisError(ErrorCode::CurveNotClosed, "loop " + loop.name() + " is not closed");
    }
    LoopPeriod lp;
    lp.loop = loop.name();
    lp.length = loop.length();
    const double dt = (loop.t1() - loop.t0()) / quadrature_steps;
    struct Node {
      double t;
      Vec phi;
      double integrand;
    };
    const auto nodes = parallel_map<Node>(
        static_cast<std::size_t>(quadrature_steps),
        [&](std::size_t i) -> Node {
          const double t = loop.t0() + static_cast<double>(i) * dt;
          Point x(n), xdot(n);
          loop.at(t, x, xdot);
          Vec value = phi(x);
          double integrand = 0.0;
          for (std::size_t k = 0; k < n; ++k) integrand += value(static_cast<Eigen::Index>(k)) * xdot[k];
          return {t, std::move(value), integrand};
        },
        exec);
    for (const auto& node : nodes) {
      lp.t.push_back(node.t);
      lp.phi.push_back(node.phi);
      lp.period += node.integrand;
    }
    lp.period *= dt;
    out.loops.push_back(std::move(lp));
  }
  return out;
}

Subspace fixed_subspace(std::span<const HolonomyResult> holonomies, Eigen::Index d,
                        double rank_tol) {
  if (holonomies.empty() || d == 0) return Subspace::full(d);
  std::vector<Mat> mats;
  for (const auto& h : holonomies) mats.push_back(h.matrix - Mat::Identity(d, d));
  return kernel_intersection(mats, rank_tol, 1.0);
}

double invariant_inner_product(const Mat& s, const Mat& h, const Mat& h2) {
  Eigen::FullPivLU<Mat> lu(s);
  if (!lu.isInvertible()) throw AnalysisError(ErrorCode::SingularMetric, "metric is singular");
  const Mat inv = lu.inverse();
  return (inv * h * inv * h2).trace();
}

const char* to_string(GlobalStatus s) {
  switch (s) {
    case GlobalStatus::metric: return "metric";
    case GlobalStatus::not_metric: return "not_metric";
    case GlobalStatus::inconclusive: return "inconclusive";
    case GlobalStatus::not_regular: return "not_regular";
  }
  return "inconclusive";
}

GlobalVerdict global_metricity(const Connection& conn, std::span<const double> p,
                               std::span<const Curve> loops, const Grid& grid,
                               const GlobalOptions& opts) {
  GlobalVerdict v;
  v.caveats = {kLoopCaveat, kChartCaveat};

  v.regularity = regularity_scan(conn, grid, opts.flag, opts.exec);
  if (!v.regularity.regular_on_grid) {
    v.status = GlobalStatus::not_regular;
    v.notes.push_back("terminal flag dimension varies over the grid; no global claim is made");
    return v;
  }

  try {
    v.base_trace = derived_flag(conn, p, opts.flag);
  } catch (const AnalysisError& err) {
    if (err.code() != ErrorCode::IrregularPoint) throw;
    v.status = GlobalStatus::not_regular;
    v.notes.push_back(err.what());
    return v;
  }
  const Subspace& wtilde = v.base_trace->terminal;
  v.wtilde_rank = static_cast<int>(wtilde.dim());
  const bool sym2 = conn.kind() == ConnectionSpec::Kind::christoffel;

  if (v.wtilde_rank == 0) {
    v.fixed = Subspace::zero(0);
    v.fixed_ambient = Mat(conn.N(), 0);
    v.status = GlobalStatus::not_metric;
    v.notes.push_back("no local parallel sections at the base point");
    return v;
  }

  bool defect = false;
  {
    struct Item {
      std::optional<HolonomyResult> result;
      std::string error;
    };
    const auto items = parallel_map<Item>(
        loops.size(),
        [&](std::size_t i) -> Item {
          try {
            return {holonomy_matrix(conn, p, wtilde, loops[i], opts.rk4_steps, opts.holonomy_tol), {}};
          } catch (const AnalysisError& err) {
            if (err.code() != ErrorCode::DefectTooLarge) throw;
            return {std::nullopt, err.what()};
          }
        },
        opts.exec);
    for (const auto& it : items) {
      if (it.result) {
        v.holonomies.push_back(*it.result);
      } else {
        defect = true;
        v.notes.push_back(it.error);
      }
    }
  }
  if (defect) {
    v.status = GlobalStatus::inconclusive;
    return v;
  }

  v.fixed = fixed_subspace(v.holonomies, wtilde.dim(), opts.flag.rank_tol);
  v.fixed_ambient = wtilde.basis * v.fixed.basis;
  const int m = static_cast<int>(v.fixed.dim());
  v.tau_least_level = v.wtilde_rank - m;

  if (!sym2) {
    v.status = m == 0 ? GlobalStatus::not_metric : GlobalStatus::inconclusive;
    v.notes.push_back(m == 0 ? "no global parallel section exists"
                             : "fiber is not Sym^2 T*M; positivity is undefined");
    return v;
  }

  if (m == 0) {
    v.status = GlobalStatus::not_metric;
    v.notes.push_back("no holonomy-fixed vectors: no global parallel sections");
  } else {
    const SymSpan span = SymSpan::from_fiber(conn.sym(), v.fixed_ambient);
    v.certificate = pd_feasible(span, opts.pd);
    switch (v.certificate->status) {
      case PdStatus::feasible:
        v.status = GlobalStatus::metric;
        v.rank_wm = m;
        v.rank_tau_reported = m;
        v.metrics = pd_basis(span, 0, opts.pd);
        break;
      case PdStatus::infeasible_certified: v.status = GlobalStatus::not_metric; break;
      case PdStatus::inconclusive: v.status = GlobalStatus::inconclusive; break;
    }
  }

  if (v.wtilde_rank == 1) {
    try {
      const PhiSampler phi = phi_form(conn, p, wtilde, opts.flag);
      PhiSampler sampler(conn, opts.flag, opts.phi_h);
      v.periods = phi_periods(sampler, loops, opts.quadrature_steps, opts.exec);
      bool vanish = true;
      for (const auto& lp : v.periods->loops) {
        if (!(std::abs(lp.period) < opts.period_tol * (1.0 + lp.length))) vanish = false;
      }
      v.periods_vanish = vanish;
      const bool metric = v.status == GlobalStatus::metric;
      v.criteria_agree = vanish == metric;
      if (!*v.criteria_agree && v.status != GlobalStatus::inconclusive) {
        v.notes.push_back("period test and holonomy test disagree");
        v.status = GlobalStatus::inconclusive;
      }
    } catch (const AnalysisError& err) {
      if (err.code() != ErrorCode::GeneratorNotPD && err.code() != ErrorCode::RankNotOne &&
          err.code() != ErrorCode::IrregularPoint) {
        throw;
      }
      v.notes.push_back(std::string("period test skipped: ") + err.what());
    }
  }

  if (v.status == GlobalStatus::metric && v.rank_wm != static_cast<int>(v.fixed.dim())) {
    v.notes.push_back("rank of parallel metrics differs from fixed-subspace dimension");
    v.status = GlobalStatus::inconclusive;
  }
  return v;
}

}  // namespace paracon
