#include "paracon/report.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "paracon/errors.hpp"

namespace paracon {

using nlohmann::json;

namespace {

class Stopwatch {
 public:
  void stage(json& timings, const char* name) {
    const auto now = std::chrono::steady_clock::now();
    timings[name] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

double finite_or_zero(double x) { return std::isfinite(x) ? x : 0.0; }

json point_json(const Point& p) {
  json out = json::array();
  for (double x : p) out.push_back(x);
  return out;
}

Manifest effective(const Manifest& m, const RunOptions& opts) {
  Manifest out = m;
  if (opts.steps) {
    out.rk4_steps = *opts.steps;
    out.quadrature_steps = *opts.steps;
  }
  if (opts.seed) out.seed = *opts.seed;
  return out;
}

json header(const Manifest& m, const char* command) {
  json h;
  h["tool"] = {{"name", "paracon"}, {"version", PARACON_VERSION}};
  h["command"] = command;
  h["manifest"] = {{"id", m.id}, {"digest", m.digest()}};
  h["effective"] = {
      {"tolerances",
       {{"rank_tol", m.tolerances.rank_tol},
        {"stencil_h", m.tolerances.stencil_h},
        {"holonomy_tol", m.tolerances.holonomy_tol},
        {"period_tol", m.tolerances.period_tol},
        {"pd_tol", m.tolerances.pd_tol}}},
      {"rk4_steps", m.rk4_steps},
      {"quadrature_steps", m.quadrature_steps},
      {"seed", m.seed},
      {"pd_restarts", m.pd_restarts},
  };
  return h;
}

json subspace_json(const Subspace& s) {
  return {{"dim", s.dim()},
          {"basis", to_json(s.basis)},
          {"threshold", s.threshold},
          {"smallest_kept", s.smallest_kept},
          {"largest_dropped", s.largest_dropped}};
}

json trace_json(const FlagTrace& t) {
  json levels = json::array();
  for (const auto& l : t.levels) {
    json j = subspace_json(l.space);
    j["level"] = l.level;
    j.erase("basis");
    levels.push_back(std::move(j));
  }
  return {{"point", point_json(t.point)},
          {"dims", t.dims()},
          {"stabilization_level", t.stabilization_level},
          {"terminal_basis", to_json(t.terminal.basis)},
          {"levels", std::move(levels)}};
}

json certificate_json(const PdResult& r) {
  return {{"status", to_string(r.status)},
          {"coefficients", to_json(r.coefficients)},
          {"combination", to_json(r.combination)},
          {"lambda_min", finite_or_zero(r.lambda_min)},
          {"cholesky", to_json(r.cholesky)},
          {"witness", to_json(r.witness)},
          {"witness_residual", finite_or_zero(r.witness_residual)}};
}

json regularity_json(const RegularityReport& r) {
  json dims = json::array();
  json failures = json::array();
  json points = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    points.push_back(point_json(r.points[i]));
    dims.push_back(r.terminal_dims[i] ? json(*r.terminal_dims[i]) : json(nullptr));
    failures.push_back(r.failures[i].empty() ? json(nullptr) : json(r.failures[i]));
  }
  json jumps = json::array();
  for (const auto& [a, b] : r.jumps) jumps.push_back({a, b});
  return {{"points", std::move(points)},
          {"terminal_dims", std::move(dims)},
          {"failures", std::move(failures)},
          {"jumps", std::move(jumps)},
          {"regular_on_grid", r.regular_on_grid}};
}

/// Holonomy in the manifest's reference basis, when that basis spans the
/// terminal subspace at the base point.
std::optional<Mat> in_reference(const Manifest& m, const Domain& dom, const Subspace& wtilde,
                                const Mat& h, std::string* note) {
  if (m.holonomy_basis.empty()) return std::nullopt;
  const Mat ref = m.reference_basis(dom, m.base_point);
  if (ref.cols() != wtilde.dim()) {
    *note = "reference basis size differs from the terminal subspace dimension";
    return std::nullopt;
  }
  const Mat c = wtilde.basis.transpose() * ref;
  if ((ref - wtilde.basis * c).norm() > 1e-6 * std::max(1.0, ref.norm())) {
    *note = "reference basis does not lie in the terminal subspace";
    return std::nullopt;
  }
  return Mat(c.fullPivLu().solve(h * c));
}

json holonomy_json(const Manifest& m, const Domain& dom, const Subspace& wtilde,
                   const HolonomyResult& h) {
  json j = {{"loop", h.loop},
            {"base", point_json(h.base)},
            {"matrix", to_json(h.matrix)},
            {"defect", h.defect},
            {"reference_matrix", nullptr}};
  std::string note;
  if (auto ref = in_reference(m, dom, wtilde, h.matrix, &note)) j["reference_matrix"] = to_json(*ref);
  if (!note.empty()) j["note"] = note;
  return j;
}

json verdict_json(const Manifest& m, const Domain& dom, const GlobalVerdict& v) {
  json g;
  g["status"] = to_string(v.status);
  g["wtilde_rank"] = v.wtilde_rank;
  g["fixed_dim"] = v.fixed.dim();
  g["fixed_basis"] = to_json(v.fixed_ambient);
  g["rank_wm"] = v.rank_wm;
  g["rank_tau_reported"] = v.rank_tau_reported ? json(*v.rank_tau_reported) : json(nullptr);
  g["tau_least_level"] = v.tau_least_level;
  g["certificate"] = v.certificate ? certificate_json(*v.certificate) : json(nullptr);
  g["fixed_reference"] = nullptr;
  if (v.base_trace && !m.holonomy_basis.empty() && v.fixed.dim() > 0) {
    const Mat ref = m.reference_basis(dom, m.base_point);
    const Subspace& w = v.base_trace->terminal;
    if (ref.cols() == w.dim()) {
      const Mat c = w.basis.transpose() * ref;
      Mat coords = c.fullPivLu().solve(v.fixed.basis);
      for (Eigen::Index col = 0; col < coords.cols(); ++col) {
        Eigen::Index idx = 0;
        coords.col(col).cwiseAbs().maxCoeff(&idx);
        coords.col(col) /= coords(idx, col);
      }
      g["fixed_reference"] = to_json(coords);
    }
  }
  if (v.metrics) {
    json forms = json::array();
    for (const auto& f : v.metrics->forms) forms.push_back(to_json(f));
    g["parallel_metrics"] = {{"forms", std::move(forms)},
                             {"epsilon", v.metrics->epsilon},
                             {"first_passing_epsilon", v.metrics->first_passing_epsilon}};
  } else {
    g["parallel_metrics"] = nullptr;
  }
  if (v.periods) {
    json loops = json::array();
    for (const auto& lp : v.periods->loops) {
      double max_phi = 0.0;
      for (const auto& phi : lp.phi) max_phi = std::max(max_phi, phi.cwiseAbs().maxCoeff());
      loops.push_back({{"loop", lp.loop},
                       {"period", lp.period},
                       {"length", lp.length},
                       {"nodes", lp.t.size()},
                       {"max_abs_phi", max_phi}});
    }
    g["periods"] = std::move(loops);
  } else {
    g["periods"] = nullptr;
  }
  g["periods_vanish"] = v.periods_vanish ? json(*v.periods_vanish) : json(nullptr);
  g["criteria_agree"] = v.criteria_agree ? json(*v.criteria_agree) : json(nullptr);
  g["notes"] = v.notes;
  return g;
}

int exit_for(GlobalStatus s) {
  return (s == GlobalStatus::metric || s == GlobalStatus::not_metric) ? 0 : 2;
}

RunResult run_pipeline(const Manifest& input, const RunOptions& opts, bool full) {
  const Manifest m = effective(input, opts);
  Stopwatch watch;
  json timings;
  const Connection conn = m.build_connection();
  const Domain& dom = conn.domain();
  const std::vector<Curve> loops = m.build_loops(dom);
  const GlobalOptions gopts = m.global_options(opts.exec);
  watch.stage(timings, "setup");

  json report = header(m, full ? "analyze" : "global");
  if (full) {
    struct Item {
      std::optional<FlagTrace> trace;
      std::string error;
    };
    const auto items = parallel_map<Item>(
        m.grid.points.size(),
        [&](std::size_t i) -> Item {
          try {
            return {derived_flag(conn, m.grid.points[i], gopts.flag), {}};
          } catch (const AnalysisError& err) {
            if (err.code() != ErrorCode::IrregularPoint) throw;
            return {std::nullopt, err.what()};
          }
        },
        opts.exec);
    watch.stage(timings, "flag_traces");

    json traces = json::array();
    json local = json::array();
    for (std::size_t i = 0; i < items.size(); ++i) {
      json t;
      if (items[i].trace) {
        t = trace_json(*items[i].trace);
      } else {
        t = {{"point", point_json(m.grid.points[i])}, {"error", items[i].error}};
      }
      t["index"] = i;
      traces.push_back(std::move(t));
    }
    if (conn.kind() == ConnectionSpec::Kind::christoffel) {
      const auto lm = parallel_map<json>(
          items.size(),
          [&](std::size_t i) -> json {
            if (!items[i].trace) return {{"index", i}, {"locally_metric", nullptr}, {"status", nullptr}};
            PdOptions pd = gopts.pd;
            pd.exec = Exec::serial;
            const LocalMetricity r = local_metricity(conn, *items[i].trace, pd);
            return {{"index", i},
                    {"locally_metric", r.locally_metric},
                    {"status", to_string(r.certificate.status)},
                    {"lambda_min", finite_or_zero(r.certificate.lambda_min)}};
          },
          opts.exec);
      for (const auto& j : lm) local.push_back(j);
    }
    report["flag_traces"] = std::move(traces);
    report["local_metricity"] = conn.kind() == ConnectionSpec::Kind::christoffel ? std::move(local) : json(nullptr);
    watch.stage(timings, "local_metricity");
  }

  const GlobalVerdict v = global_metricity(conn, m.base_point, loops, m.grid, gopts);
  watch.stage(timings, "global");

  report["regularity"] = regularity_json(v.regularity);
  json holonomies = json::array();
  for (const auto& h : v.holonomies) holonomies.push_back(holonomy_json(m, dom, v.base_trace->terminal, h));
  report["holonomies"] = std::move(holonomies);
  report["global"] = verdict_json(m, dom, v);
  report["caveats"] = v.caveats;
  if (opts.timings) report["timings"] = std::move(timings);
  return {std::move(report), exit_for(v.status)};
}

}  // namespace

json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(finite_or_zero(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(finite_or_zero(v(i)));
  return out;
}

RunResult run_analyze(const Manifest& manifest, const RunOptions& opts) {
  return run_pipeline(manifest, opts, true);
}

RunResult run_global(const Manifest& manifest, const RunOptions& opts) {
  return run_pipeline(manifest, opts, false);
}

RunResult run_flag(const Manifest& input, const std::vector<double>& point, const RunOptions& opts) {
  const Manifest m = effective(input, opts);
  const Connection conn = m.build_connection();
  const auto n = static_cast<std::size_t>(conn.n());
  if (point.empty() || point.size() > n) {
    throw AnalysisError(ErrorCode::InvalidArgument,
                        "point needs between 1 and " + std::to_string(n) + " coordinates");
  }
  Point p = m.base_point;
  std::copy(point.begin(), point.end(), p.begin());
  conn.domain().require(p);

  Stopwatch watch;
  json timings;
  json report = header(m, "flag");
  RunResult out;
  try {
    const FlagTrace trace = derived_flag(conn, p, m.global_options(opts.exec).flag);
    report["trace"] = trace_json(trace);
    report["error"] = nullptr;
    if (conn.kind() == ConnectionSpec::Kind::christoffel) {
      PdOptions pd = m.global_options(opts.exec).pd;
      const LocalMetricity r = local_metricity(conn, trace, pd);
      report["local_metricity"] = {{"locally_metric", r.locally_metric},
                                   {"certificate", certificate_json(r.certificate)}};
    } else {
      report["local_metricity"] = nullptr;
    }
    out.exit_code = 0;
  } catch (const AnalysisError& err) {
    if (err.code() != ErrorCode::IrregularPoint) throw;
    report["trace"] = {{"point", point_json(p)}};
    report["error"] = err.what();
    report["local_metricity"] = nullptr;
    out.exit_code = 2;
  }
  watch.stage(timings, "flag");
  if (opts.timings) report["timings"] = std::move(timings);
  out.report = std::move(report);
  return out;
}

RunResult run_holonomy(const Manifest& input, const std::string& loop, const RunOptions& opts) {
  const Manifest m = effective(input, opts);
  const Connection conn = m.build_connection();
  const Domain& dom = conn.domain();
  const std::vector<Curve> loops = m.build_loops(dom);
  const Curve* curve = nullptr;
  for (const auto& c : loops) {
    if (c.name() == loop) curve = &c;
  }
  if (curve == nullptr) throw AnalysisError(ErrorCode::InvalidArgument, "no loop named " + loop);

  Stopwatch watch;
  json timings;
  const GlobalOptions gopts = m.global_options(opts.exec);
  const FlagTrace trace = derived_flag(conn, m.base_point, gopts.flag);
  json report = header(m, "holonomy");
  report["wtilde_rank"] = trace.terminal.dim();
  RunResult out;
  try {
    const HolonomyResult h =
        holonomy_matrix(conn, m.base_point, trace.terminal, *curve, gopts.rk4_steps, gopts.holonomy_tol);
    report["holonomy"] = holonomy_json(m, dom, trace.terminal, h);
    report["status"] = "ok";
    out.exit_code = 0;
  } catch (const AnalysisError& err) {
    if (err.code() != ErrorCode::DefectTooLarge) throw;
    report["holonomy"] = nullptr;
    report["status"] = "inconclusive";
    report["error"] = err.what();
    out.exit_code = 2;
  }
  watch.stage(timings, "holonomy");
  report["caveats"] = json::array({"certified on the declared chart only"});
  if (opts.timings) report["timings"] = std::move(timings);
  out.report = std::move(report);
  return out;
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

std::string text_summary(const json& r) {
  std::ostringstream os;
  os << "paracon " << r["tool"]["version"].get<std::string>() << "  " << r["command"].get<std::string>()
     << "  manifest " << r["manifest"]["id"].get<std::string>() << " (" << r["manifest"]["digest"].get<std::string>()
     << ")\n";
  auto dims_of = [](const json& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (i) s += ",";
      s += dims[i].is_null() ? "?" : std::to_string(dims[i].get<int>());
    }
    return s + "]";
  };
  if (r.contains("trace")) {
    const json& t = r["trace"];
    if (t.contains("dims")) os << "flag dims " << dims_of(t["dims"]) << "\n";
    if (!r["error"].is_null()) os << "error: " << r["error"].get<std::string>() << "\n";
    if (!r["local_metricity"].is_null()) {
      os << "locally metric: " << (r["local_metricity"]["locally_metric"].get<bool>() ? "yes" : "no") << "\n";
    }
  }
  if (r.contains("holonomy")) {
    os << "terminal rank " << r["wtilde_rank"].get<int>() << ", status " << r["status"].get<std::string>() << "\n";
    if (!r["holonomy"].is_null()) {
      os << "holonomy " << r["holonomy"]["loop"].get<std::string>() << " = " << r["holonomy"]["matrix"].dump()
         << " (defect " << r["holonomy"]["defect"].get<double>() << ")\n";
    }
  }
  if (r.contains("regularity")) {
    os << "terminal dims on grid " << dims_of(r["regularity"]["terminal_dims"])
       << (r["regularity"]["regular_on_grid"].get<bool>() ? " (regular)" : " (not regular)") << "\n";
  }
  if (r.contains("global")) {
    const json& g = r["global"];
    os << "status " << g["status"].get<std::string>() << ", terminal rank " << g["wtilde_rank"].get<int>()
       << ", fixed dim " << g["fixed_dim"].get<int>() << ", rank_wm " << g["rank_wm"].get<int>() << "\n";
    for (const auto& h : r["holonomies"]) {
      os << "  holonomy " << h["loop"].get<std::string>() << " = " << h["matrix"].dump() << "\n";
    }
    if (!g["periods"].is_null()) {
      for (const auto& p : g["periods"]) {
        os << "  period " << p["loop"].get<std::string>() << " = " << p["period"].get<double>() << "\n";
      }
    }
    for (const auto& note : g["notes"]) os << "  note: " << note.get<std::string>() << "\n";
  }
  if (r.contains("caveats")) {
    for (const auto& c : r["caveats"]) os << "caveat: " << c.get<std::string>() << "\n";
  }
  return os.str();
}

}  // namespace paracon
