#include "paracon/bundle.hpp"

#include <cmath>
#include <sstream>

#include "paracon/errors.hpp"

namespace paracon {

namespace {

std::string format_point(std::span<const double> p) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
  os << ")";
  return os.str();
}

void collect_conditions(const expr::Expr& e, std::vector<expr::Expr>& out) {
  if (e->op == expr::Op::If) {
    out.push_back(expr::binary(expr::Op::Sub, e->args[0], e->args[1]));
  }
  for (const auto& a : e->args) collect_conditions(a, out);
}

}  // namespace

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(std::vector<Coordinate> coords, std::vector<expr::Expr> excluded,
               double exclusion_radius, const Params& params)
    : coords_(std::move(coords)), exclusion_radius_(exclusion_radius), params_(params) {
  for (const auto& c : coords_) {
    if (!(c.lo < c.hi)) {
      throw AnalysisError(ErrorCode::InvalidArgument, "degenerate range for coordinate " + c.name);
    }
    if (c.period && !(*c.period > 0.0)) {
      throw AnalysisError(ErrorCode::InvalidArgument, "non-positive period for " + c.name);
    }
    slots_.push_back(c.name);
  }
  for (const auto& [name, value] : params_) {
    slots_.push_back(name);
    param_values_.push_back(value);
  }
  try {
    for (const auto& e : excluded) excluded_.push_back(expr::Program::compile(e, slots_));
  } catch (const expr::EvalError& err) {
    throw AnalysisError(ErrorCode::ExpressionFailure, err.what());
  }
}

int Domain::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (coords_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void Domain::wrap(std::span<double> p) const {
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    const auto& c = coords_[i];
    if (!c.period || !std::isfinite(c.lo)) continue;
    const double t = std::floor((p[i] - c.lo) / *c.period);
    p[i] -= t * *c.period;
  }
}

bool Domain::contains(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != dim()) return false;
  Point q(p.begin(), p.end());
  wrap(q);
  for (std::size_t i = 0; i < coords_.size(); ++i) {
    if (!std::isfinite(q[i])) return false;
    const auto& c = coords_[i];
    const bool wrapped = c.period.has_value() && std::isfinite(c.lo);
    if (q[i] <= c.lo && !(wrapped && q[i] == c.lo)) return false;
    if (q[i] >= c.hi) return false;
  }
  if (excluded_.empty()) return true;
  std::vector<double> slots;
  fill_slots(q, slots);
  for (const auto& prog : excluded_) {
    try {
      if (std::abs(prog.run(slots)) < exclusion_radius_) return false;
    } catch (const expr::EvalError&) {
      return false;
    }
  }
  return true;
}

void Domain::require(std::span<const double> p) const {
  if (!contains(p)) {
    throw AnalysisError(ErrorCode::OutsideDomain, "point " + format_point(p) + " not in domain");
  }
}

void Domain::fill_slots(std::span<const double> p, std::vector<double>& slots) const {
  slots.resize(slots_.size());
  for (std::size_t i = 0; i < coords_.size(); ++i) slots[i] = p[i];
  for (std::size_t i = 0; i < param_values_.size(); ++i) slots[coords_.size() + i] = param_values_[i];
}

// ---------------------------------------------------------------------------
// SymIndex

SymIndex::SymIndex(int n) : n_(n), table_(static_cast<std::size_t>(n * n), -1) {
  for (int i = 0; i < n; ++i) {
    pairs_.emplace_back(i, i);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs_.emplace_back(i, j);
  }
  for (int a = 0; a < size(); ++a) {
    const auto [i, j] = pairs_[static_cast<std::size_t>(a)];
    table_[static_cast<std::size_t>(i * n + j)] = a;
    table_[static_cast<std::size_t>(j * n + i)] = a;
  }
}

double SymIndex::weight(int a) const {
  const auto [i, j] = pair(a);
  return i == j ? 1.0 : 2.0;
}

Mat SymIndex::to_matrix(const Vec& components) const {
  Mat m(n_, n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j) m(i, j) = components(index(i, j));
  }
  return m;
}

Vec SymIndex::from_matrix(const Mat& m) const {
  Vec v(size());
  for (int a = 0; a < size(); ++a) {
    const auto [i, j] = pair(a);
    v(a) = 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

double SymIndex::frobenius(const Vec& a, const Vec& b) const {
  double s = 0.0;
  for (int k = 0; k < size(); ++k) s += weight(k) * a(k) * b(k);
  return s;
}

// ---------------------------------------------------------------------------
// ConnectionSpec

ConnectionSpec ConnectionSpec::christoffel(int n) {
  ConnectionSpec s;
  s.kind = Kind::christoffel;
  s.n = n;
  s.rank = n * (n + 1) / 2;
  s.exprs.assign(static_cast<std::size_t>(n * n * n), nullptr);
  return s;
}

ConnectionSpec ConnectionSpec::matrix(int n, int rank) {
  ConnectionSpec s;
  s.kind = Kind::matrix;
  s.n = n;
  s.rank = rank;
  s.exprs.assign(static_cast<std::size_t>(n * rank * rank), nullptr);
  return s;
}

expr::Expr& ConnectionSpec::gamma(int k, int i, int j) {
  return exprs[static_cast<std::size_t>((k * n + i) * n + j)];
}

expr::Expr& ConnectionSpec::form(int k, int a, int b) {
  return exprs[static_cast<std::size_t>((k * rank + a) * rank + b)];
}

int ConnectionSpec::fiber_rank() const {
  return kind == Kind::christoffel ? n * (n + 1) / 2 : rank;
}

// ---------------------------------------------------------------------------
// Connection

Connection::Connection(Domain domain, ConnectionSpec spec)
    : domain_(std::move(domain)), spec_(std::move(spec)) {
  if (spec_.n != domain_.dim()) {
    throw AnalysisError(ErrorCode::InvalidArgument, "connection dimension does not match domain");
  }
  if (spec_.n < 1 || spec_.fiber_rank() < 1) {
    throw AnalysisError(ErrorCode::InvalidArgument, "empty chart or fiber");
  }
  fiber_rank_ = spec_.fiber_rank();
  sym_ = SymIndex(spec_.kind == ConnectionSpec::Kind::christoffel ? spec_.n : 0);
  for (int i = 0; i < spec_.n; ++i) {
    for (int j = i + 1; j < spec_.n; ++j) pairs_.emplace_back(i, j);
  }

  const auto& slots = domain_.slot_names();
  std::vector<expr::Expr> conditions;
  try {
    for (auto& e : spec_.exprs) {
      if (!e) e = expr::constant(0.0);
      programs_.push_back(expr::Program::compile(e, slots));
      for (int m = 0; m < spec_.n; ++m) {
        derivatives_.push_back(
            expr::Program::compile(expr::diff(e, domain_.coords()[m].name), slots));
      }
      collect_conditions(e, conditions);
    }
    for (const auto& c : conditions) {
      conditions_.push_back(expr::Program::compile(c, slots));
      std::vector<int> coords;
      for (int m = 0; m < spec_.n; ++m) {
        if (expr::depends_on(c, domain_.coords()[m].name)) coords.push_back(m);
      }
      condition_coords_.push_back(std::move(coords));
    }
  } catch (const expr::EvalError& err) {
    throw AnalysisError(ErrorCode::ExpressionFailure, err.what());
  }
}

void Connection::evaluate(std::span<const double> p, std::vector<double>& values,
                          bool derivatives, std::vector<double>& dvalues) const {
  domain_.require(p);
  Point q(p.begin(), p.end());
  domain_.wrap(q);
  std::vector<double> slots;
  domain_.fill_slots(q, slots);
  const std::size_t count = programs_.size();
  const auto n = static_cast<std::size_t>(spec_.n);
  values.assign(count, 0.0);
  if (derivatives) dvalues.assign(count * n, 0.0);
  try {
    for (std::size_t e = 0; e < count; ++e) {
      if (!programs_[e].is_zero()) values[e] = programs_[e].run(slots);
      if (!derivatives) continue;
      for (std::size_t m = 0; m < n; ++m) {
        const auto& d = derivatives_[e * n + m];
        if (!d.is_zero()) dvalues[e * n + m] = d.run(slots);
      }
    }
  } catch (const expr::EvalError& err) {
    throw AnalysisError(ErrorCode::ExpressionFailure,
                        std::string(err.what()) + " at " + format_point(p));
  }
}

std::vector<Mat> Connection::assemble(const std::vector<double>& values) const {
  const int n = spec_.n;
  const int N = fiber_rank_;
  std::vector<Mat> omega(static_cast<std::size_t>(n), Mat::Zero(N, N));
  if (spec_.kind == ConnectionSpec::Kind::matrix) {
    for (int k = 0; k < n; ++k) {
      for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
          omega[static_cast<std::size_t>(k)](a, b) =
              values[static_cast<std::size_t>((k * N + a) * N + b)];
        }
      }
    }
    return omega;
  }
  auto gamma = [&](int l, int k, int i) {
    return values[static_cast<std::size_t>((l * n + k) * n + i)];
  };
  for (int k = 0; k < n; ++k) {
    Mat& om = omega[static_cast<std::size_t>(k)];
    for (int a = 0; a < N; ++a) {
      const auto [i, j] = sym_.pair(a);
      for (int l = 0; l < n; ++l) {
        om(a, sym_.index(l, j)) -= gamma(l, k, i);
        om(a, sym_.index(i, l)) -= gamma(l, k, j);
      }
    }
  }
  return omega;
}

std::vector<Mat> Connection::connection_matrices(std::span<const double> p) const {
  std::vector<double> values;
  std::vector<double> unused;
  evaluate(p, values, false, unused);
  return assemble(values);
}

std::vector<Mat> Connection::curvature_operators(std::span<const double> p) const {
  std::vector<double> values;
  std::vector<double> dvalues;
  evaluate(p, values, true, dvalues);
  const std::vector<Mat> omega = assemble(values);

  const auto n = static_cast<std::size_t>(spec_.n);
  // d_omega[m][k] = d_m Omega_k
  std::vector<std::vector<Mat>> d_omega(n);
  std::vector<double> slice(values.size());
  for (std::size_t m = 0; m < n; ++m) {
    for (std::size_t e = 0; e < values.size(); ++e) slice[e] = dvalues[e * n + m];
    d_omega[m] = assemble(slice);
  }

  std::vector<Mat> out;
  out.reserve(pairs_.size());
  for (const auto& [i, j] : pairs_) {
    const auto ui = static_cast<std::size_t>(i);
    const auto uj = static_cast<std::size_t>(j);
    out.push_back(d_omega[ui][uj] - d_omega[uj][ui] + omega[ui] * omega[uj] -
                  omega[uj] * omega[ui]);
  }
  return out;
}

Mat Connection::connection_along(std::span<const double> p, std::span<const double> v) const {
  const auto omega = connection_matrices(p);
  Mat a = Mat::Zero(fiber_rank_, fiber_rank_);
  for (std::size_t k = 0; k < omega.size(); ++k) a += v[k] * omega[k];
  return a;
}

bool Connection::nudge_off_breakpoints(std::span<double> p) const {
  bool moved = false;
  std::vector<double> slots;
  for (int pass = 0; pass < 8; ++pass) {
    domain_.fill_slots(p, slots);
    bool hit = false;
    for (std::size_t c = 0; c < conditions_.size(); ++c) {
      double v = 1.0;
      try {
        v = conditions_[c].run(slots);
      } catch (const expr::EvalError&) {
        continue;
      }
      if (v != 0.0) continue;
      hit = true;
      for (int m : condition_coords_[c]) p[static_cast<std::size_t>(m)] += 1e-12;
    }
    if (!hit) break;
    moved = true;
  }
  return moved;
}

}  // namespace paracon
