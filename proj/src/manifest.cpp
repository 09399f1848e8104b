#include "paracon/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "paracon/errors.hpp"

namespace paracon {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw AnalysisError(ErrorCode::ManifestInvalid, (pointer.empty() ? "/" : pointer) + ": " + what);
}

std::string at(const std::string& pointer, const std::string& key) {
  // JSON pointer escaping for keys
  std::string k;
  for (char c : key) {
    if (c == '~') k += "~0";
    else if (c == '/') k += "~1";
    else k += c;
  }
  return pointer + "/" + k;
}

std::string at(const std::string& pointer, std::size_t index) {
  return pointer + "/" + std::to_string(index);
}

void allow_keys(const json& obj, const std::string& pointer, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(pointer, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) fail(at(pointer, key), "unknown key");
  }
}

const json& require_key(const json& obj, const std::string& pointer, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(at(pointer, key), "missing required key");
  return *it;
}

bool valid_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return true;
}

class Reader {
 public:
  explicit Reader(const Params& params) : params_(params) {}

  expr::Expr expression(const json& v, const std::string& pointer,
                        const std::vector<std::string>& variables) const {
    expr::Expr e;
    if (v.is_number()) {
      e = expr::constant(v.get<double>());
    } else if (v.is_string()) {
      try {
        e = expr::parse(v.get<std::string>());
      } catch (const expr::ParseError& err) {
        fail(pointer, err.what());
      }
    } else {
      fail(pointer, "expected an expression string or a number");
    }
    std::vector<std::string> names;
    expr::collect_symbols(e, names);
    for (const auto& name : names) {
      bool known = params_.count(name) > 0;
      for (const auto& var : variables) known = known || var == name;
      if (!known) fail(pointer, "unbound name '" + name + "'");
    }
    return e;
  }

  double real(const json& v, const std::string& pointer) const {
    const expr::Expr e = expression(v, pointer, {});
    expr::EvalContext ctx;
    for (const auto& [k, value] : params_) ctx.parameters.emplace(k, value);
    try {
      const double x = expr::eval(e, ctx);
      if (!std::isfinite(x)) fail(pointer, "value is not finite");
      return x;
    } catch (const expr::EvalError& err) {
      fail(pointer, err.what());
    }
  }

  int positive_int(const json& v, const std::string& pointer) const {
    if (!v.is_number_integer() || v.get<long long>() <= 0) fail(pointer, "expected a positive integer");
    return static_cast<int>(v.get<long long>());
  }

 private:
  const Params& params_;
};

Coordinate read_coordinate(const json& v, const std::string& pointer, const Reader& reader) {
  allow_keys(v, pointer, {"name", "range", "period"});
  Coordinate c;
  const json& name = require_key(v, pointer, "name");
  if (!name.is_string() || !valid_identifier(name.get<std::string>())) {
    fail(at(pointer, "name"), "expected an identifier");
  }
  c.name = name.get<std::string>();
  if (auto it = v.find("range"); it != v.end()) {
    const std::string rp = at(pointer, "range");
    if (!it->is_array() || it->size() != 2) fail(rp, "expected [lo, hi]");
    if (!(*it)[0].is_null()) c.lo = reader.real((*it)[0], at(rp, 0));
    if (!(*it)[1].is_null()) c.hi = reader.real((*it)[1], at(rp, 1));
    if (!(c.lo < c.hi)) fail(rp, "lo must be below hi");
  }
  if (auto it = v.find("period"); it != v.end() && !it->is_null()) {
    c.period = reader.real(*it, at(pointer, "period"));
    if (!(*c.period > 0.0)) fail(at(pointer, "period"), "period must be positive");
  }
  return c;
}

int coord_index(const std::vector<Coordinate>& coords, const json& v, const std::string& pointer) {
  if (!v.is_string()) fail(pointer, "expected a coordinate name");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].name == v.get<std::string>()) return static_cast<int>(i);
  }
  fail(pointer, "unknown coordinate '" + v.get<std::string>() + "'");
}

ConnectionSpec read_connection(const json& v, const std::string& pointer,
                               const std::vector<Coordinate>& coords, const Reader& reader,
                               const std::vector<std::string>& vars) {
  if (!v.is_object()) fail(pointer, "expected an object");
  const json& kind = require_key(v, pointer, "kind");
  const int n = static_cast<int>(coords.size());
  if (kind == "christoffel") {
    allow_keys(v, pointer, {"kind", "gamma"});
    ConnectionSpec spec = ConnectionSpec::christoffel(n);
    const std::string gp = at(pointer, "gamma");
    const json& gamma = require_key(v, pointer, "gamma");
    if (!gamma.is_array()) fail(gp, "expected an array");
    std::set<std::tuple<int, int, int>> seen;
    for (std::size_t e = 0; e < gamma.size(); ++e) {
      const std::string ep = at(gp, e);
      allow_keys(gamma[e], ep, {"upper", "lower", "expr"});
      const int k = coord_index(coords, require_key(gamma[e], ep, "upper"), at(ep, "upper"));
      const json& lower = require_key(gamma[e], ep, "lower");
      if (!lower.is_array() || lower.size() != 2) fail(at(ep, "lower"), "expected two coordinate names");
      const int i = coord_index(coords, lower[0], at(at(ep, "lower"), 0));
      const int j = coord_index(coords, lower[1], at(at(ep, "lower"), 1));
      if (!seen.emplace(k, i, j).second) fail(ep, "duplicate Christoffel symbol");
      spec.gamma(k, i, j) = reader.expression(require_key(gamma[e], ep, "expr"), at(ep, "expr"), vars);
    }
    return spec;
  }
  if (kind == "matrix") {
    allow_keys(v, pointer, {"kind", "rank", "forms"});
    const int rank = reader.positive_int(require_key(v, pointer, "rank"), at(pointer, "rank"));
    ConnectionSpec spec = ConnectionSpec::matrix(n, rank);
    const std::string fp = at(pointer, "forms");
    const json& forms = require_key(v, pointer, "forms");
    if (!forms.is_array()) fail(fp, "expected an array");
    std::set<std::tuple<int, int, int>> seen;
    for (std::size_t e = 0; e < forms.size(); ++e) {
      const std::string ep = at(fp, e);
      allow_keys(forms[e], ep, {"coord", "row", "col", "expr"});
      const int k = coord_index(coords, require_key(forms[e], ep, "coord"), at(ep, "coord"));
      const json& row = require_key(forms[e], ep, "row");
      const json& col = require_key(forms[e], ep, "col");
      if (!row.is_number_integer() || row.get<int>() < 0 || row.get<int>() >= rank) {
        fail(at(ep, "row"), "row out of range");
      }
      if (!col.is_number_integer() || col.get<int>() < 0 || col.get<int>() >= rank) {
        fail(at(ep, "col"), "col out of range");
      }
      if (!seen.emplace(k, row.get<int>(), col.get<int>()).second) fail(ep, "duplicate entry");
      spec.form(k, row.get<int>(), col.get<int>()) =
          reader.expression(require_key(forms[e], ep, "expr"), at(ep, "expr"), vars);
    }
    return spec;
  }
  fail(at(pointer, "kind"), "expected \"christoffel\" or \"matrix\"");
}

Point read_point(const json& v, const std::string& pointer, std::size_t n, const Reader& reader) {
  if (!v.is_array() || v.size() != n) {
    fail(pointer, "expected " + std::to_string(n) + " coordinates");
  }
  Point p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = reader.real(v[i], at(pointer, i));
  return p;
}

Grid read_grid(const json& v, const std::string& pointer, std::size_t n, const Reader& reader) {
  allow_keys(v, pointer, {"axes", "points"});
  if (v.contains("axes") == v.contains("points")) fail(pointer, "give exactly one of axes, points");
  if (auto it = v.find("points"); it != v.end()) {
    const std::string pp = at(pointer, "points");
    if (!it->is_array() || it->empty()) fail(pp, "expected a non-empty array of points");
    std::vector<Point> points;
    for (std::size_t i = 0; i < it->size(); ++i) points.push_back(read_point((*it)[i], at(pp, i), n, reader));
    return Grid::sequence(std::move(points));
  }
  const std::string ap = at(pointer, "axes");
  const json& axes = v["axes"];
  if (!axes.is_array() || axes.size() != n) fail(ap, "expected one axis per coordinate");
  std::vector<std::vector<double>> values(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::string kp = at(ap, k);
    allow_keys(axes[k], kp, {"values", "linspace"});
    if (axes[k].contains("values") == axes[k].contains("linspace")) {
      fail(kp, "give exactly one of values, linspace");
    }
    if (auto it = axes[k].find("values"); it != axes[k].end()) {
      if (!it->is_array() || it->empty()) fail(at(kp, "values"), "expected a non-empty array");
      for (std::size_t i = 0; i < it->size(); ++i) values[k].push_back(reader.real((*it)[i], at(at(kp, "values"), i)));
    } else {
      const json& ls = axes[k]["linspace"];
      const std::string lp = at(kp, "linspace");
      if (!ls.is_array() || ls.size() != 3) fail(lp, "expected [from, to, count]");
      const double a = reader.real(ls[0], at(lp, 0));
      const double b = reader.real(ls[1], at(lp, 1));
      const int count = reader.positive_int(ls[2], at(lp, 2));
      for (int i = 0; i < count; ++i) {
        values[k].push_back(count == 1 ? a : a + (b - a) * i / (count - 1));
      }
    }
  }
  return Grid::product(values);
}

}  // namespace

Manifest parse_manifest(const json& doc) {
  allow_keys(doc, "", {"id", "description", "coords", "params", "connection", "excluded",
                       "exclusion_radius", "loops", "grid", "base_point", "tolerances", "steps",
                       "seed", "pd_restarts", "holonomy_basis"});
  Manifest m;
  m.document = doc;

  if (auto it = doc.find("id"); it != doc.end()) {
    if (!it->is_string()) fail("/id", "expected a string");
    m.id = it->get<std::string>();
  }
  if (auto it = doc.find("description"); it != doc.end()) {
    if (!it->is_string()) fail("/description", "expected a string");
    m.description = it->get<std::string>();
  }

  if (auto it = doc.find("params"); it != doc.end()) {
    if (!it->is_object()) fail("/params", "expected an object");
    for (const auto& [name, value] : it->items()) {
      if (!valid_identifier(name) || name == "pi") fail(at("/params", name), "invalid parameter name");
      if (!value.is_number()) fail(at("/params", name), "expected a number");
      m.params.emplace(name, value.get<double>());
    }
  }
  const Reader reader(m.params);

  const json& coords = require_key(doc, "", "coords");
  if (!coords.is_array() || coords.empty()) fail("/coords", "expected a non-empty array");
  std::vector<std::string> coord_names;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    m.coords.push_back(read_coordinate(coords[i], at("/coords", i), reader));
    const auto& name = m.coords.back().name;
    if (name == "pi" || m.params.count(name) > 0 ||
        std::find(coord_names.begin(), coord_names.end(), name) != coord_names.end()) {
      fail(at(at("/coords", i), "name"), "name '" + name + "' is already in use");
    }
    coord_names.push_back(name);
  }
  const std::size_t n = m.coords.size();

  m.connection = read_connection(require_key(doc, "", "connection"), "/connection", m.coords, reader,
                                 coord_names);

  if (auto it = doc.find("excluded"); it != doc.end()) {
    if (!it->is_array()) fail("/excluded", "expected an array of expressions");
    for (std::size_t i = 0; i < it->size(); ++i) {
      m.excluded.push_back(reader.expression((*it)[i], at("/excluded", i), coord_names));
    }
  }
  if (auto it = doc.find("exclusion_radius"); it != doc.end()) {
    m.exclusion_radius = reader.real(*it, "/exclusion_radius");
    if (!(m.exclusion_radius > 0.0)) fail("/exclusion_radius", "must be positive");
  }

  if (auto it = doc.find("tolerances"); it != doc.end()) {
    allow_keys(*it, "/tolerances", {"rank_tol", "stencil_h", "holonomy_tol", "period_tol", "pd_tol"});
    auto read = [&](const char* key, double& out) {
      if (auto jt = it->find(key); jt != it->end()) {
        out = reader.real(*jt, at("/tolerances", key));
        if (!(out > 0.0)) fail(at("/tolerances", key), "must be positive");
      }
    };
    read("rank_tol", m.tolerances.rank_tol);
    read("stencil_h", m.tolerances.stencil_h);
    read("holonomy_tol", m.tolerances.holonomy_tol);
    read("period_tol", m.tolerances.period_tol);
    read("pd_tol", m.tolerances.pd_tol);
  }
  if (auto it = doc.find("steps"); it != doc.end()) {
    allow_keys(*it, "/steps", {"rk4", "quadrature"});
    if (auto jt = it->find("rk4"); jt != it->end()) {
      m.rk4_steps = reader.positive_int(*jt, "/steps/rk4");
      if (m.rk4_steps < 16) fail("/steps/rk4", "at least 16 steps are required");
    }
    if (auto jt = it->find("quadrature"); jt != it->end()) {
      m.quadrature_steps = reader.positive_int(*jt, "/steps/quadrature");
    }
  }
  if (auto it = doc.find("seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0)) {
      fail("/seed", "expected a non-negative integer");
    }
    m.seed = it->get<std::uint64_t>();
  }
  if (auto it = doc.find("pd_restarts"); it != doc.end()) {
    m.pd_restarts = reader.positive_int(*it, "/pd_restarts");
  }

  const Domain domain = m.domain();
  m.base_point = read_point(require_key(doc, "", "base_point"), "/base_point", n, reader);
  if (!domain.contains(m.base_point)) fail("/base_point", "base point is outside the domain");

  if (auto it = doc.find("grid"); it != doc.end()) {
    m.grid = read_grid(*it, "/grid", n, reader);
    for (std::size_t i = 0; i < m.grid.points.size(); ++i) {
      if (!domain.contains(m.grid.points[i])) {
        fail("/grid", "grid point " + std::to_string(i) + " is outside the domain");
      }
    }
  } else {
    m.grid = Grid::sequence({m.base_point});
  }

  if (auto it = doc.find("loops"); it != doc.end()) {
    if (!it->is_array()) fail("/loops", "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string lp = at("/loops", i);
      const json& l = (*it)[i];
      allow_keys(l, lp, {"name", "param", "t_range", "coords"});
      LoopSpec spec;
      const json& name = require_key(l, lp, "name");
      if (!name.is_string() || name.get<std::string>().empty()) fail(at(lp, "name"), "expected a name");
      spec.name = name.get<std::string>();
      if (!names.insert(spec.name).second) fail(at(lp, "name"), "duplicate loop name");
      if (auto jt = l.find("param"); jt != l.end()) {
        if (!jt->is_string() || !valid_identifier(jt->get<std::string>()) ||
            m.params.count(jt->get<std::string>()) > 0) {
          fail(at(lp, "param"), "expected an unused identifier");
        }
        spec.param = jt->get<std::string>();
      }
      const json& range = require_key(l, lp, "t_range");
      if (!range.is_array() || range.size() != 2) fail(at(lp, "t_range"), "expected [t0, t1]");
      spec.t0 = reader.real(range[0], at(at(lp, "t_range"), 0));
      spec.t1 = reader.real(range[1], at(at(lp, "t_range"), 1));
      if (!(spec.t0 < spec.t1)) fail(at(lp, "t_range"), "t0 must be below t1");
      const json& lc = require_key(l, lp, "coords");
      if (!lc.is_array() || lc.size() != n) fail(at(lp, "coords"), "expected one expression per coordinate");
      for (std::size_t k = 0; k < n; ++k) {
        spec.coords.push_back(reader.expression(lc[k], at(at(lp, "coords"), k), {spec.param}));
      }
      m.loops.push_back(std::move(spec));
    }
  }

  if (auto it = doc.find("holonomy_basis"); it != doc.end()) {
    const int big_n = m.connection.fiber_rank();
    if (!it->is_array() || it->empty() || static_cast<int>(it->size()) > big_n) {
      fail("/holonomy_basis", "expected between 1 and " + std::to_string(big_n) + " vectors");
    }
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string vp = at("/holonomy_basis", i);
      const json& vec = (*it)[i];
      if (!vec.is_array() || static_cast<int>(vec.size()) != big_n) {
        fail(vp, "expected " + std::to_string(big_n) + " fiber components");
      }
      std::vector<expr::Expr> comps;
      for (std::size_t a = 0; a < vec.size(); ++a) comps.push_back(reader.expression(vec[a], at(vp, a), coord_names));
      m.holonomy_basis.push_back(std::move(comps));
    }
    try {
      const Mat ref = m.reference_basis(domain, m.base_point);
      Eigen::JacobiSVD<Mat> svd(ref);
      const auto& s = svd.singularValues();
      if (!(s(s.size() - 1) > 1e-10 * s(0))) fail("/holonomy_basis", "vectors are dependent at the base point");
    } catch (const AnalysisError& err) {
      if (err.code() == ErrorCode::ManifestInvalid) throw;
      fail("/holonomy_basis", err.what());
    }
  }
  return m;
}

Manifest parse_manifest_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw AnalysisError(ErrorCode::ManifestInvalid, std::string("/: not valid JSON: ") + err.what());
  }
  return parse_manifest(doc);
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AnalysisError(ErrorCode::InvalidArgument, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest_text(buf.str());
}

Domain Manifest::domain() const {
  return Domain(coords, excluded, exclusion_radius, params);
}

Connection Manifest::build_connection() const {
  return Connection(domain(), connection);
}

std::vector<Curve> Manifest::build_loops(const Domain& dom) const {
  std::vector<Curve> out;
  for (const auto& l : loops) out.push_back(Curve::from_exprs(l.name, dom, l.coords, l.param, l.t0, l.t1));
  return out;
}

GlobalOptions Manifest::global_options(Exec exec) const {
  GlobalOptions o;
  o.flag.rank_tol = tolerances.rank_tol;
  o.flag.stencil_h = tolerances.stencil_h;
  o.pd.tol = tolerances.pd_tol;
  o.pd.restarts = pd_restarts;
  o.pd.seed = seed;
  o.pd.exec = exec;
  o.rk4_steps = rk4_steps;
  o.quadrature_steps = quadrature_steps;
  o.holonomy_tol = tolerances.holonomy_tol;
  o.period_tol = tolerances.period_tol;
  o.exec = exec;
  return o;
}

Mat Manifest::reference_basis(const Domain& dom, std::span<const double> q) const {
  if (holonomy_basis.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(holonomy_basis.front().size());
  Mat out(rows, static_cast<Eigen::Index>(holonomy_basis.size()));
  std::vector<double> slots;
  dom.fill_slots(q, slots);
  for (std::size_t c = 0; c < holonomy_basis.size(); ++c) {
    for (std::size_t a = 0; a < holonomy_basis[c].size(); ++a) {
      try {
        const auto prog = expr::Program::compile(holonomy_basis[c][a], dom.slot_names());
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) = prog.run(slots);
      } catch (const expr::EvalError& err) {
        throw AnalysisError(ErrorCode::ExpressionFailure, err.what());
      }
    }
  }
  return out;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::string Manifest::digest() const { return fnv1a_hex(document.dump()); }

}  // namespace paracon
