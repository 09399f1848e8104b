#include <doctest.h>

#include <cmath>
#include <omp.h>
#include <random>

#include "paracon/corpus.hpp"
#include "paracon/errors.hpp"
#include "paracon/global.hpp"
#include "properties.hpp"

using namespace paracon;

namespace {

const std::vector<CorpusEntry>& corpus() {
  static const auto c = load_corpus();
  return c;
}

Mat rotation_block(double a) {
  Mat m = Mat::Identity(3, 3);
  m(1, 1) = std::cos(a);
  m(1, 2) = -std::sin(a);
  m(2, 1) = std::sin(a);
  m(2, 2) = std::cos(a);
  return m;
}

GlobalVerdict verdict_for(const Manifest& m) {
  const Connection conn = m.build_connection();
  const auto loops = m.build_loops(conn.domain());
  return global_metricity(conn, m.base_point, loops, m.grid, m.global_options());
}

}  // namespace

TEST_CASE("invariant inner product") {
  const Mat i2 = Mat::Identity(2, 2);
  CHECK(invariant_inner_product(i2, i2, i2) == doctest::Approx(2.0));
  Mat s = Mat::Zero(2, 2);
  s(0, 0) = 1.0;
  s(1, 1) = 0.09;
  CHECK(invariant_inner_product(s, s, s) == doctest::Approx(2.0));
  CHECK_THROWS_AS(invariant_inner_product(Mat::Zero(2, 2), i2, i2), AnalysisError);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Mat a(2, 2), b(2, 2), c(2, 2);
    a << u(rng), u(rng), 0, u(rng);
    b << u(rng), u(rng), 0, u(rng);
    c << u(rng), u(rng), 0, u(rng);
    a(1, 0) = a(0, 1);
    b(1, 0) = b(0, 1);
    c(1, 0) = c(0, 1);
    const double x = u(rng), y = u(rng);
    CHECK(invariant_inner_product(s, x * a + y * b, c) ==
          doctest::Approx(x * invariant_inner_product(s, a, c) + y * invariant_inner_product(s, b, c)));
  }
}

TEST_CASE("fixed subspace basics") {
  CHECK(fixed_subspace({}, 3).dim() == 3);
  HolonomyResult h;
  h.matrix = Mat::Constant(1, 1, std::exp(-2 * M_PI));
  CHECK(fixed_subspace(std::vector{h}, 1).dim() == 0);
  h.matrix = rotation_block(4 * 0.3 * M_PI);
  const Subspace f = fixed_subspace(std::vector{h}, 3);
  REQUIRE(f.dim() == 1);
  CHECK(std::abs(f.basis(0, 0)) == doctest::Approx(1.0));
  h.matrix = rotation_block(2 * M_PI);
  CHECK(fixed_subspace(std::vector{h}, 3).dim() == 3);
}

TEST_CASE("fixed subspace is functorial under a change of basis") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Mat q(4, 4);
    for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = u(rng);
    q += 2.0 * Mat::Identity(4, 4);
    const int fixed = 1 + trial % 3;
    Mat core = Mat::Identity(4, 4);
    for (int i = fixed; i < 4; ++i) core(i, i) = 0.3 + 0.1 * i;
    HolonomyResult h;
    h.matrix = q * core * q.inverse();
    Mat p(4, 4);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    p += 2.0 * Mat::Identity(4, 4);
    HolonomyResult hp;
    hp.matrix = p.inverse() * h.matrix * p;
    const Subspace a = fixed_subspace(std::vector{h}, 4);
    const Subspace b = fixed_subspace(std::vector{hp}, 4);
    REQUIRE(a.dim() == fixed);
    REQUIRE(b.dim() == fixed);
    const Mat mapped = Subspace::span_of(p.inverse() * a.basis).basis;
    for (double angle : principal_angles(mapped, b.basis)) CHECK(angle < 1e-6);
  }
}

TEST_CASE("punctured plane verdict, negative control and holonomy invariance") {
  const Manifest& m = find_entry(corpus(), "punctured-plane").manifest;
  const GlobalVerdict v = verdict_for(m);
  REQUIRE(v.status == GlobalStatus::metric);
  CHECK(v.rank_wm == 1);
  REQUIRE(v.rank_tau_reported);
  CHECK(*v.rank_tau_reported == 1);
  CHECK(v.tau_least_level == 2);
  const Connection conn = m.build_connection();
  const Mat ref = m.reference_basis(conn.domain(), m.base_point);
  CHECK(principal_angles(ref.col(0), v.fixed_ambient)[0] < 1e-5);

  // The holonomy preserves the inner product induced by the parallel metric h1.
  const SymIndex& sym = conn.sym();
  const Mat s = sym.to_matrix(ref.col(0));
  const Mat& b = v.base_trace->terminal.basis;
  Mat g(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) g(i, j) = invariant_inner_product(s, sym.to_matrix(b.col(i)), sym.to_matrix(b.col(j)));
  }
  const Mat& h = v.holonomies[0].matrix;
  CHECK((h.transpose() * g * h - g).norm() < 1e-5);
  // Fixed vectors come back after every loop.
  CHECK((h * v.fixed.basis - v.fixed.basis).norm() < 1e-5);

  Manifest half = m;
  half.params["k"] = 0.5;
  const GlobalVerdict vh = verdict_for(half);
  CHECK(vh.fixed.dim() == 3);
  CHECK(vh.status == GlobalStatus::metric);
  CHECK(vh.rank_wm == 3);
}

TEST_CASE("line bundle and pathology verdicts") {
  const GlobalVerdict line = verdict_for(find_entry(corpus(), "s1-line-bundle").manifest);
  CHECK(line.status == GlobalStatus::not_metric);
  CHECK(line.fixed.dim() == 0);
  CHECK_FALSE(line.rank_tau_reported);
  const GlobalVerdict path = verdict_for(find_entry(corpus(), "smooth-pathology").manifest);
  CHECK(path.status == GlobalStatus::not_regular);
  CHECK(path.holonomies.empty());
}

TEST_CASE("sphere: no loops still gives a metric verdict on the chart") {
  Manifest m = find_entry(corpus(), "sphere").manifest;
  m.loops.clear();
  const GlobalVerdict v = verdict_for(m);
  CHECK(v.status == GlobalStatus::metric);
  CHECK(v.rank_wm == 1);
  CHECK(v.caveats.size() == 2);
}

TEST_CASE("Phi on the sphere") {
  const Manifest& m = find_entry(corpus(), "sphere").manifest;
  const Connection conn = m.build_connection();
  const FlagTrace t = derived_flag(conn, m.base_point);
  // sqrt(1 + sin^4) undoes the unit-norm normalization, giving the section
  // dtheta^2 + sin^2 dphi^2 itself, for which Phi vanishes.
  const PhiSampler exact = phi_form(conn, m.base_point, t.terminal, {}, expr::parse("sqrt(1 + sin(theta)^4)"));
  const PhiSampler plain = phi_form(conn, m.base_point, t.terminal);
  const PhiSampler shifted = phi_form(conn, m.base_point, t.terminal, {}, expr::parse("sqrt(1 + sin(theta)^4)*exp(theta)"));
  for (double th : {0.4, 1.0, 1.7, 2.6}) {
    const std::vector<double> q{th, 0.9};
    const Vec phi = exact(q);
    CHECK(phi.cwiseAbs().maxCoeff() < 1e-6);
    const Vec d = shifted(q) - phi;
    CHECK(std::abs(d(0) - 1.0) < 1e-6);
    CHECK(std::abs(d(1)) < 1e-6);
    // The normalized tracker differs by d log of the norm.
    const double s = std::sin(th), c = std::cos(th);
    CHECK(std::abs(plain(q)(0) + 2 * s * s * s * c / (1 + s * s * s * s)) < 1e-6);
  }
  const auto loops = m.build_loops(conn.domain());
  for (const auto& lp : phi_periods(plain, loops).loops) CHECK(std::abs(lp.period) < 1e-6);
}

TEST_CASE("Phi preconditions") {
  const Manifest& flat = find_entry(corpus(), "flat-trivial").manifest;
  const Connection fc = flat.build_connection();
  const FlagTrace ft = derived_flag(fc, flat.base_point);
  try {
    phi_form(fc, flat.base_point, ft.terminal);
    FAIL("expected RankNotOne");
  } catch (const AnalysisError& e) {
    CHECK(e.code() == ErrorCode::RankNotOne);
  }
  // Lorentzian metric dx^2 - e^{2x} dy^2: rank one, indefinite generator.
  ConnectionSpec spec = ConnectionSpec::christoffel(2);
  spec.gamma(0, 1, 1) = expr::parse("exp(2*x)");
  spec.gamma(1, 0, 1) = expr::parse("1");
  spec.gamma(1, 1, 0) = expr::parse("1");
  const Connection lc(Domain({{"x"}, {"y"}}, {}, 1e-6, {}), spec);
  const std::vector<double> p{0.1, 0.2};
  const FlagTrace lt = derived_flag(lc, p);
  REQUIRE(lt.terminal.dim() == 1);
  try {
    phi_form(lc, p, lt.terminal);
    FAIL("expected GeneratorNotPD");
  } catch (const AnalysisError& e) {
    CHECK(e.code() == ErrorCode::GeneratorNotPD);
  }
}

TEST_CASE("dtheta obstruction: period 2 pi and agreement of the two tests") {
  const GlobalVerdict v = verdict_for(find_entry(corpus(), "dtheta-obstruction").manifest);
  CHECK(v.status == GlobalStatus::not_metric);
  REQUIRE(v.periods);
  CHECK(std::abs(v.periods->loops[0].period - 2 * M_PI) < 1e-4);
  REQUIRE(v.criteria_agree);
  CHECK(*v.criteria_agree);
}

TEST_CASE("criteria agree on every rank-one corpus entry") {
  for (const auto& e : corpus()) {
    const GlobalVerdict v = verdict_for(e.manifest);
    if (v.wtilde_rank != 1 || !v.periods) continue;
    INFO(e.id);
    REQUIRE(v.periods_vanish);
    CHECK(*v.periods_vanish == (v.status == GlobalStatus::metric));
  }
}

TEST_CASE("serial and parallel verdicts are bit-identical") {
  omp_set_num_threads(4);
  for (const char* id : {"sphere", "punctured-plane", "dtheta-obstruction"}) {
    Manifest m = find_entry(corpus(), id).manifest;
    m.quadrature_steps = 256;
    const Connection conn = m.build_connection();
    const auto loops = m.build_loops(conn.domain());
    const GlobalVerdict a = global_metricity(conn, m.base_point, loops, m.grid, m.global_options(Exec::parallel));
    const GlobalVerdict b = global_metricity(conn, m.base_point, loops, m.grid, m.global_options(Exec::serial));
    CHECK(a.status == b.status);
    REQUIRE(a.holonomies.size() == b.holonomies.size());
    for (std::size_t i = 0; i < a.holonomies.size(); ++i) CHECK(a.holonomies[i].matrix == b.holonomies[i].matrix);
    CHECK(a.fixed_ambient == b.fixed_ambient);
    if (a.periods) {
      for (std::size_t i = 0; i < a.periods->loops.size(); ++i) {
        CHECK(a.periods->loops[i].period == b.periods->loops[i].period);
      }
    }
  }
}

TEST_CASE("property: Phi periods are gauge invariant") {
  const auto r = props::phi_gauge_invariance(100, 61);
  INFO(r.first_failure);
  CHECK(r.cases >= 100);
  CHECK(r.failures == 0);
}
