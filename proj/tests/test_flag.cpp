#include <doctest.h>

#include <omp.h>

#include "paracon/corpus.hpp"
#include "paracon/errors.hpp"
#include "paracon/flag.hpp"
#include "properties.hpp"

using namespace paracon;

namespace {

const std::vector<CorpusEntry>& corpus() {
  static const auto c = load_corpus();
  return c;
}

}  // namespace

TEST_CASE("sphere flag stabilizes at the round metric") {
  const Connection conn = find_entry(corpus(), "sphere").manifest.build_connection();
  const std::vector<double> p{1.1, 0.3};
  const FlagTrace t = derived_flag(conn, p);
  CHECK(t.dims() == std::vector<int>{1, 1});
  CHECK(t.stabilization_level == 0);
  Vec g(3);
  g << 1.0, std::sin(1.1) * std::sin(1.1), 0.0;
  CHECK(containment_angle(g.normalized(), t.terminal.basis) < 1e-7);
  const LocalMetricity lm = local_metricity(conn, t);
  CHECK(lm.locally_metric);
}

TEST_CASE("flat connections keep the whole fiber") {
  const Connection conn = find_entry(corpus(), "flat-trivial").manifest.build_connection();
  const FlagTrace t = derived_flag(conn, std::vector<double>{0.2, -0.4});
  CHECK(t.dims() == std::vector<int>{3});
  CHECK(t.stabilization_level == 0);
}

TEST_CASE("pathology: dimension jumps at both breakpoints") {
  const Manifest& m = find_entry(corpus(), "smooth-pathology").manifest;
  const Connection conn = m.build_connection();
  const RegularityReport rep = regularity_scan(conn, m.grid);
  std::vector<int> dims;
  for (const auto& d : rep.terminal_dims) dims.push_back(d.value_or(-1));
  CHECK(dims == std::vector<int>{1, 1, 3, 3, 3, 1, 1});
  CHECK_FALSE(rep.regular_on_grid);
  using J = std::pair<std::size_t, std::size_t>;
  CHECK(rep.jumps == std::vector<J>{{1, 2}, {4, 5}});
}

TEST_CASE("a stencil straddling a rank change is reported, not guessed") {
  // Curved (dx^2 + e^{2x} dy^2) for x >= 0 and flat for x < 0.
  ConnectionSpec spec = ConnectionSpec::christoffel(2);
  spec.gamma(0, 1, 1) = expr::parse("if(x < 0, 0, -exp(2*x))");
  spec.gamma(1, 0, 1) = expr::parse("if(x < 0, 0, 1)");
  spec.gamma(1, 1, 0) = expr::parse("if(x < 0, 0, 1)");
  const Connection conn(Domain({{"x"}, {"y"}}, {}, 1e-6, {}), spec);
  CHECK(derived_flag(conn, std::vector<double>{0.5, 0.0}).dims() == std::vector<int>{1, 1});
  CHECK(derived_flag(conn, std::vector<double>{-0.5, 0.0}).dims() == std::vector<int>{3});
  int level = -2;
  try {
    derived_flag(conn, std::vector<double>{5e-5, 0.0});
  } catch (const AnalysisError& e) {
    if (e.code() == ErrorCode::IrregularPoint) level = e.level();
  }
  CHECK(level == 1);
}

TEST_CASE("grids: product order and neighbours") {
  const Grid g = Grid::product({{0.0, 1.0}, {5.0, 6.0, 7.0}});
  REQUIRE(g.points.size() == 6);
  CHECK(g.points[1] == std::vector<double>{0.0, 6.0});
  CHECK(g.neighbours.size() == 7);
  CHECK_THROWS_AS(regularity_scan(find_entry(corpus(), "sphere").manifest.build_connection(), Grid{}),
                  AnalysisError);
}

TEST_CASE("serial and parallel scans are bit-identical") {
  omp_set_num_threads(4);
  for (const auto& e : corpus()) {
    const Connection conn = e.manifest.build_connection();
    const RegularityReport a = regularity_scan(conn, e.manifest.grid, {}, Exec::parallel);
    const RegularityReport b = regularity_scan_serial(conn, e.manifest.grid);
    CHECK(a.terminal_dims == b.terminal_dims);
    CHECK(a.failures == b.failures);
    CHECK(a.jumps == b.jumps);
  }
}

TEST_CASE("local metricity needs the symmetric square") {
  const Connection conn = find_entry(corpus(), "s1-line-bundle").manifest.build_connection();
  const FlagTrace t = derived_flag(conn, std::vector<double>{0.5});
  CHECK_THROWS_AS(local_metricity(conn, t), AnalysisError);
}

TEST_CASE("property: flag monotonicity and metric containment") {
  const auto r = props::flag_monotonicity(120, 21);
  INFO(r.first_failure);
  CHECK(r.cases >= 100);
  CHECK(r.failures == 0);
}
