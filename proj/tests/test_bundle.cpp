#include <doctest.h>

#include <cmath>
#include <random>

#include "paracon/corpus.hpp"
#include "paracon/errors.hpp"

using namespace paracon;

TEST_CASE("SymIndex layout") {
  const SymIndex s(3);
  CHECK(s.size() == 6);
  CHECK(s.pair(0) == std::pair{0, 0});
  CHECK(s.pair(2) == std::pair{2, 2});
  CHECK(s.index(1, 0) == s.index(0, 1));
  CHECK(s.weight(0) == 1.0);
  CHECK(s.weight(3) == 2.0);
  Mat m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  CHECK((s.to_matrix(s.from_matrix(m)) - m).norm() == 0.0);
  const Vec v = s.from_matrix(m);
  CHECK(s.frobenius(v, v) == doctest::Approx((m.array() * m.array()).sum()));
}

TEST_CASE("domain membership, periods and exclusions") {
  const auto corpus = load_corpus();
  const Domain d = find_entry(corpus, "punctured-plane").manifest.domain();
  CHECK(d.contains(std::vector<double>{1.0, 10.0}));
  CHECK_FALSE(d.contains(std::vector<double>{-1.0, 0.0}));
  CHECK_THROWS_AS(d.require(std::vector<double>{0.0, 0.0}), AnalysisError);
  const Domain s = find_entry(corpus, "sphere").manifest.domain();
  CHECK_FALSE(s.contains(std::vector<double>{M_PI, 0.0}));
  CHECK(s.contains(std::vector<double>{1.0, -20.0}));
}

TEST_CASE("sphere curvature on the symmetric square matches the closed form") {
  const auto corpus = load_corpus();
  const Connection conn = find_entry(corpus, "sphere").manifest.build_connection();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, M_PI - 0.2);
  for (int trial = 0; trial < 12; ++trial) {
    const double th = u(rng);
    const auto r = conn.curvature_operators(std::vector<double>{th, 0.7});
    REQUIRE(r.size() == 1);
    const double s2 = std::sin(th) * std::sin(th);
    Mat expected = Mat::Zero(3, 3);
    expected(2, 0) = -s2;                    // R(X1) = -sin^2 X3
    expected(2, 1) = 1.0;                    // R(X2) = X3
    expected(0, 2) = 2.0;                    // R(X3) = 2 X1 - 2 sin^2 X2
    expected(1, 2) = -2.0 * s2;
    CHECK((r[0] - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("connection matrices follow the sign convention") {
  // Gamma^x_{xx} = 1 on the line: nabla_x dx = -dx, so on dx (x) dx the
  // matrix is -2.
  ConnectionSpec spec = ConnectionSpec::christoffel(1);
  spec.gamma(0, 0, 0) = expr::parse("1");
  const Connection conn(Domain({{"x"}}, {}, 1e-6, {}), spec);
  const auto om = conn.connection_matrices(std::vector<double>{0.0});
  CHECK(om[0](0, 0) == doctest::Approx(-2.0));
  CHECK(conn.curvature_operators(std::vector<double>{0.0}).empty());
}

TEST_CASE("breakpoints are nudged off") {
  const auto corpus = load_corpus();
  const Connection conn = find_entry(corpus, "smooth-pathology").manifest.build_connection();
  std::vector<double> p{0.0, 0.0};
  CHECK(conn.nudge_off_breakpoints(p));
  CHECK(p[0] != 0.0);
  std::vector<double> q{0.5, 0.0};
  CHECK_FALSE(conn.nudge_off_breakpoints(q));
}
