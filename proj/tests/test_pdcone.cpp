#include <doctest.h>

#include <omp.h>

#include "paracon/errors.hpp"
#include "paracon/pdcone.hpp"
#include "properties.hpp"

using namespace paracon;

namespace {

Mat diag(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_CASE("span containing the identity is feasible with a Cholesky certificate") {
  const PdResult r = pd_feasible(SymSpan::of({diag(1, 1)}));
  REQUIRE(r.status == PdStatus::feasible);
  Mat l;
  CHECK(is_positive_definite(r.combination, &l));
  CHECK((r.cholesky * r.cholesky.transpose() - r.combination).norm() < 1e-12);
}

TEST_CASE("indefinite span is certified infeasible") {
  Mat off = Mat::Zero(2, 2);
  off(0, 1) = off(1, 0) = 1;
  const PdResult r = pd_feasible(SymSpan::of({diag(1, -1), off}));
  REQUIRE(r.status == PdStatus::infeasible_certified);
  CHECK(min_eigenvalue(r.witness) > -1e-12);
  CHECK(r.witness.trace() == doctest::Approx(1.0));
  CHECK(std::abs((r.witness * diag(1, -1)).trace()) < 1e-8);
  CHECK(std::abs((r.witness * off).trace()) < 1e-8);
}

TEST_CASE("a PSD-only span is not feasible") {
  const PdResult r = pd_feasible(SymSpan::of({diag(1, 0)}));
  CHECK(r.status != PdStatus::feasible);
}

TEST_CASE("PD basis of span{I, diag(1,-1)}") {
  const PdBasis b = pd_basis(SymSpan::of({diag(1, 1), diag(1, -1)}), 0);
  CHECK(b.first_passing_epsilon == doctest::Approx(0.5));
  CHECK(b.epsilon == doctest::Approx(0.25));
  REQUIRE(b.forms.size() == 2);
  for (const auto& f : b.forms) CHECK(is_positive_definite(f));
  CHECK_THROWS_AS(pd_basis(SymSpan::of({diag(1, -1)}), 0), AnalysisError);
}

TEST_CASE("restarts are deterministic across thread counts") {
  Mat off = Mat::Zero(2, 2);
  off(0, 1) = off(1, 0) = 1;
  const SymSpan span = SymSpan::of({diag(0.3, -1), off, diag(-0.2, 0.1)});
  PdOptions serial;
  serial.exec = Exec::serial;
  serial.seed = 9;
  PdOptions par = serial;
  par.exec = Exec::parallel;
  omp_set_num_threads(4);
  const PdResult a = pd_feasible(span, serial);
  const PdResult b = pd_feasible(span, par);
  CHECK(a.status == b.status);
  CHECK(a.coefficients == b.coefficients);
  CHECK(a.lambda_min == b.lambda_min);
}

TEST_CASE("property: agreement with a dense circle scan") {
  const auto r = props::pd_vs_circle_grid(300, 51);
  INFO(r.first_failure);
  CHECK(r.cases >= 100);
  CHECK(r.failures == 0);
}
