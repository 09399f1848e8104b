#include <doctest.h>

#include <cmath>

#include "paracon/expr.hpp"
#include "properties.hpp"

using namespace paracon;
using namespace paracon::expr;

namespace {

double at(const Expr& e, double x, double y = 0.0) {
  EvalContext ctx;
  ctx.variables = {{"x", x}, {"y", y}};
  ctx.parameters = {{"k", 0.3}};
  return eval(e, ctx);
}

}  // namespace

TEST_CASE("parse and evaluate") {
  CHECK(at(parse("1 + 2*3"), 0) == doctest::Approx(7));
  CHECK(at(parse("-x^2"), 3) == doctest::Approx(-9));
  CHECK(at(parse("2^3^2"), 0) == doctest::Approx(512));
  CHECK(at(parse("pi"), 0) == doctest::Approx(M_PI));
  CHECK(at(parse("sin(x)^2 + cos(x)^2"), 0.7) == doctest::Approx(1.0));
  CHECK(at(parse("-k^2*x"), 2.0) == doctest::Approx(-0.18));
  CHECK(at(parse("pow(x, 3)"), 2.0) == doctest::Approx(8));
  CHECK(at(parse("if(x < 0, -1, 1)"), -0.5) == doctest::Approx(-1));
  CHECK(at(parse("if(x >= 0, -1, 1)"), 0.0) == doctest::Approx(-1));
  CHECK(at(parse("x − 1"), 3.0) == doctest::Approx(2));
  CHECK(at(parse("if(x ≤ 1, 5, 6)"), 1.0) == doctest::Approx(5));
}

TEST_CASE("parse errors carry offsets") {
  CHECK_THROWS_AS(parse("1 +"), ParseError);
  CHECK_THROWS_AS(parse("sin(x"), ParseError);
  CHECK_THROWS_AS(parse("foo(x)"), ParseError);
  try {
    parse("x + * 2");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("evaluation errors") {
  CHECK_THROWS_AS(at(parse("zz"), 1.0), EvalError);
  CHECK_THROWS_AS(at(parse("log(x)"), -1.0), EvalError);
  CHECK_THROWS_AS(at(parse("sqrt(x)"), -1.0), EvalError);
  CHECK_THROWS_AS(at(parse("1/x"), 0.0), EvalError);
}

TEST_CASE("print round-trips") {
  for (const char* text : {"-k^2*x", "sin(2*k*x)/k - x*y", "if(x < 0, exp(-1/x^2), 0)", "(-3)*x", "-(x+y)^2"}) {
    const Expr e = parse(text);
    CHECK(structurally_equal(parse(print(e)), e));
  }
}

TEST_CASE("symbolic derivatives") {
  const Expr e = parse("x^3*sin(y) + exp(2*x)");
  CHECK(at(diff(e, "x"), 0.5, 0.2) == doctest::Approx(3 * 0.25 * std::sin(0.2) + 2 * std::exp(1.0)));
  CHECK(at(diff(e, "y"), 0.5, 0.2) == doctest::Approx(0.125 * std::cos(0.2)));
  CHECK(at(diff(parse("abs(x)"), "x"), -2.0) == doctest::Approx(-1));
  CHECK(at(diff(parse("if(x < 0, x^2, 3*x)"), "x"), 1.0) == doctest::Approx(3));
  CHECK(at(diff(parse("x^y"), "y"), 2.0, 3.0) == doctest::Approx(8 * std::log(2.0)));
  CHECK(depends_on(e, "y"));
  CHECK_FALSE(depends_on(diff(parse("k*x + y"), "x"), "y"));
}

TEST_CASE("compiled programs match the tree evaluator") {
  const Expr e = parse("if(x < y, sin(x)*k, sqrt(1 + y^2)/(2 + cos(x)))");
  const std::vector<std::string> slots{"x", "y", "k"};
  const Program prog = Program::compile(e, slots);
  for (double x : {-1.0, 0.0, 0.4, 2.0}) {
    const double vals[] = {x, 0.3, 0.3};
    CHECK(prog.run(vals) == at(e, x, 0.3));
  }
  CHECK(Program::compile(parse("0*x"), slots).run(std::vector<double>{1, 2, 3}) == 0.0);
  CHECK_THROWS_AS(Program::compile(parse("q"), slots), EvalError);
}

TEST_CASE("property: exact derivatives agree with finite differences") {
  const auto r = props::ad_vs_fd(200, 11);
  INFO(r.first_failure);
  CHECK(r.cases >= 100);
  CHECK(r.failures == 0);
}
