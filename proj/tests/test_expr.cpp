#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "qgeom/expr.hpp"

using namespace qgeom;

namespace {
double eval(const std::string& src, const std::map<std::string, double>& at) {
  std::vector<std::string> vars;
  for (const auto& [k, v] : at) vars.push_back(k);
  return Expr::parse(src, vars).evaluate(at);
}
}  // namespace

TEST_CASE("grammar and evaluation examples") {
  const auto e = Expr::parse("sin(theta)*cos(phi)", {"theta", "phi"});
  CHECK(e.evaluate({{"theta", oracle::kPi / 2}, {"phi", 0.0}}) == doctest::Approx(1.0));
  CHECK(eval("2^3^2", {}) == 512.0);
  CHECK(eval("-2^2", {}) == -4.0);
  CHECK(eval("2^-1", {}) == 0.5);
  CHECK(eval("1 - 2 - 3", {}) == -4.0);
  CHECK(eval("8 / 4 / 2", {}) == 1.0);
  CHECK(eval("sin(theta)", {{"theta", oracle::kPi / 2}}) == 1.0);
  CHECK(eval("lambda1^2 + 1", {{"lambda1", 3.0}}) == 10.0);
  CHECK(eval("2*pi", {}) == doctest::Approx(2 * oracle::kPi));
  CHECK(eval("pi", {{"pi", 3.0}}) == 3.0);
  CHECK(eval("abs(-2.5e0) + sqrt(16) + exp(0) + log(1) + tan(0)", {}) == 7.5);
  CHECK(eval("  1.5e-1 *  2 ", {}) == doctest::Approx(0.3));
}

TEST_CASE("parse errors carry offsets") {
  try {
    Expr::parse("sin(thetta)", {"theta"});
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("thetta") != std::string::npos);
    CHECK(e.offset() == 4);
  }
  CHECK_THROWS_AS(Expr::parse("(1 + 2", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("1 + 2)", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("1 +", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("* 2", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("()", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("foo(1)", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("1 2", {}), ParseError);
  CHECK_THROWS_AS(Expr::parse("x", {}), InputError);
}

TEST_CASE("domain errors are evaluation errors") {
  CHECK_THROWS_AS(eval("1/lambda1", {{"lambda1", 0.0}}), EvaluationError);
  CHECK_THROWS_AS(eval("log(x)", {{"x", 0.0}}), EvaluationError);
  CHECK_THROWS_AS(eval("log(x)", {{"x", -1.0}}), EvaluationError);
  CHECK_THROWS_AS(eval("sqrt(x)", {{"x", -1.0}}), EvaluationError);
  CHECK_THROWS_AS(eval("x^0.5", {{"x", -1.0}}), EvaluationError);
  CHECK_THROWS_AS(eval("0^(-1)", {}), EvaluationError);
  CHECK_THROWS_AS(eval("exp(1000)", {}), EvaluationError);
  CHECK(eval("(-2)^3", {}) == -8.0);
}

TEST_CASE("exact derivatives") {
  const auto sq = Expr::parse("lambda1^2", {"lambda1"});
  const std::vector<double> three{3.0};
  const auto [v, d] = sq.evaluate_with_derivative(three, 0);
  CHECK(v == 9.0);
  CHECK(d == 6.0);
  const auto s = Expr::parse("sin(theta)", {"theta"});
  const auto [v0, d0] = s.evaluate_with_derivative(std::map<std::string, double>{{"theta", 0.0}}, "theta");
  CHECK(v0 == 0.0);
  CHECK(d0 == 1.0);
  // a constant-exponent power at a negative base stays differentiable
  const auto cube = Expr::parse("x^3", {"x"});
  CHECK(cube.evaluate_with_derivative(std::vector<double>{-2.0}, 0).second == doctest::Approx(12.0));
  CHECK(cube.depends_on(0));
  CHECK_FALSE(Expr::parse("2*y", {"x", "y"}).depends_on(0));
}

TEST_CASE("dual derivatives match central differences on random expressions") {
  oracle::Rng rng(2024);
  const std::vector<std::string> vars{"x", "y"};
  for (int trial = 0; trial < 500; ++trial) {
    const std::string src = oracle::random_expression(rng, vars, 3);
    const Expr e = Expr::parse(src, vars);
    std::vector<double> at{oracle::uniform(rng, -1.5, 1.5), oracle::uniform(rng, -1.5, 1.5)};
    const Index dir = trial % 2;
    const auto [value, deriv] = e.evaluate_with_derivative(at, dir);
    const double h = 1e-6;
    auto shifted = [&](double s) {
      auto p = at;
      p[static_cast<std::size_t>(dir)] += s;
      return e.evaluate(p);
    };
    const double fd = (shifted(h) - shifted(-h)) / (2 * h);
    INFO(src);
    REQUIRE(value == e.evaluate(at));
    REQUIRE(std::abs(deriv - fd) <= 1e-6 * std::max(1.0, std::abs(deriv)));
  }
}

TEST_CASE("printing round-trips") {
  oracle::Rng rng(77);
  const std::vector<std::string> vars{"x", "y"};
  for (int trial = 0; trial < 200; ++trial) {
    const Expr e = Expr::parse(oracle::random_expression(rng, vars, 3), vars);
    const Expr back = Expr::parse(e.to_string(), vars);
    CHECK(back.to_string() == e.to_string());
    std::vector<double> at{oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1)};
    CHECK(back.evaluate(at) == e.evaluate(at));
  }
  CHECK(Expr::parse("-3 - -x", {"x"}).evaluate(std::vector<double>{1.0}) == -2.0);
  const Expr neg = Expr::constant(-2.5, {"x"});
  CHECK(Expr::parse(neg.to_string() + "^2", {"x"}).evaluate(std::vector<double>{0.0}) == 6.25);
}
