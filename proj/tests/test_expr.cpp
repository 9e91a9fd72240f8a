#include <cmath>
#include <random>

#include "doctest.h"
#include "envcert/expr.hpp"

using namespace envcert;

namespace {

const std::vector<std::string> kT{"t"};
const std::vector<std::string> kTY{"t", "y"};

// Random trees over {t, y}. `smooth` restricts to differentiable nodes and
// keeps bases of fractional powers and logs positive on t, y > 0.
NodePtr random_tree(std::mt19937_64& rng, int depth, bool smooth) {
  std::uniform_int_distribution<int> pick(0, smooth ? 7 : 11);
  std::uniform_real_distribution<double> coef(0.25, 3.0);
  auto leaf = [&]() -> NodePtr {
    switch (rng() % 3) {
      case 0: return node::constant(coef(rng));
      case 1: return node::variable(0);
      default: return node::variable(1);
    }
  };
  if (depth == 0) return leaf();
  auto sub = [&] { return random_tree(rng, depth - 1, smooth); };
  // 1 + x^2 is positive for any x; used as a safe base.
  auto positive = [&] { return node::add(node::constant(1.0), node::pow(sub(), 2.0)); };
  switch (pick(rng)) {
    case 0: return node::add(sub(), sub());
    case 1: return node::sub(sub(), sub());
    case 2: return node::mul(sub(), sub());
    case 3: return node::div(sub(), positive());
    case 4: return node::pow(positive(), std::uniform_real_distribution<double>(-2.0, 2.5)(rng));
    case 5: return node::neg(sub());
    case 6: return node::exp(node::div(sub(), positive()));
    case 7: return node::ln(positive());
    case 8: return node::abs(sub());
    case 9: return node::min(sub(), sub());
    case 10: return node::max(sub(), sub());
    default: return node::pow(sub(), 3.0);
  }
}

// Independent extended-precision evaluator used as the finite-difference
// oracle; follows the node semantics but not the library's code path.
long double eval_ld(const Node& n, long double t, long double y) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return n.var == 0 ? t : y;
    case Op::Add: return eval_ld(*n.lhs, t, y) + eval_ld(*n.rhs, t, y);
    case Op::Sub: return eval_ld(*n.lhs, t, y) - eval_ld(*n.rhs, t, y);
    case Op::Mul: return eval_ld(*n.lhs, t, y) * eval_ld(*n.rhs, t, y);
    case Op::Div: return eval_ld(*n.lhs, t, y) / eval_ld(*n.rhs, t, y);
    case Op::Pow: return std::pow(eval_ld(*n.lhs, t, y), static_cast<long double>(n.value));
    case Op::Neg: return -eval_ld(*n.lhs, t, y);
    case Op::Exp: return std::exp(eval_ld(*n.lhs, t, y));
    case Op::Ln: return std::log(eval_ld(*n.lhs, t, y));
    case Op::Abs: return std::fabs(eval_ld(*n.lhs, t, y));
    case Op::Min: return std::fmin(eval_ld(*n.lhs, t, y), eval_ld(*n.rhs, t, y));
    case Op::Max: return std::fmax(eval_ld(*n.lhs, t, y), eval_ld(*n.rhs, t, y));
  }
  return 0;
}

}  // namespace

TEST_CASE("parse_expr builds the expected trees") {
  SUBCASE("quotient by a unit power") {
    Expression e = parse_expr("4/(1+t)^1", kT);
    REQUIRE(e.root()->op == Op::Div);
    CHECK(e.root()->lhs->op == Op::Const);
    CHECK(e.root()->lhs->value == 4.0);
    // ^1 folds away, leaving the sum 1+t.
    CHECK(e.root()->rhs->op == Op::Add);
    CHECK(e(0.0) == 4.0);
  }
  SUBCASE("two-term nonlinearity") {
    Expression e = parse_expr("2*(1+t)^(-1)*y^2 + 2*(1+t)^(-1.5)*y^0.5", kTY);
    REQUIRE(e.root()->op == Op::Add);
    CHECK(e.root()->lhs->op == Op::Mul);
    CHECK(e.root()->rhs->op == Op::Mul);
    CHECK(e(0.0, 1.0) == doctest::Approx(4.0));
    CHECK(e(3.0, 4.0) == doctest::Approx(2.0 / 4 * 16 + 2.0 / 8 * 2));
  }
  SUBCASE("precedence and associativity") {
    CHECK(parse_expr("2+3*4", kT)(0.0) == 14.0);
    CHECK(parse_expr("8-3-2", kT)(0.0) == 3.0);
    CHECK(parse_expr("16/4/2", kT)(0.0) == 2.0);
    CHECK(parse_expr("2^3^2", kT)(0.0) == 512.0);
    CHECK(parse_expr("-t^2", kT)(3.0) == -9.0);
    CHECK(parse_expr("t^-1", kT)(4.0) == 0.25);
    CHECK(parse_expr("min(t, 2) + max(t, 2)", kT)(5.0) == 7.0);
    CHECK(parse_expr("abs(-t)", kT)(2.5) == 2.5);
    CHECK(parse_expr("exp(ln(t))", kT)(2.0) == doctest::Approx(2.0));
    CHECK(parse_expr("1.5e-1*t", kT)(2.0) == doctest::Approx(0.3));
  }
  SUBCASE("named constants") {
    Expression e = parse_expr("lambda*(1+t)^nu", kT, {{"lambda", 4.0}, {"nu", 1.0}});
    CHECK(e(3.0) == 16.0);
  }
}

TEST_CASE("parse_expr errors") {
  SUBCASE("doubled caret reports the second caret") {
    try {
      parse_expr("y^^2", {"y"});
      FAIL("expected a syntax error");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 2);
    }
  }
  SUBCASE("unknown variable is named") {
    try {
      parse_expr("t + z", kT);
      FAIL("expected an unknown-variable error");
    } catch (const UnknownVariableError& e) {
      CHECK(e.name() == "z");
      CHECK(e.offset() == 4);
    }
  }
  CHECK_THROWS_AS(parse_expr("", kT), ParseError);
  CHECK_THROWS_AS(parse_expr("   ", kT), ParseError);
  CHECK_THROWS_AS(parse_expr("(1+t", kT), ParseError);
  CHECK_THROWS_AS(parse_expr("1+", kT), ParseError);
  CHECK_THROWS_AS(parse_expr("t^t", kT), ParseError);
  CHECK_THROWS_AS(parse_expr("sin(t)", kT), ParseError);
  CHECK_THROWS_AS(parse_expr("min(t)", kT), ParseError);
  CHECK_THROWS_AS(parse_expr("t", {}), std::invalid_argument);
}

TEST_CASE("eval_expr values and domain errors") {
  CHECK(eval_expr(parse_expr("4/(1+t)", kT), {{"t", 0.0}}) == 4.0);
  CHECK(eval_expr(parse_expr("lambda*(1+t)^nu", kT, {{"lambda", 4}, {"nu", 1}}), {{"t", 3.0}}) ==
        16.0);

  auto kind_of = [](const char* text, double t) {
    try {
      parse_expr(text, kT)(t);
    } catch (const DomainError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  CHECK(kind_of("1/t", 0.0) == static_cast<int>(DomainErrorKind::DivisionByZero));
  CHECK(kind_of("ln(t)", 0.0) == static_cast<int>(DomainErrorKind::LogOfNonpositive));
  CHECK(kind_of("ln(t)", -1.0) == static_cast<int>(DomainErrorKind::LogOfNonpositive));
  CHECK(kind_of("t^(-2)", 0.0) == static_cast<int>(DomainErrorKind::ZeroToNegativePower));
  CHECK(kind_of("t^0.5", -4.0) == static_cast<int>(DomainErrorKind::NegativeBaseFractionalPower));
  CHECK(kind_of("exp(t)", 1000.0) == static_cast<int>(DomainErrorKind::NonFinite));
  CHECK(kind_of("t^3", -2.0) == -1);  // integer power of a negative base is fine
  CHECK(parse_expr("t^3", kT)(-2.0) == -8.0);

  CHECK_THROWS_AS(eval_expr(parse_expr("t+y", kTY), {{"t", 1.0}}), std::invalid_argument);
  // Unused variables need no binding.
  CHECK(eval_expr(parse_expr("2*t", kTY), {{"t", 1.0}}) == 2.0);
  // A constant subexpression that is undefined is not folded away.
  CHECK_THROWS_AS(parse_expr("1/0 + t", kT)(1.0), DomainError);
}

TEST_CASE("diff_expr examples") {
  const std::map<std::string, double> k{{"lambda", 4.0}, {"nu", 1.0}, {"c", 1.0}, {"b", 1.0}};
  SUBCASE("power rule") {
    Expression d = diff_expr(parse_expr("lambda*(1+t)^nu", kT, {{"lambda", 3.0}, {"nu", 2.5}}), "t");
    for (double t : {0.0, 0.5, 7.0}) CHECK(d(t) == doctest::Approx(3.0 * 2.5 * std::pow(1 + t, 1.5)));
  }
  SUBCASE("shifted envelope") {
    Expression d = diff_expr(parse_expr("c + lambda*(1+t)^(-b)", kT, {{"c", 2.0}, {"lambda", 3.0}, {"b", 0.5}}), "t");
    for (double t : {0.0, 1.0, 10.0}) {
      CHECK(d(t) == doctest::Approx(-0.5 * 3.0 * std::pow(1 + t, -1.5)));
    }
  }
  SUBCASE("constant") {
    Expression d = diff_expr(parse_expr("7", kT), "t");
    CHECK(d.is_constant());
    CHECK(d.to_string() == "0");
  }
  SUBCASE("unit power law folds to a constant") {
    Expression d = diff_expr(parse_expr("lambda*(1+t)^nu", kT, k), "t");
    CHECK(d.is_constant());
    CHECK(d(123.0) == 4.0);
  }
  SUBCASE("non-differentiable nodes") {
    CHECK_THROWS_AS(diff_expr(parse_expr("abs(t)", kT), "t"), NotDifferentiableError);
    CHECK_THROWS_AS(diff_expr(parse_expr("min(t, 1)", kT), "t"), NotDifferentiableError);
    CHECK_THROWS_AS(diff_expr(parse_expr("max(t, 1)", kT), "t"), NotDifferentiableError);
    // abs of a t-free subtree is a constant in t.
    CHECK(diff_expr(parse_expr("t*abs(y)", kTY), "t")(0.0, -3.0) == 3.0);
  }
  CHECK_THROWS_AS(diff_expr(parse_expr("t", kT), "y"), std::invalid_argument);
}

TEST_CASE("printing round-trips on random trees") {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> point(-3.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Expression e(random_tree(rng, 4, false), kTY);
    Expression back = parse_expr(e.to_string(), kTY);
    CHECK(back.to_string() == e.to_string());
    for (int k = 0; k < 100; ++k) {
      const double t = point(rng);
      const double y = point(rng);
      bool threw_a = false;
      bool threw_b = false;
      double a = 0.0;
      double b = 0.0;
      try {
        a = e(t, y);
      } catch (const DomainError&) {
        threw_a = true;
      }
      try {
        b = back(t, y);
      } catch (const DomainError&) {
        threw_b = true;
      }
      REQUIRE(threw_a == threw_b);
      if (!threw_a) REQUIRE(a == b);
    }
  }
}

TEST_CASE("symbolic derivative matches central differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> point(0.1, 2.0);
  constexpr double h = 1e-6;
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Expression e(random_tree(rng, 3, true), kTY);
    Expression d = diff_expr(e, "t");
    for (int k = 0; k < 20; ++k) {
      const double t = point(rng);
      const double y = point(rng);
      double exact = 0.0;
      try {
        exact = d(t, y);
        e(t + h, y);
        e(t - h, y);
      } catch (const DomainError&) {
        continue;
      }
      if (std::fabs(exact) < 1e-8) continue;
      const long double fd =
          (eval_ld(*e.root(), t + h, y) - eval_ld(*e.root(), t - h, y)) / (2 * h);
      ++compared;
      CHECK(std::fabs(static_cast<double>(fd) - exact) <= 1e-6 * std::fabs(exact));
    }
  }
  CHECK(compared > 1000);
}

TEST_CASE("evaluation is deterministic and never returns non-finite values") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> point(-50.0, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    Expression e(random_tree(rng, 5, false), kTY);
    for (int k = 0; k < 50; ++k) {
      const double t = point(rng);
      const double y = point(rng);
      try {
        const double a = e(t, y);
        CHECK(std::isfinite(a));
        CHECK(e(t, y) == a);
      } catch (const DomainError&) {
      }
    }
  }
}
