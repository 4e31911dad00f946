#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "sprayoid/algebroid.hpp"
#include "sprayoid/errors.hpp"
#include "sprayoid/expr.hpp"

namespace sprayoid {
namespace {

double at(const Expression& e, std::vector<double> x) { return e.eval(std::span<const double>(x.data(), x.size())); }

DualScalar dual(const Expression& e, std::vector<double> x, std::vector<double> seed) {
  return e.eval_dual(std::span<const double>(x.data(), x.size()), std::span<const double>(seed.data(), seed.size()));
}

TEST(ExprParse, LiteralZero) {
  const Expression e = parse_expr("0", 0);
  EXPECT_TRUE(e.is_zero());
  EXPECT_EQ(at(e, {}), 0.0);
}

TEST(ExprParse, PolynomialWithSine) { EXPECT_DOUBLE_EQ(at(parse_expr("x1^2 + sin(x2)", 2), {2.0, 0.0}), 4.0); }

TEST(ExprParse, VariableOutOfRange) { EXPECT_THROW(parse_expr("x3", 2), UnknownIdentifier); }

TEST(ExprParse, UnknownFunction) { EXPECT_THROW(parse_expr("tan(x1)", 1), UnknownIdentifier); }

TEST(ExprParse, ArityMismatch) {
  EXPECT_THROW(parse_expr("sin(x1, x2)", 2), ArityError);
  EXPECT_THROW(parse_expr("cos()", 1), ArityError);
}

TEST(ExprParse, SyntaxErrorsCarryOffset) {
  try {
    parse_expr("x1 + * x2", 2);
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  EXPECT_THROW(parse_expr("", 1), SyntaxError);
  EXPECT_THROW(parse_expr("(x1", 1), SyntaxError);
  EXPECT_THROW(parse_expr("x1 x1", 1), SyntaxError);
}

TEST(ExprParse, OnlyIntegerExponents) {
  EXPECT_THROW(parse_expr("x1^0.5", 1), SyntaxError);
  EXPECT_THROW(parse_expr("x1^x1", 1), SyntaxError);
  EXPECT_THROW(parse_expr("x1^-2", 1), SyntaxError);
}

TEST(ExprParse, Precedence) {
  EXPECT_DOUBLE_EQ(at(parse_expr("-x1^2", 1), {3.0}), -9.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("2^3^2", 0), {}), 512.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("x1 - x2 - x3", 3), {10.0, 3.0, 2.0}), 5.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("x1 / x2 / x3", 3), {12.0, 3.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("1 + 2 * 3", 0), {}), 7.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("  ( 1+2 )*3 ", 0), {}), 9.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("--x1", 1), {4.0}), 4.0);
}

TEST(ExprEval, Examples) {
  EXPECT_DOUBLE_EQ(at(parse_expr("x1*x2", 2), {3.0, 4.0}), 12.0);
  EXPECT_DOUBLE_EQ(at(parse_expr("exp(0)", 0), {}), 1.0);
  EXPECT_NEAR(at(parse_expr("sin(x1)", 1), {std::numbers::pi / 2}), 1.0, 1e-15);
  EXPECT_NEAR(at(parse_expr("sqrt(x1) * log(x2)", 2), {4.0, std::exp(1.5)}), 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(at(parse_expr("1.5e2 + .5", 0), {}), 150.5);
}

TEST(ExprEval, DomainErrors) {
  EXPECT_THROW(at(parse_expr("log(x1)", 1), {-1.0}), DomainError);
  EXPECT_THROW(at(parse_expr("log(x1)", 1), {0.0}), DomainError);
  EXPECT_THROW(at(parse_expr("sqrt(x1)", 1), {-0.5}), DomainError);
  EXPECT_THROW(at(parse_expr("1 / x1", 1), {0.0}), DomainError);
  EXPECT_THROW(at(parse_expr("exp(x1)", 1), {1e4}), NonFinite);
}

TEST(ExprDual, Examples) {
  const DualScalar a = dual(parse_expr("x1^2", 1), {3.0}, {1.0});
  EXPECT_DOUBLE_EQ(a.value, 9.0);
  EXPECT_DOUBLE_EQ(a.deriv, 6.0);
  const DualScalar c = dual(parse_expr("2.5", 2), {1.0, 2.0}, {0.3, -0.7});
  EXPECT_DOUBLE_EQ(c.value, 2.5);
  EXPECT_DOUBLE_EQ(c.deriv, 0.0);
  const Expression e = parse_expr("sin(x1)*x2", 2);
  const DualScalar d = dual(e, {0.0, 5.0}, {1.0, 0.0});
  EXPECT_DOUBLE_EQ(d.value, 0.0);
  const double h = 1e-6;
  const double fd = (at(e, {h, 5.0}) - at(e, {-h, 5.0})) / (2 * h);
  EXPECT_NEAR(d.deriv, 5.0, 1e-12);
  EXPECT_NEAR(d.deriv, fd, 1e-8);
}

TEST(ExprDual, TranscendentalDerivatives) {
  const Expression e = parse_expr("exp(x1) * cos(x2) + log(x1 + 2) / sqrt(x2 + 3)", 2);
  const std::vector<double> x = {0.3, 0.7};
  const double h = 1e-6;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> seed(2, 0.0), xp = x, xm = x;
    seed[static_cast<std::size_t>(j)] = 1.0;
    xp[static_cast<std::size_t>(j)] += h;
    xm[static_cast<std::size_t>(j)] -= h;
    EXPECT_NEAR(dual(e, x, seed).deriv, (at(e, xp) - at(e, xm)) / (2 * h), 1e-8);
  }
}

TEST(ExprProperty, PolynomialDerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  constexpr double h = 1e-5;
  for (int s = 0; s < 1000; ++s) {
    const int n = 1 + s % 4;
    const Expression e = random_polynomial(n, 1 + s % 4, rng);
    std::vector<double> x(static_cast<std::size_t>(n)), seed(static_cast<std::size_t>(n));
    for (auto& v : x) v = u(rng);
    for (auto& v : seed) v = u(rng);
    std::vector<double> xp = x, xm = x;
    for (int i = 0; i < n; ++i) {
      xp[static_cast<std::size_t>(i)] += h * seed[static_cast<std::size_t>(i)];
      xm[static_cast<std::size_t>(i)] -= h * seed[static_cast<std::size_t>(i)];
    }
    const double fd = (at(e, xp) - at(e, xm)) / (2 * h);
    const double ad = dual(e, x, seed).deriv;
    EXPECT_LE(std::abs(ad - fd), 1e-6 * std::max(1.0, std::abs(fd))) << e.to_string();
  }
}

TEST(ExprProperty, DerivativeIsLinearInSeed) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::vector<Expression> exprs = {parse_expr("x1^3*x2 - sin(x1*x2) + exp(x2)/3", 2),
                                         parse_expr("sqrt(x1^2 + x2^2 + 1) * cos(x2)", 2)};
  for (const Expression& e : exprs)
    for (int s = 0; s < 100; ++s) {
      const std::vector<double> x = {u(rng), u(rng)}, s1 = {u(rng), u(rng)}, s2 = {u(rng), u(rng)};
      const double a = u(rng), b = u(rng);
      const std::vector<double> mix = {a * s1[0] + b * s2[0], a * s1[1] + b * s2[1]};
      const double lhs = dual(e, x, mix).deriv;
      const double rhs = a * dual(e, x, s1).deriv + b * dual(e, x, s2).deriv;
      EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST(ExprProperty, PrintParseRoundtrip) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.1, 1.2);
  std::vector<Expression> exprs = {parse_expr("-x1^2 + 3*x2 - x3/(x1 + 2)", 3),
                                   parse_expr("sin(x1)*cos(x2) - exp(-x3) + log(x1 + x2) + sqrt(x3)", 3),
                                   parse_expr("2^3^2 - (x1 - x2) - x3 * -x1", 3)};
  for (int s = 0; s < 20; ++s) exprs.push_back(random_polynomial(3, 3, rng));
  for (const Expression& e : exprs) {
    const Expression back = parse_expr(e.to_string(), 3);
    for (int p = 0; p < 100; ++p) {
      const std::vector<double> x = {u(rng), u(rng), u(rng)};
      EXPECT_LE(std::abs(at(e, x) - at(back, x)), 1e-15 * std::max(1.0, std::abs(at(e, x)))) << e.to_string();
    }
  }
}

TEST(ExprSymbolic, DerivativeAgreesWithDual) {
  const Expression e = parse_expr("x1^3*sin(x2) + exp(x1*x2)", 2);
  const std::vector<double> x = {0.4, -0.3};
  for (int j = 0; j < 2; ++j) {
    std::vector<double> seed(2, 0.0);
    seed[static_cast<std::size_t>(j)] = 1.0;
    EXPECT_NEAR(at(e.derivative(j), x), dual(e, x, seed).deriv, 1e-13);
  }
}

}  // namespace
}  // namespace sprayoid
