#pragma once

// Closed-form scalar coefficient functions of the base coordinates x1..xn.
//
// Grammar (whitespace insignificant):
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' exponent)?
//   exponent:= UINT ('^' exponent)?          right-associative, integer-valued
//   primary := NUMBER | 'x'INDEX | FUNC '(' expr ')' | '(' expr ')'
//   FUNC    := sin | cos | exp | log | sqrt
//
// Expressions are immutable and cheap to copy (shared AST + compiled program).

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sprayoid {

/// Largest base dimension supported by gradient (jet) evaluation.
inline constexpr int kMaxJetDim = 8;

struct DualScalar {
  double value = 0.0;
  double deriv = 0.0;
};

class Expression;
Expression parse_expr(std::string_view text, int n);

namespace detail {
struct Node;
struct Program;
}  // namespace detail

class Expression {
 public:
  /// The constant 0 over zero variables.
  Expression();

  static Expression constant(double value, int n = 0);
  /// Coordinate function x_{index+1} (index is 0-based).
  static Expression variable(int index, int n);

  int dimension() const noexcept { return n_; }
  bool is_constant() const noexcept;
  /// Only meaningful when is_constant().
  double constant_value() const noexcept;
  bool is_zero() const noexcept { return is_constant() && constant_value() == 0.0; }

  double eval(std::span<const double> x) const;
  DualScalar eval_dual(std::span<const double> x,
                       std::span<const double> seed) const;
  /// Value and full gradient in one pass; `grad` must have dimension() entries
  /// and dimension() <= kMaxJetDim.
  double eval_grad(std::span<const double> x, std::span<double> grad) const;

  /// Fully parenthesised text that parses back to an equivalent expression.
  std::string to_string() const;

  /// Same expression re-declared over `n` variables (n must cover every
  /// variable referenced).
  Expression with_dimension(int n) const;

  /// Symbolic partial derivative with respect to x_{var+1}.
  Expression derivative(int var) const;

  friend Expression operator+(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a, const Expression& b);
  friend Expression operator*(const Expression& a, const Expression& b);
  friend Expression operator/(const Expression& a, const Expression& b);
  friend Expression operator-(const Expression& a);
  friend Expression operator*(double s, const Expression& a);

  /// Integer power (p >= 0).
  friend Expression pow(const Expression& a, int p);
  friend Expression parse_expr(std::string_view text, int n);

  const detail::Node& root() const noexcept { return *root_; }

 private:
  Expression(std::shared_ptr<const detail::Node> root, int n);
  int max_variable() const noexcept;

  std::shared_ptr<const detail::Node> root_;
  std::shared_ptr<const detail::Program> program_;
  // [c, g_1..g_n] when the expression is c + g.x, else null.
  std::shared_ptr<const std::vector<double>> affine_;
  int n_ = 0;
};

/// Parse `text` as an expression over variables x1..xn.
/// Throws SyntaxError (with byte offset), UnknownIdentifier or ArityError.
Expression parse_expr(std::string_view text, int n);

}  // namespace sprayoid
