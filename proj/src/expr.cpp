#include "sprayoid/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <vector>

#include "sprayoid/errors.hpp"

namespace sprayoid {
namespace detail {

enum class Op { kConst, kVar, kAdd, kSub, kMul, kDiv, kNeg, kPow, kSin, kCos, kExp, kLog, kSqrt };

struct Node {
  Op op = Op::kConst;
  double value = 0.0;  // kConst
  int index = 0;       // kVar: variable index, kPow: exponent
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

struct Instr {
  Op op;
  double value;
  int index;
};

struct Program {
  std::vector<Instr> code;
  int max_depth = 0;
};

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::kConst;
  n->value = v;
  return n;
}

NodePtr make_var(int i) {
  auto n = std::make_shared<Node>();
  n->op = Op::kVar;
  n->index = i;
  return n;
}

NodePtr make_unary(Op op, NodePtr a, int index = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->index = index;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_binary(Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

void emit(const Node& n, Program& p, int depth) {
  switch (n.op) {
    case Op::kConst:
    case Op::kVar:
      p.code.push_back({n.op, n.value, n.index});
      p.max_depth = std::max(p.max_depth, depth + 1);
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
      emit(*n.lhs, p, depth);
      emit(*n.rhs, p, depth + 1);
      p.code.push_back({n.op, 0.0, 0});
      return;
    default:
      emit(*n.lhs, p, depth);
      p.code.push_back({n.op, 0.0, n.index});
      return;
  }
}

std::shared_ptr<const Program> compile(const Node& root) {
  auto p = std::make_shared<Program>();
  emit(root, *p, 0);
  return p;
}

int max_var(const Node& n) {
  switch (n.op) {
    case Op::kConst:
      return -1;
    case Op::kVar:
      return n.index;
    default: {
      int m = max_var(*n.lhs);
      if (n.rhs) m = std::max(m, max_var(*n.rhs));
      return m;
    }
  }
}

// Coefficients [c, g_0..] of an affine AST, or false when not affine.
bool affine(const Node& n, int dim, std::vector<double>& out) {
  out.assign(dim + 1, 0.0);
  std::vector<double> a, b;
  switch (n.op) {
    case Op::kConst:
      out[0] = n.value;
      return true;
    case Op::kVar:
      if (n.index >= dim) return false;
      out[n.index + 1] = 1.0;
      return true;
    case Op::kAdd:
    case Op::kSub: {
      if (!affine(*n.lhs, dim, a) || !affine(*n.rhs, dim, b)) return false;
      const double sgn = n.op == Op::kAdd ? 1.0 : -1.0;
      for (int i = 0; i <= dim; ++i) out[i] = a[i] + sgn * b[i];
      return true;
    }
    case Op::kNeg:
      if (!affine(*n.lhs, dim, a)) return false;
      for (int i = 0; i <= dim; ++i) out[i] = -a[i];
      return true;
    case Op::kMul:
      if (n.lhs->op == Op::kConst && affine(*n.rhs, dim, b)) {
        for (int i = 0; i <= dim; ++i) out[i] = n.lhs->value * b[i];
        return true;
      }
      if (n.rhs->op == Op::kConst && affine(*n.lhs, dim, a)) {
        for (int i = 0; i <= dim; ++i) out[i] = a[i] * n.rhs->value;
        return true;
      }
      return false;
    default:
      return false;
  }
}

// --- scalar arithmetic for the three evaluation modes ----------------------

[[noreturn]] void domain(const char* what) { throw DomainError(what); }

struct Jet {
  double v = 0.0;
  std::array<double, kMaxJetDim> g{};
};

template <typename T>
struct Arith;

template <>
struct Arith<double> {
  int m = 0;
  double constant(double c) const { return c; }
  static double val(double a) { return a; }
  static double add(double a, double b) { return a + b; }
  static double sub(double a, double b) { return a - b; }
  static double mul(double a, double b) { return a * b; }
  static double div(double a, double b) {
    if (b == 0.0) domain("division by zero");
    return a / b;
  }
  static double neg(double a) { return -a; }
  static double powi(double a, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= a;
    return r;
  }
  static double sin(double a) { return std::sin(a); }
  static double cos(double a) { return std::cos(a); }
  static double exp(double a) { return std::exp(a); }
  static double log(double a) {
    if (!(a > 0.0)) domain("log of non-positive argument");
    return std::log(a);
  }
  static double sqrt(double a) {
    if (a < 0.0) domain("sqrt of negative argument");
    return std::sqrt(a);
  }
  static bool finite(double a) { return std::isfinite(a); }
};

template <>
struct Arith<DualScalar> {
  int m = 0;
  using D = DualScalar;
  D constant(double c) const { return {c, 0.0}; }
  static double val(const D& a) { return a.value; }
  static D add(const D& a, const D& b) { return {a.value + b.value, a.deriv + b.deriv}; }
  static D sub(const D& a, const D& b) { return {a.value - b.value, a.deriv - b.deriv}; }
  static D mul(const D& a, const D& b) {
    return {a.value * b.value, a.deriv * b.value + a.value * b.deriv};
  }
  static D div(const D& a, const D& b) {
    if (b.value == 0.0) domain("division by zero");
    const double q = a.value / b.value;
    return {q, (a.deriv - q * b.deriv) / b.value};
  }
  static D neg(const D& a) { return {-a.value, -a.deriv}; }
  static D powi(const D& a, int p) {
    if (p == 0) return {1.0, 0.0};
    const double lower = Arith<double>::powi(a.value, p - 1);
    return {lower * a.value, p * lower * a.deriv};
  }
  static D sin(const D& a) { return {std::sin(a.value), std::cos(a.value) * a.deriv}; }
  static D cos(const D& a) { return {std::cos(a.value), -std::sin(a.value) * a.deriv}; }
  static D exp(const D& a) {
    const double e = std::exp(a.value);
    return {e, e * a.deriv};
  }
  static D log(const D& a) {
    if (!(a.value > 0.0)) domain("log of non-positive argument");
    return {std::log(a.value), a.deriv / a.value};
  }
  static D sqrt(const D& a) {
    if (a.value < 0.0) domain("sqrt of negative argument");
    const double s = std::sqrt(a.value);
    return {s, a.deriv / (2.0 * s)};
  }
  static bool finite(const D& a) { return std::isfinite(a.value) && std::isfinite(a.deriv); }
};

template <>
struct Arith<Jet> {
  int m = 0;
  Jet constant(double c) const {
    Jet j;
    j.v = c;
    return j;
  }
  static double val(const Jet& a) { return a.v; }
  Jet add(const Jet& a, const Jet& b) const {
    Jet r;
    r.v = a.v + b.v;
    for (int i = 0; i < m; ++i) r.g[i] = a.g[i] + b.g[i];
    return r;
  }
  Jet sub(const Jet& a, const Jet& b) const {
    Jet r;
    r.v = a.v - b.v;
    for (int i = 0; i < m; ++i) r.g[i] = a.g[i] - b.g[i];
    return r;
  }
  Jet mul(const Jet& a, const Jet& b) const {
    Jet r;
    r.v = a.v * b.v;
    for (int i = 0; i < m; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    return r;
  }
  Jet div(const Jet& a, const Jet& b) const {
    if (b.v == 0.0) domain("division by zero");
    Jet r;
    r.v = a.v / b.v;
    for (int i = 0; i < m; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) / b.v;
    return r;
  }
  Jet neg(const Jet& a) const {
    Jet r;
    r.v = -a.v;
    for (int i = 0; i < m; ++i) r.g[i] = -a.g[i];
    return r;
  }
  Jet chain(const Jet& a, double value, double slope) const {
    Jet r;
    r.v = value;
    for (int i = 0; i < m; ++i) r.g[i] = slope * a.g[i];
    return r;
  }
  Jet powi(const Jet& a, int p) const {
    if (p == 0) return constant(1.0);
    const double lower = Arith<double>::powi(a.v, p - 1);
    return chain(a, lower * a.v, p * lower);
  }
  Jet sin(const Jet& a) const { return chain(a, std::sin(a.v), std::cos(a.v)); }
  Jet cos(const Jet& a) const { return chain(a, std::cos(a.v), -std::sin(a.v)); }
  Jet exp(const Jet& a) const {
    const double e = std::exp(a.v);
    return chain(a, e, e);
  }
  Jet log(const Jet& a) const {
    if (!(a.v > 0.0)) domain("log of non-positive argument");
    return chain(a, std::log(a.v), 1.0 / a.v);
  }
  Jet sqrt(const Jet& a) const {
    if (a.v < 0.0) domain("sqrt of negative argument");
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s);
  }
  bool finite(const Jet& a) const {
    if (!std::isfinite(a.v)) return false;
    for (int i = 0; i < m; ++i)
      if (!std::isfinite(a.g[i])) return false;
    return true;
  }
};

template <typename T, typename Load>
T run(const Program& prog, const Arith<T>& ar, Load&& load) {
  constexpr int kInline = 32;
  std::array<T, kInline> small;
  std::vector<T> big;
  T* stack = small.data();
  if (prog.max_depth > kInline) {
    big.resize(prog.max_depth);
    stack = big.data();
  }
  int top = 0;
  for (const Instr& ins : prog.code) {
    switch (ins.op) {
      case Op::kConst:
        stack[top++] = ar.constant(ins.value);
        break;
      case Op::kVar:
        stack[top++] = load(ins.index);
        break;
      case Op::kAdd:
        --top;
        stack[top - 1] = ar.add(stack[top - 1], stack[top]);
        break;
      case Op::kSub:
        --top;
        stack[top - 1] = ar.sub(stack[top - 1], stack[top]);
        break;
      case Op::kMul:
        --top;
        stack[top - 1] = ar.mul(stack[top - 1], stack[top]);
        break;
      case Op::kDiv:
        --top;
        stack[top - 1] = ar.div(stack[top - 1], stack[top]);
        break;
      case Op::kNeg:
        stack[top - 1] = ar.neg(stack[top - 1]);
        break;
      case Op::kPow:
        stack[top - 1] = ar.powi(stack[top - 1], ins.index);
        break;
      case Op::kSin:
        stack[top - 1] = ar.sin(stack[top - 1]);
        break;
      case Op::kCos:
        stack[top - 1] = ar.cos(stack[top - 1]);
        break;
      case Op::kExp:
        stack[top - 1] = ar.exp(stack[top - 1]);
        break;
      case Op::kLog:
        stack[top - 1] = ar.log(stack[top - 1]);
        break;
      case Op::kSqrt:
        stack[top - 1] = ar.sqrt(stack[top - 1]);
        break;
    }
  }
  if (!ar.finite(stack[0])) throw NonFinite("expression evaluated to a non-finite value");
  return stack[0];
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", std::fabs(v));
  std::string s(buf);
  return v < 0.0 ? "(-" + s + ")" : s;
}

void print(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::kConst:
      out += format_number(n.value);
      return;
    case Op::kVar:
      out += "x" + std::to_string(n.index + 1);
      return;
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv: {
      const char* sym = n.op == Op::kAdd ? " + " : n.op == Op::kSub ? " - " : n.op == Op::kMul ? " * " : " / ";
      out += '(';
      print(*n.lhs, out);
      out += sym;
      print(*n.rhs, out);
      out += ')';
      return;
    }
    case Op::kNeg:
      out += "(-";
      print(*n.lhs, out);
      out += ')';
      return;
    case Op::kPow:
      out += '(';
      print(*n.lhs, out);
      out += "^" + std::to_string(n.index) + ")";
      return;
    default: {
      const char* fn = n.op == Op::kSin   ? "sin"
                       : n.op == Op::kCos ? "cos"
                       : n.op == Op::kExp ? "exp"
                       : n.op == Op::kLog ? "log"
                                          : "sqrt";
      out += fn;
      out += '(';
      print(*n.lhs, out);
      out += ')';
      return;
    }
  }
}

// --- parser -----------------------------------------------------------------

class Parser {
 public:
  Parser(std::string_view text, int n) : s_(text), n_(n) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= s_.size()) throw SyntaxError(pos_, "empty expression");
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) throw SyntaxError(pos_, "unexpected character '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r'))
      ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = make_binary(Op::kAdd, lhs, term());
      else if (accept('-'))
        lhs = make_binary(Op::kSub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = make_binary(Op::kMul, lhs, unary());
      else if (accept('/'))
        lhs = make_binary(Op::kDiv, lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make_unary(Op::kNeg, unary());
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make_unary(Op::kPow, base, exponent());
    return base;
  }

  int exponent() {
    skip_ws();
    const std::size_t start = pos_;
    long long v = 0;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') {
      v = v * 10 + (s_[pos_] - '0');
      if (v > 1'000'000) throw SyntaxError(start, "exponent too large");
      ++pos_;
    }
    if (pos_ == start) throw SyntaxError(start, "exponent must be a nonnegative integer literal");
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
      throw SyntaxError(pos_, "exponent must be a nonnegative integer literal");
    if (accept('^')) {
      const int inner = exponent();
      long long r = 1;
      for (int i = 0; i < inner; ++i) {
        r *= v;
        if (r > 1'000'000) throw SyntaxError(start, "exponent too large");
      }
      return static_cast<int>(r);
    }
    return static_cast<int>(v);
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw SyntaxError(pos_, "unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
      return e;
    }
    if ((c >= '0' && c <= '9') || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw SyntaxError(pos_, "unexpected character '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && ((s_[pos_] >= '0' && s_[pos_] <= '9') || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && s_[p] >= '0' && s_[p] <= '9') {
        pos_ = p;
        while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + pos_)
      throw SyntaxError(start, "malformed number");
    return make_const(v);
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string name(s_.substr(start, pos_ - start));
    if (peek() == '(') {
      Op op;
      if (name == "sin")
        op = Op::kSin;
      else if (name == "cos")
        op = Op::kCos;
      else if (name == "exp")
        op = Op::kExp;
      else if (name == "log")
        op = Op::kLog;
      else if (name == "sqrt")
        op = Op::kSqrt;
      else
        throw UnknownIdentifier("unknown function '" + name + "' at byte " + std::to_string(start));
      accept('(');
      std::vector<NodePtr> args;
      if (!accept(')')) {
        args.push_back(expr());
        while (accept(',')) args.push_back(expr());
        if (!accept(')')) throw SyntaxError(pos_, "expected ')'");
      }
      if (args.size() != 1)
        throw ArityError("function '" + name + "' takes 1 argument, got " + std::to_string(args.size()));
      return make_unary(op, args[0]);
    }
    if (name.size() >= 2 && name[0] == 'x' && name[1] != '0' &&
        name.find_first_not_of("0123456789", 1) == std::string::npos) {
      const long idx = std::stol(name.substr(1));
      if (idx >= 1 && idx <= n_) return make_var(static_cast<int>(idx - 1));
    }
    if (name == "sin" || name == "cos" || name == "exp" || name == "log" || name == "sqrt")
      throw SyntaxError(pos_, "expected '(' after function '" + name + "'");
    throw UnknownIdentifier("unknown identifier '" + name + "' at byte " + std::to_string(start) +
                            " (variables are x1..x" + std::to_string(n_) + ")");
  }

  std::string_view s_;
  int n_;
  std::size_t pos_ = 0;
};

}  // namespace
}  // namespace detail

using detail::Node;
using detail::Op;

Expression::Expression() : Expression(detail::make_const(0.0), 0) {}

Expression::Expression(std::shared_ptr<const Node> root, int n)
    : root_(std::move(root)), program_(detail::compile(*root_)), n_(n) {
  std::vector<double> coeffs;
  if (root_->op != Op::kConst && detail::affine(*root_, n_, coeffs))
    affine_ = std::make_shared<const std::vector<double>>(std::move(coeffs));
}

Expression Expression::constant(double value, int n) { return Expression(detail::make_const(value), n); }

Expression Expression::variable(int index, int n) {
  if (index < 0 || index >= n) throw UnknownIdentifier("variable index out of range");
  return Expression(detail::make_var(index), n);
}

bool Expression::is_constant() const noexcept { return root_->op == Op::kConst; }
double Expression::constant_value() const noexcept { return root_->value; }
int Expression::max_variable() const noexcept { return detail::max_var(*root_); }

double Expression::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) < n_) throw InvalidParams("eval: point has too few coordinates");
  if (affine_) {
    const std::vector<double>& c = *affine_;
    double v = c[0];
    for (int i = 0; i < n_; ++i) v += c[i + 1] * x[i];
    return v;
  }
  detail::Arith<double> ar;
  return detail::run<double>(*program_, ar, [&](int i) { return x[i]; });
}

DualScalar Expression::eval_dual(std::span<const double> x, std::span<const double> seed) const {
  if (static_cast<int>(x.size()) < n_ || static_cast<int>(seed.size()) < n_)
    throw InvalidParams("eval_dual: point or seed has too few coordinates");
  detail::Arith<DualScalar> ar;
  return detail::run<DualScalar>(*program_, ar, [&](int i) { return DualScalar{x[i], seed[i]}; });
}

double Expression::eval_grad(std::span<const double> x, std::span<double> grad) const {
  if (n_ > kMaxJetDim) throw InvalidParams("eval_grad: dimension exceeds kMaxJetDim");
  if (static_cast<int>(x.size()) < n_ || static_cast<int>(grad.size()) < n_)
    throw InvalidParams("eval_grad: point or gradient buffer too small");
  if (affine_) {
    const std::vector<double>& c = *affine_;
    double v = c[0];
    for (int i = 0; i < n_; ++i) {
      v += c[i + 1] * x[i];
      grad[i] = c[i + 1];
    }
    return v;
  }
  detail::Arith<detail::Jet> ar;
  ar.m = n_;
  const detail::Jet j = detail::run<detail::Jet>(*program_, ar, [&](int i) {
    detail::Jet v;
    v.v = x[i];
    v.g[i] = 1.0;
    return v;
  });
  for (int i = 0; i < n_; ++i) grad[i] = j.g[i];
  return j.v;
}

std::string Expression::to_string() const {
  std::string out;
  detail::print(*root_, out);
  return out;
}

Expression Expression::with_dimension(int n) const {
  if (max_variable() >= n) throw UnknownIdentifier("expression references a variable beyond x" + std::to_string(n));
  return Expression(root_, n);
}

namespace {
int joint_dim(const Expression& a, const Expression& b) { return std::max(a.dimension(), b.dimension()); }
}  // namespace

Expression operator+(const Expression& a, const Expression& b) {
  const int n = joint_dim(a, b);
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() + b.constant_value(), n);
  if (a.is_zero()) return b.with_dimension(n);
  if (b.is_zero()) return a.with_dimension(n);
  return Expression(detail::make_binary(Op::kAdd, a.root_, b.root_), n);
}

Expression operator-(const Expression& a, const Expression& b) {
  const int n = joint_dim(a, b);
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() - b.constant_value(), n);
  if (b.is_zero()) return a.with_dimension(n);
  if (a.is_zero()) return -b.with_dimension(n);
  return Expression(detail::make_binary(Op::kSub, a.root_, b.root_), n);
}

Expression operator*(const Expression& a, const Expression& b) {
  const int n = joint_dim(a, b);
  if (a.is_constant() && b.is_constant()) return Expression::constant(a.constant_value() * b.constant_value(), n);
  if (a.is_zero() || b.is_zero()) return Expression::constant(0.0, n);
  if (a.is_constant() && a.constant_value() == 1.0) return b.with_dimension(n);
  if (b.is_constant() && b.constant_value() == 1.0) return a.with_dimension(n);
  return Expression(detail::make_binary(Op::kMul, a.root_, b.root_), n);
}

Expression operator/(const Expression& a, const Expression& b) {
  const int n = joint_dim(a, b);
  if (a.is_constant() && b.is_constant() && b.constant_value() != 0.0)
    return Expression::constant(a.constant_value() / b.constant_value(), n);
  return Expression(detail::make_binary(Op::kDiv, a.root_, b.root_), n);
}

Expression operator-(const Expression& a) {
  if (a.is_constant()) return Expression::constant(-a.constant_value(), a.dimension());
  return Expression(detail::make_unary(Op::kNeg, a.root_), a.dimension());
}

Expression operator*(double s, const Expression& a) { return Expression::constant(s, a.dimension()) * a; }

Expression pow(const Expression& a, int p) {
  if (p < 0) throw InvalidParams("pow: negative exponent");
  if (a.is_constant()) return Expression::constant(detail::Arith<double>::powi(a.constant_value(), p), a.dimension());
  return Expression(detail::make_unary(Op::kPow, a.root_, p), a.dimension());
}

Expression Expression::derivative(int var) const {
  if (var < 0 || var >= n_) throw InvalidParams("derivative: variable index out of range");
  const Node& r = *root_;
  const auto sub = [&](const std::shared_ptr<const Node>& p) { return Expression(p, n_); };
  switch (r.op) {
    case Op::kConst:
      return constant(0.0, n_);
    case Op::kVar:
      return constant(r.index == var ? 1.0 : 0.0, n_);
    case Op::kAdd:
      return sub(r.lhs).derivative(var) + sub(r.rhs).derivative(var);
    case Op::kSub:
      return sub(r.lhs).derivative(var) - sub(r.rhs).derivative(var);
    case Op::kMul: {
      const Expression a = sub(r.lhs), b = sub(r.rhs);
      return a.derivative(var) * b + a * b.derivative(var);
    }
    case Op::kDiv: {
      const Expression a = sub(r.lhs), b = sub(r.rhs);
      return (a.derivative(var) * b - a * b.derivative(var)) / pow(b, 2);
    }
    case Op::kNeg:
      return -sub(r.lhs).derivative(var);
    case Op::kPow: {
      const Expression a = sub(r.lhs);
      if (r.index == 0) return constant(0.0, n_);
      return static_cast<double>(r.index) * pow(a, r.index - 1) * a.derivative(var);
    }
    case Op::kSin: {
      const Expression a = sub(r.lhs);
      return Expression(detail::make_unary(Op::kCos, r.lhs), n_) * a.derivative(var);
    }
    case Op::kCos: {
      const Expression a = sub(r.lhs);
      return -(Expression(detail::make_unary(Op::kSin, r.lhs), n_) * a.derivative(var));
    }
    case Op::kExp:
      return *this * sub(r.lhs).derivative(var);
    case Op::kLog:
      return sub(r.lhs).derivative(var) / sub(r.lhs);
    case Op::kSqrt:
      return sub(r.lhs).derivative(var) / (constant(2.0, n_) * *this);
  }
  return constant(0.0, n_);
}

Expression parse_expr(std::string_view text, int n) {
  if (n < 0) throw InvalidParams("parse_expr: negative dimension");
  detail::Parser parser(text, n);
  return Expression(parser.parse(), n);
}

}  // namespace sprayoid
