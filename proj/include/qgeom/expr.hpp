#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qgeom/dual.hpp"
#include "qgeom/error.hpp"
#include "qgeom/numerics.hpp"

namespace qgeom {

/// Immutable expression tree over a fixed, ordered list of variable names.
///
/// Grammar (lowest to highest precedence):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('-' | '+') unary | power
///     power   := primary ('^' unary)?          right associative
///     primary := number | name | func '(' expr ')' | '(' expr ')'
///
/// `func` is one of sin cos tan exp log sqrt abs. The constant `pi` is
/// available unless a variable of the same name shadows it. Angles are in
/// radians.
class Expr {
 public:
  enum class Kind { constant, variable, negate, function, binary };
  enum class Function { sin, cos, tan, exp, log, sqrt, abs };
  enum class Op { add, sub, mul, div, pow };

  struct Node {
    Kind kind = Kind::constant;
    double constant = 0.0;
    Index slot = 0;
    Function fn = Function::sin;
    Op op = Op::add;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
  };

  /// Throws ParseError with the byte offset of the problem.
  static Expr parse(std::string_view source, std::vector<std::string> variables);
  static Expr constant(double value, std::vector<std::string> variables = {});

  const std::vector<std::string>& variables() const noexcept { return *variables_; }
  const Node& root() const noexcept { return *root_; }

  /// Evaluates with `values[i]` bound to variables()[i]. Domain errors
  /// throw EvaluationError instead of producing NaN or Inf.
  template <typename T>
  T evaluate(std::span<const T> values) const;

  double evaluate(std::span<const double> values) const { return evaluate<double>(values); }
  double evaluate(const std::map<std::string, double>& values) const;

  /// Value and exact partial derivative with respect to variables()[direction].
  std::pair<double, double> evaluate_with_derivative(std::span<const double> values,
                                                     Index direction) const;
  std::pair<double, double> evaluate_with_derivative(const std::map<std::string, double>& values,
                                                     const std::string& direction) const;

  bool depends_on(Index slot) const;

  /// Fully parenthesized form that parses back to an equivalent tree.
  std::string to_string() const;

 private:
  Expr(std::shared_ptr<const Node> root, std::shared_ptr<const std::vector<std::string>> vars)
      : root_(std::move(root)), variables_(std::move(vars)) {}

  std::vector<double> bind(const std::map<std::string, double>& values) const;

  std::shared_ptr<const Node> root_;
  std::shared_ptr<const std::vector<std::string>> variables_;
};

namespace detail {

[[noreturn]] void throw_domain(const char* what, double value);

template <typename T>
T checked(T v, const char* what) {
  if (!is_finite(v)) {
    throw EvaluationError(std::string("non-finite result in ") + what);
  }
  return v;
}

template <typename T>
T eval_node(const Expr::Node& n, std::span<const T> values) {
  using std::abs, std::cos, std::exp, std::log, std::pow, std::sin, std::sqrt, std::tan;
  switch (n.kind) {
    case Expr::Kind::constant:
      return T(n.constant);
    case Expr::Kind::variable:
      return values[static_cast<std::size_t>(n.slot)];
    case Expr::Kind::negate:
      return -eval_node(*n.lhs, values);
    case Expr::Kind::function: {
      const T a = eval_node(*n.lhs, values);
      const double x = value_of(a);
      switch (n.fn) {
        case Expr::Function::sin: return checked(sin(a), "sin");
        case Expr::Function::cos: return checked(cos(a), "cos");
        case Expr::Function::tan: return checked(tan(a), "tan");
        case Expr::Function::exp: return checked(exp(a), "exp");
        case Expr::Function::log:
          if (!(x > 0.0)) throw_domain("log of non-positive value", x);
          return checked(log(a), "log");
        case Expr::Function::sqrt:
          if (x < 0.0) throw_domain("sqrt of negative value", x);
          return checked(sqrt(a), "sqrt");
        case Expr::Function::abs: return abs(a);
      }
      break;
    }
    case Expr::Kind::binary: {
      const T a = eval_node(*n.lhs, values);
      const T b = eval_node(*n.rhs, values);
      switch (n.op) {
        case Expr::Op::add: return checked(a + b, "+");
        case Expr::Op::sub: return checked(a - b, "-");
        case Expr::Op::mul: return checked(a * b, "*");
        case Expr::Op::div:
          if (value_of(b) == 0.0) throw_domain("division by zero", value_of(a));
          return checked(a / b, "/");
        case Expr::Op::pow: {
          const double base = value_of(a);
          const double e = value_of(b);
          if (base == 0.0 && e < 0.0) throw_domain("division by zero in power", e);
          if (base < 0.0 && std::trunc(e) != e) throw_domain("non-integer power of negative base", base);
          return checked(pow(a, b), "^");
        }
      }
      break;
    }
  }
  throw EvaluationError("corrupt expression node");
}

}  // namespace detail

template <typename T>
T Expr::evaluate(std::span<const T> values) const {
  if (values.size() != variables_->size()) {
    throw InputError("expression expects " + std::to_string(variables_->size()) +
                     " variable values, got " + std::to_string(values.size()));
  }
  return detail::eval_node(*root_, values);
}

}  // namespace qgeom
