#include "qgeom/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <numbers>

namespace qgeom {

namespace detail {

void throw_domain(const char* what, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  throw EvaluationError(std::string(what) + " (operand " + buf + ")");
}

}  // namespace detail

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_constant(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::constant;
  n->constant = v;
  return n;
}

NodePtr make_variable(Index slot) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::variable;
  n->slot = slot;
  return n;
}

NodePtr make_negate(NodePtr a) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::negate;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_function(Expr::Function fn, NodePtr a) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::function;
  n->fn = fn;
  n->lhs = std::move(a);
  return n;
}

NodePtr make_binary(Expr::Op op, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Kind::binary;
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

struct FunctionName {
  std::string_view name;
  Expr::Function fn;
};

constexpr FunctionName kFunctions[] = {
    {"sin", Expr::Function::sin},   {"cos", Expr::Function::cos},
    {"tan", Expr::Function::tan},   {"exp", Expr::Function::exp},
    {"log", Expr::Function::log},   {"sqrt", Expr::Function::sqrt},
    {"abs", Expr::Function::abs},
};

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

  NodePtr parse() {
    skip_space();
    if (pos_ == src_.size()) {
      throw ParseError("empty expression", pos_);
    }
    NodePtr e = parse_expr();
    skip_space();
    if (pos_ != src_.size()) {
      if (src_[pos_] == ')') {
        throw ParseError("unbalanced ')'", pos_);
      }
      throw ParseError(std::string("unexpected '") + src_[pos_] + "'", pos_);
    }
    return e;
  }

 private:
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) {
        lhs = make_binary(Expr::Op::add, lhs, parse_term());
      } else if (accept('-')) {
        lhs = make_binary(Expr::Op::sub, lhs, parse_term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make_binary(Expr::Op::mul, lhs, parse_unary());
      } else if (accept('/')) {
        lhs = make_binary(Expr::Op::div, lhs, parse_unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      return make_negate(parse_unary());
    }
    if (accept('+')) {
      return parse_unary();
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) {
      return make_binary(Expr::Op::pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ == src_.size()) {
      throw ParseError("missing operand", pos_);
    }
    const char c = src_[pos_];
    if (c == '(') {
      const std::size_t open = pos_++;
      skip_space();
      if (pos_ < src_.size() && src_[pos_] == ')') {
        throw ParseError("empty parentheses", pos_);
      }
      NodePtr inner = parse_expr();
      if (!accept(')')) {
        throw ParseError("unbalanced '(' opened", open);
      }
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return parse_name();
    }
    throw ParseError(std::string("missing operand before '") + c + "'", pos_);
  }

  NodePtr parse_number() {
    const char* first = src_.data() + pos_;
    const char* last = src_.data() + src_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc()) {
      throw ParseError("malformed number", pos_);
    }
    pos_ += static_cast<std::size_t>(ptr - first);
    return make_constant(v);
  }

  NodePtr parse_name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view name = src_.substr(start, pos_ - start);

    skip_space();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      for (const auto& f : kFunctions) {
        if (f.name == name) {
          const std::size_t open = pos_++;
          skip_space();
          if (pos_ < src_.size() && src_[pos_] == ')') {
            throw ParseError("missing argument to '" + std::string(name) + "'", pos_);
          }
          NodePtr arg = parse_expr();
          if (!accept(')')) {
            throw ParseError("unbalanced '(' opened", open);
          }
          return make_function(f.fn, arg);
        }
      }
      throw ParseError("unknown function '" + std::string(name) + "'", start);
    }

    const auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it != vars_.end()) {
      return make_variable(static_cast<Index>(it - vars_.begin()));
    }
    if (name == "pi") {
      return make_constant(std::numbers::pi);
    }
    throw ParseError("unknown identifier '" + std::string(name) + "'", start);
  }

  std::string_view src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

bool node_depends_on(const Expr::Node& n, Index slot) {
  switch (n.kind) {
    case Expr::Kind::constant: return false;
    case Expr::Kind::variable: return n.slot == slot;
    case Expr::Kind::negate:
    case Expr::Kind::function: return node_depends_on(*n.lhs, slot);
    case Expr::Kind::binary:
      return node_depends_on(*n.lhs, slot) || node_depends_on(*n.rhs, slot);
  }
  return false;
}

std::string format_constant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  return v < 0.0 ? "(" + s + ")" : s;
}

void print_node(const Expr::Node& n, const std::vector<std::string>& vars, std::string& out) {
  switch (n.kind) {
    case Expr::Kind::constant:
      out += format_constant(n.constant);
      return;
    case Expr::Kind::variable:
      out += vars[static_cast<std::size_t>(n.slot)];
      return;
    case Expr::Kind::negate:
      out += "(-";
      print_node(*n.lhs, vars, out);
      out += ")";
      return;
    case Expr::Kind::function:
      for (const auto& f : kFunctions) {
        if (f.fn == n.fn) {
          out += f.name;
        }
      }
      out += "(";
      print_node(*n.lhs, vars, out);
      out += ")";
      return;
    case Expr::Kind::binary: {
      static constexpr char kOps[] = {'+', '-', '*', '/', '^'};
      out += "(";
      print_node(*n.lhs, vars, out);
      out += kOps[static_cast<int>(n.op)];
      print_node(*n.rhs, vars, out);
      out += ")";
      return;
    }
  }
}

}  // namespace

Expr Expr::parse(std::string_view source, std::vector<std::string> variables) {
  auto vars = std::make_shared<const std::vector<std::string>>(std::move(variables));
  NodePtr root = Parser(source, *vars).parse();
  return Expr(std::move(root), std::move(vars));
}

Expr Expr::constant(double value, std::vector<std::string> variables) {
  return Expr(make_constant(value),
              std::make_shared<const std::vector<std::string>>(std::move(variables)));
}

std::vector<double> Expr::bind(const std::map<std::string, double>& values) const {
  std::vector<double> bound;
  bound.reserve(variables_->size());
  for (const auto& name : *variables_) {
    const auto it = values.find(name);
    if (it == values.end()) {
      throw InputError("no value bound for '" + name + "'");
    }
    bound.push_back(it->second);
  }
  return bound;
}

double Expr::evaluate(const std::map<std::string, double>& values) const {
  const auto bound = bind(values);
  return evaluate<double>(std::span<const double>(bound));
}

std::pair<double, double> Expr::evaluate_with_derivative(std::span<const double> values,
                                                         Index direction) const {
  if (direction < 0 || static_cast<std::size_t>(direction) >= variables_->size()) {
    throw InputError("derivative direction out of range");
  }
  std::vector<Dual<double>> seeded(values.begin(), values.end());
  if (seeded.size() == variables_->size()) {
    seeded[static_cast<std::size_t>(direction)].deriv = 1.0;
  }
  const Dual<double> r = evaluate<Dual<double>>(std::span<const Dual<double>>(seeded));
  return {r.value, r.deriv};
}

std::pair<double, double> Expr::evaluate_with_derivative(
    const std::map<std::string, double>& values, const std::string& direction) const {
  const auto it = std::find(variables_->begin(), variables_->end(), direction);
  if (it == variables_->end()) {
    throw InputError("unknown derivative direction '" + direction + "'");
  }
  const auto bound = bind(values);
  return evaluate_with_derivative(std::span<const double>(bound),
                                  static_cast<Index>(it - variables_->begin()));
}

bool Expr::depends_on(Index slot) const { return node_depends_on(*root_, slot); }

std::string Expr::to_string() const {
  std::string out;
  print_node(*root_, *variables_, out);
  return out;
}

}  // namespace qgeom
