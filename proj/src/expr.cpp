#include "envcert/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

#include "envcert/format.hpp"

namespace envcert {

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw DomainError(DomainErrorKind::NonFinite, std::string("non-finite value in ") + what);
  }
  return v;
}

double eval_pow(double base, double exponent) {
  if (base == 0.0 && exponent < 0.0) {
    throw DomainError(DomainErrorKind::ZeroToNegativePower, "0 raised to a negative power");
  }
  if (base < 0.0 && exponent != std::floor(exponent)) {
    throw DomainError(DomainErrorKind::NegativeBaseFractionalPower,
                      "fractional power of a negative base");
  }
  return checked(std::pow(base, exponent), "power");
}

double eval_node(const Node& n, std::span<const double> values) {
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      return checked(values[n.var], "variable binding");
    case Op::Add:
      return checked(eval_node(*n.lhs, values) + eval_node(*n.rhs, values), "sum");
    case Op::Sub:
      return checked(eval_node(*n.lhs, values) - eval_node(*n.rhs, values), "difference");
    case Op::Mul:
      return checked(eval_node(*n.lhs, values) * eval_node(*n.rhs, values), "product");
    case Op::Div: {
      const double num = eval_node(*n.lhs, values);
      const double den = eval_node(*n.rhs, values);
      if (den == 0.0) throw DomainError(DomainErrorKind::DivisionByZero, "division by zero");
      return checked(num / den, "quotient");
    }
    case Op::Pow:
      return eval_pow(eval_node(*n.lhs, values), n.value);
    case Op::Neg:
      return -eval_node(*n.lhs, values);
    case Op::Exp:
      return checked(std::exp(eval_node(*n.lhs, values)), "exp");
    case Op::Ln: {
      const double a = eval_node(*n.lhs, values);
      if (a <= 0.0) throw DomainError(DomainErrorKind::LogOfNonpositive, "ln of a nonpositive value");
      return std::log(a);
    }
    case Op::Abs:
      return std::fabs(eval_node(*n.lhs, values));
    case Op::Min:
      return std::fmin(eval_node(*n.lhs, values), eval_node(*n.rhs, values));
    case Op::Max:
      return std::fmax(eval_node(*n.lhs, values), eval_node(*n.rhs, values));
  }
  throw std::logic_error("corrupt expression node");
}

NodePtr make(Op op, NodePtr lhs, NodePtr rhs = nullptr, double value = 0.0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->value = value;
  return n;
}

bool is_const(const NodePtr& n) { return n->op == Op::Const; }
bool is_const(const NodePtr& n, double v) { return n->op == Op::Const && n->value == v; }

// Folds a freshly built node if all children are constant and the value is
// defined. Undefined constant subtrees stay unfolded so that evaluation
// reports the domain error.
NodePtr fold(NodePtr n) {
  const bool foldable = (!n->lhs || is_const(n->lhs)) && (!n->rhs || is_const(n->rhs));
  if (!foldable || n->op == Op::Const || n->op == Op::Var) return n;
  try {
    return node::constant(eval_node(*n, {}));
  } catch (const DomainError&) {
    return n;
  }
}

bool depends(const Node& n, std::size_t index) {
  if (n.op == Op::Var) return n.var == index;
  return (n.lhs && depends(*n.lhs, index)) || (n.rhs && depends(*n.rhs, index));
}

NodePtr derivative(const NodePtr& n, std::size_t index) {
  using namespace node;
  if (!depends(*n, index)) return constant(0.0);
  switch (n->op) {
    case Op::Const:
      return constant(0.0);
    case Op::Var:
      return constant(1.0);
    case Op::Add:
      return add(derivative(n->lhs, index), derivative(n->rhs, index));
    case Op::Sub:
      return sub(derivative(n->lhs, index), derivative(n->rhs, index));
    case Op::Mul:
      return add(mul(derivative(n->lhs, index), n->rhs), mul(n->lhs, derivative(n->rhs, index)));
    case Op::Div:
      return div(sub(mul(derivative(n->lhs, index), n->rhs), mul(n->lhs, derivative(n->rhs, index))),
                 pow(n->rhs, 2.0));
    case Op::Pow:
      return mul(mul(constant(n->value), pow(n->lhs, n->value - 1.0)), derivative(n->lhs, index));
    case Op::Neg:
      return neg(derivative(n->lhs, index));
    case Op::Exp:
      return mul(n, derivative(n->lhs, index));
    case Op::Ln:
      return div(derivative(n->lhs, index), n->lhs);
    case Op::Abs:
      throw NotDifferentiableError("abs() cannot be differentiated symbolically");
    case Op::Min:
      throw NotDifferentiableError("min() cannot be differentiated symbolically");
    case Op::Max:
      throw NotDifferentiableError("max() cannot be differentiated symbolically");
  }
  throw std::logic_error("corrupt expression node");
}

void print(const Node& n, const std::vector<std::string>& vars, std::string& out) {
  auto binary = [&](const char* sym) {
    out += '(';
    print(*n.lhs, vars, out);
    out += sym;
    print(*n.rhs, vars, out);
    out += ')';
  };
  auto call = [&](const char* name) {
    out += name;
    out += '(';
    print(*n.lhs, vars, out);
    if (n.rhs) {
      out += ", ";
      print(*n.rhs, vars, out);
    }
    out += ')';
  };
  switch (n.op) {
    case Op::Const:
      if (n.value < 0.0 || (n.value == 0.0 && std::signbit(n.value))) {
        out += "(-" + format_double(-n.value) + ')';
      } else {
        out += format_double(n.value);
      }
      return;
    case Op::Var:
      out += vars[n.var];
      return;
    case Op::Add: return binary(" + ");
    case Op::Sub: return binary(" - ");
    case Op::Mul: return binary(" * ");
    case Op::Div: return binary(" / ");
    case Op::Pow: {
      out += '(';
      print(*n.lhs, vars, out);
      out += " ^ ";
      print(Node{Op::Const, n.value, 0, nullptr, nullptr}, vars, out);
      out += ')';
      return;
    }
    case Op::Neg:
      out += "(-";
      print(*n.lhs, vars, out);
      out += ')';
      return;
    case Op::Exp: return call("exp");
    case Op::Ln: return call("ln");
    case Op::Abs: return call("abs");
    case Op::Min: return call("min");
    case Op::Max: return call("max");
  }
}

class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& vars,
         const std::map<std::string, double>& constants)
      : text_(text), vars_(vars), constants_(constants) {}

  NodePtr parse() {
    NodePtr e = expression();
    skip_space();
    if (pos_ != text_.size()) fail(std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but input ended");
      fail(std::string("expected '") + c + "'");
    }
  }

  NodePtr expression() {
    NodePtr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = node::add(lhs, term());
      } else if (accept('-')) {
        lhs = node::sub(lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = node::mul(lhs, unary());
      } else if (accept('/')) {
        lhs = node::div(lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return node::neg(unary());
    if (accept('+')) return unary();
    return power();
  }

  // ^ binds tighter than unary minus on its left and is right associative;
  // a sign is allowed directly after it ("x^-1").
  NodePtr power() {
    NodePtr base = primary();
    if (!accept('^')) return base;
    skip_space();
    const std::size_t at = pos_;
    NodePtr exponent = unary();
    if (!is_const(exponent)) throw ParseError("exponent must be a constant", at);
    return node::pow(base, exponent->value);
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expression();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (is_ident_start(c)) return identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  NodePtr number() {
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc() || !std::isfinite(v)) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - first);
    return node::constant(v);
  }

  static bool is_ident_start(char c) {
    const auto u = static_cast<unsigned char>(c);
    return std::isalpha(u) || c == '_' || u >= 0x80;
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    const std::string name(text_.substr(start, pos_ - start));

    skip_space();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      if (name == "exp" || name == "ln" || name == "abs") {
        ++pos_;
        NodePtr arg = expression();
        expect(')');
        if (name == "exp") return node::exp(arg);
        if (name == "ln") return node::ln(arg);
        return node::abs(arg);
      }
      if (name == "min" || name == "max") {
        ++pos_;
        NodePtr a = expression();
        expect(',');
        NodePtr b = expression();
        expect(')');
        return name == "min" ? node::min(a, b) : node::max(a, b);
      }
      throw ParseError("unknown function '" + name + "'", start);
    }
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i] == name) return node::variable(i);
    }
    if (auto it = constants_.find(name); it != constants_.end()) return node::constant(it->second);
    throw UnknownVariableError(name, start);
  }

  std::string_view text_;
  const std::vector<std::string>& vars_;
  const std::map<std::string, double>& constants_;
  std::size_t pos_ = 0;
};

}  // namespace

namespace node {

NodePtr constant(double v) { return make(Op::Const, nullptr, nullptr, v); }

NodePtr variable(std::size_t index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  return n;
}

NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  return fold(make(Op::Add, std::move(a), std::move(b)));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a, 0.0)) return neg(std::move(b));
  return fold(make(Op::Sub, std::move(a), std::move(b)));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  return fold(make(Op::Mul, std::move(a), std::move(b)));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const(b, 1.0)) return a;
  return fold(make(Op::Div, std::move(a), std::move(b)));
}

NodePtr pow(NodePtr base, double exponent) {
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return base;
  return fold(make(Op::Pow, std::move(base), nullptr, exponent));
}

NodePtr neg(NodePtr a) {
  if (a->op == Op::Neg) return a->lhs;
  if (is_const(a)) return constant(-a->value);
  return make(Op::Neg, std::move(a));
}

NodePtr exp(NodePtr a) { return fold(make(Op::Exp, std::move(a))); }
NodePtr ln(NodePtr a) { return fold(make(Op::Ln, std::move(a))); }
NodePtr abs(NodePtr a) { return fold(make(Op::Abs, std::move(a))); }
NodePtr min(NodePtr a, NodePtr b) { return fold(make(Op::Min, std::move(a), std::move(b))); }
NodePtr max(NodePtr a, NodePtr b) { return fold(make(Op::Max, std::move(a), std::move(b))); }

}  // namespace node

Expression::Expression(NodePtr root, std::vector<std::string> vars)
    : root_(std::move(root)), vars_(std::move(vars)) {}

Expression Expression::constant(double v, std::vector<std::string> vars) {
  return Expression(node::constant(v), std::move(vars));
}

std::size_t Expression::variable_index(std::string_view name) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i] == name) return i;
  }
  throw std::invalid_argument("variable '" + std::string(name) + "' is not declared");
}

double Expression::eval(std::span<const double> values) const {
  if (values.size() < vars_.size()) {
    throw std::invalid_argument("expression needs " + std::to_string(vars_.size()) + " bindings");
  }
  return eval_node(*root_, values);
}

double Expression::eval(const std::map<std::string, double>& bindings) const {
  std::vector<double> values(vars_.size(), 0.0);
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    auto it = bindings.find(vars_[i]);
    if (it == bindings.end()) {
      if (depends_on(i)) throw std::invalid_argument("no binding for variable '" + vars_[i] + "'");
      continue;
    }
    values[i] = it->second;
  }
  return eval_node(*root_, values);
}

double Expression::operator()(double x) const {
  const double values[2] = {x, 0.0};
  return eval_node(*root_, values);
}

double Expression::operator()(double x, double y) const {
  const double values[2] = {x, y};
  return eval_node(*root_, values);
}

bool Expression::is_constant() const { return root_->op == Op::Const; }

bool Expression::depends_on(std::size_t index) const { return depends(*root_, index); }

std::string Expression::to_string() const {
  std::string out;
  print(*root_, vars_, out);
  return out;
}

Expression parse_expr(std::string_view text, std::vector<std::string> vars,
                      const std::map<std::string, double>& constants) {
  if (vars.empty()) throw std::invalid_argument("variable set must be non-empty");
  std::size_t first = 0;
  while (first < text.size() && std::isspace(static_cast<unsigned char>(text[first]))) ++first;
  if (first == text.size()) throw ParseError("empty expression", 0);
  Parser parser(text, vars, constants);
  NodePtr root = parser.parse();
  return Expression(std::move(root), std::move(vars));
}

Expression diff_expr(const Expression& e, std::string_view var) {
  const std::size_t index = e.variable_index(var);
  return Expression(derivative(e.root(), index), e.variables());
}

double eval_expr(const Expression& e, const std::map<std::string, double>& bindings) {
  return e.eval(bindings);
}

}  // namespace envcert
