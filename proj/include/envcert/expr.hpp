// Scalar expression language used for coefficients, envelopes and
// right-hand sides.
//
// Expressions are immutable trees over a declared, ordered variable set
// (e.g. {t}, {t, y} or {n, y}). Powers always carry a constant exponent,
// which keeps symbolic differentiation closed over the node set.

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace envcert {

/// Syntax error. `offset` is the byte offset into the parsed text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownVariableError : public ParseError {
 public:
  UnknownVariableError(const std::string& name, std::size_t offset)
      : ParseError("unknown variable '" + name + "'", offset), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

enum class DomainErrorKind {
  DivisionByZero,
  LogOfNonpositive,
  ZeroToNegativePower,
  NegativeBaseFractionalPower,
  NonFinite,
};

/// Raised whenever an evaluation leaves the real domain. Non-finite
/// intermediates are promoted to this error as well, so no caller ever sees
/// a NaN comparison.
class DomainError : public std::runtime_error {
 public:
  DomainError(DomainErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  DomainErrorKind kind() const { return kind_; }

 private:
  DomainErrorKind kind_;
};

class NotDifferentiableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Ln, Abs, Min, Max };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;   // Const payload, or the exponent of a Pow node
  std::size_t var = 0;  // Var index into the owning expression's variables
  NodePtr lhs;
  NodePtr rhs;
};

class Expression {
 public:
  Expression() = default;
  Expression(NodePtr root, std::vector<std::string> vars);

  /// Constant expression over the given variable set.
  static Expression constant(double v, std::vector<std::string> vars);

  const NodePtr& root() const { return root_; }
  const std::vector<std::string>& variables() const { return vars_; }
  std::size_t variable_index(std::string_view name) const;

  /// Positional evaluation: `values[i]` binds `variables()[i]`.
  double eval(std::span<const double> values) const;
  double eval(const std::map<std::string, double>& bindings) const;

  // Convenience for the common one- and two-variable shapes.
  double operator()(double x) const;
  double operator()(double x, double y) const;

  bool is_constant() const;
  /// True if the expression mentions variable `index`.
  bool depends_on(std::size_t index) const;

  /// Fully parenthesised text that re-parses to the same tree.
  std::string to_string() const;

 private:
  NodePtr root_;
  std::vector<std::string> vars_;
};

/// Parses `text` over the ordered variable set `vars`. Identifiers found in
/// `constants` are substituted by their value at parse time, which is how
/// named parameters such as `lambda` or `nu` enter expressions.
Expression parse_expr(std::string_view text, std::vector<std::string> vars,
                      const std::map<std::string, double>& constants = {});

Expression diff_expr(const Expression& e, std::string_view var);

double eval_expr(const Expression& e, const std::map<std::string, double>& bindings);

// Node constructors with constant folding and the trivial identities
// (x+0, x*1, x*0, x^1, ...). Exposed for builders that assemble
// expressions programmatically.
namespace node {
NodePtr constant(double v);
NodePtr variable(std::size_t index);
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr pow(NodePtr base, double exponent);
NodePtr neg(NodePtr a);
NodePtr exp(NodePtr a);
NodePtr ln(NodePtr a);
NodePtr abs(NodePtr a);
NodePtr min(NodePtr a, NodePtr b);
NodePtr max(NodePtr a, NodePtr b);
}  // namespace node

}  // namespace envcert
