#pragma once

#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "warpcurv/jet.hpp"

namespace warpcurv {

// Immutable expression tree over named real variables.
//
// Variables are referenced by name when built or parsed and must be bound to
// positions in a coordinate vector (bind) before evaluation. Copies share the
// underlying tree.
class ScalarExpr {
 public:
  enum class Kind {
    Constant,
    Variable,
    Sum,
    Product,
    Power,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Reciprocal,
  };

  struct Node;

  ScalarExpr();  // constant 0

  static ScalarExpr constant(double value);
  static ScalarExpr variable(std::string name);

  Kind kind() const;
  bool is_constant() const;
  // Value of a constant expression. Throws InvalidSpec when a variable occurs.
  double constant_value() const;

  // Resolve variable names to indices into `names`. Throws InvalidSpec on an
  // unknown name.
  ScalarExpr bind(const std::vector<std::string>& names) const;
  bool is_bound() const;

  std::set<std::string> variables() const;

  double eval(std::span<const double> x) const;
  // Value, gradient and Hessian with respect to every entry of x.
  Jet eval_jet(std::span<const double> x) const;

  // Infix rendering; parse_expr(str()) reproduces the same function.
  std::string str() const;

  friend ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b);
  friend ScalarExpr operator-(const ScalarExpr& a);

  friend ScalarExpr pow(const ScalarExpr& base, double exponent);
  friend ScalarExpr exp(const ScalarExpr& a);
  friend ScalarExpr sin(const ScalarExpr& a);
  friend ScalarExpr cos(const ScalarExpr& a);
  friend ScalarExpr sqrt(const ScalarExpr& a);
  friend ScalarExpr reciprocal(const ScalarExpr& a);

 private:
  explicit ScalarExpr(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

inline ScalarExpr operator+(double a, const ScalarExpr& b) {
  return ScalarExpr::constant(a) + b;
}
inline ScalarExpr operator*(double a, const ScalarExpr& b) {
  return ScalarExpr::constant(a) * b;
}

// Parse the infix grammar
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := ('+'|'-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
// Functions: exp, sin, cos, sqrt, pow(base, exponent). Exponents must be
// constant. The name `pi` is the constant. Whitespace is ignored.
ScalarExpr parse_expr(std::string_view text);

}  // namespace warpcurv
