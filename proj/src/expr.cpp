#include "warpcurv/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <utility>

#include "warpcurv/error.hpp"

namespace warpcurv {

struct ScalarExpr::Node {
  Kind kind = Kind::Constant;
  double value = 0.0;  // constant value, or exponent for Power
  std::string name;    // Variable
  int index = -1;      // Variable slot after bind()
  std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using NodePtr = std::shared_ptr<const ScalarExpr::Node>;
using Kind = ScalarExpr::Kind;

NodePtr make_node(Kind kind, std::vector<NodePtr> children, double value = 0.0) {
  auto n = std::make_shared<ScalarExpr::Node>();
  n->kind = kind;
  n->value = value;
  n->children = std::move(children);
  return n;
}

NodePtr make_constant(double v) { return make_node(Kind::Constant, {}, v); }

bool is_const(const NodePtr& n, double v) {
  return n->kind == Kind::Constant && n->value == v;
}

template <class T>
T lift(double c, std::span<const double> x);

template <>
double lift<double>(double c, std::span<const double>) {
  return c;
}

template <>
Jet lift<Jet>(double c, std::span<const double> x) {
  return Jet(static_cast<Eigen::Index>(x.size()), c);
}

template <class T>
T variable_value(const ScalarExpr::Node& n, std::span<const double> x);

template <>
double variable_value<double>(const ScalarExpr::Node& n,
                              std::span<const double> x) {
  return x[static_cast<std::size_t>(n.index)];
}

template <>
Jet variable_value<Jet>(const ScalarExpr::Node& n, std::span<const double> x) {
  return Jet::variable(static_cast<Eigen::Index>(x.size()), n.index,
                       x[static_cast<std::size_t>(n.index)]);
}

double pow_fn(double a, double p) { return std::pow(a, p); }
Jet pow_fn(const Jet& a, double p) { return pow(a, p); }
double recip_fn(double a) { return 1.0 / a; }
Jet recip_fn(const Jet& a) { return reciprocal(a); }

template <class T>
T evaluate(const ScalarExpr::Node& n, std::span<const double> x) {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  switch (n.kind) {
    case Kind::Constant:
      return lift<T>(n.value, x);
    case Kind::Variable:
      if (n.index < 0 || static_cast<std::size_t>(n.index) >= x.size()) {
        throw Error(ErrorCode::InvalidSpec,
                    "variable '" + n.name + "' is not bound to a coordinate");
      }
      return variable_value<T>(n, x);
    case Kind::Sum: {
      T acc = evaluate<T>(*n.children[0], x);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        acc = acc + evaluate<T>(*n.children[i], x);
      }
      return acc;
    }
    case Kind::Product: {
      T acc = evaluate<T>(*n.children[0], x);
      for (std::size_t i = 1; i < n.children.size(); ++i) {
        acc = acc * evaluate<T>(*n.children[i], x);
      }
      return acc;
    }
    case Kind::Power:
      return pow_fn(evaluate<T>(*n.children[0], x), n.value);
    case Kind::Exp:
      return exp(evaluate<T>(*n.children[0], x));
    case Kind::Sin:
      return sin(evaluate<T>(*n.children[0], x));
    case Kind::Cos:
      return cos(evaluate<T>(*n.children[0], x));
    case Kind::Sqrt:
      return sqrt(evaluate<T>(*n.children[0], x));
    case Kind::Reciprocal:
      return recip_fn(evaluate<T>(*n.children[0], x));
  }
  return lift<T>(0.0, x);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) {
      s = buf;
      break;
    }
  }
  if (v < 0) s = "(" + s + ")";
  return s;
}

std::string render(const ScalarExpr::Node& n) {
  switch (n.kind) {
    case Kind::Constant:
      return format_number(n.value);
    case Kind::Variable:
      return n.name;
    case Kind::Sum: {
      std::string s = "(";
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) s += " + ";
        s += render(*n.children[i]);
      }
      return s + ")";
    }
    case Kind::Product: {
      std::string s;
      for (std::size_t i = 0; i < n.children.size(); ++i) {
        if (i) s += "*";
        s += render(*n.children[i]);
      }
      return s;
    }
    case Kind::Power:
      return "pow(" + render(*n.children[0]) + ", " + format_number(n.value) +
             ")";
    case Kind::Exp:
      return "exp(" + render(*n.children[0]) + ")";
    case Kind::Sin:
      return "sin(" + render(*n.children[0]) + ")";
    case Kind::Cos:
      return "cos(" + render(*n.children[0]) + ")";
    case Kind::Sqrt:
      return "sqrt(" + render(*n.children[0]) + ")";
    case Kind::Reciprocal:
      return "(1/" + render(*n.children[0]) + ")";
  }
  return "0";
}

NodePtr bind_node(const NodePtr& n, const std::vector<std::string>& names) {
  if (n->kind == Kind::Variable) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == n->name) {
        auto copy = std::make_shared<ScalarExpr::Node>(*n);
        copy->index = static_cast<int>(i);
        return copy;
      }
    }
    throw Error(ErrorCode::InvalidSpec, "unknown variable '" + n->name + "'");
  }
  if (n->children.empty()) return n;
  auto copy = std::make_shared<ScalarExpr::Node>(*n);
  for (auto& c : copy->children) c = bind_node(c, names);
  return copy;
}

bool bound(const ScalarExpr::Node& n) {
  if (n.kind == Kind::Variable) return n.index >= 0;
  for (const auto& c : n.children) {
    if (!bound(*c)) return false;
  }
  return true;
}

void collect(const ScalarExpr::Node& n, std::set<std::string>& out) {
  if (n.kind == Kind::Variable) out.insert(n.name);
  for (const auto& c : n.children) collect(*c, out);
}

NodePtr combine(Kind kind, const NodePtr& a, const NodePtr& b) {
  std::vector<NodePtr> kids;
  for (const NodePtr* p : {&a, &b}) {
    if ((*p)->kind == kind) {
      kids.insert(kids.end(), (*p)->children.begin(), (*p)->children.end());
    } else {
      kids.push_back(*p);
    }
  }
  return make_node(kind, std::move(kids));
}

NodePtr unary(Kind kind, const NodePtr& a) { return make_node(kind, {a}); }

}  // namespace

ScalarExpr::ScalarExpr() : node_(make_constant(0.0)) {}
ScalarExpr::ScalarExpr(std::shared_ptr<const Node> node)
    : node_(std::move(node)) {}

ScalarExpr ScalarExpr::constant(double value) {
  return ScalarExpr(make_constant(value));
}

ScalarExpr ScalarExpr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->name = std::move(name);
  return ScalarExpr(n);
}

ScalarExpr::Kind ScalarExpr::kind() const { return node_->kind; }

bool ScalarExpr::is_constant() const {
  std::set<std::string> vars;
  collect(*node_, vars);
  return vars.empty();
}

double ScalarExpr::constant_value() const {
  if (!is_constant()) {
    throw Error(ErrorCode::InvalidSpec,
                "expression '" + str() + "' is not constant");
  }
  return evaluate<double>(*node_, {});
}

ScalarExpr ScalarExpr::bind(const std::vector<std::string>& names) const {
  return ScalarExpr(bind_node(node_, names));
}

bool ScalarExpr::is_bound() const { return bound(*node_); }

std::set<std::string> ScalarExpr::variables() const {
  std::set<std::string> out;
  collect(*node_, out);
  return out;
}

double ScalarExpr::eval(std::span<const double> x) const {
  return evaluate<double>(*node_, x);
}

Jet ScalarExpr::eval_jet(std::span<const double> x) const {
  return evaluate<Jet>(*node_, x);
}

std::string ScalarExpr::str() const { return render(*node_); }

ScalarExpr operator+(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.node_->kind == Kind::Constant && b.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(a.node_->value + b.node_->value);
  }
  if (is_const(a.node_, 0.0)) return b;
  if (is_const(b.node_, 0.0)) return a;
  return ScalarExpr(combine(Kind::Sum, a.node_, b.node_));
}

ScalarExpr operator*(const ScalarExpr& a, const ScalarExpr& b) {
  if (a.node_->kind == Kind::Constant && b.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(a.node_->value * b.node_->value);
  }
  if (is_const(a.node_, 1.0)) return b;
  if (is_const(b.node_, 1.0)) return a;
  return ScalarExpr(combine(Kind::Product, a.node_, b.node_));
}

ScalarExpr operator-(const ScalarExpr& a) {
  return ScalarExpr::constant(-1.0) * a;
}

ScalarExpr operator-(const ScalarExpr& a, const ScalarExpr& b) {
  return a + (-b);
}

ScalarExpr operator/(const ScalarExpr& a, const ScalarExpr& b) {
  return a * reciprocal(b);
}

ScalarExpr pow(const ScalarExpr& base, double exponent) {
  if (exponent == 1.0) return base;
  if (base.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(std::pow(base.node_->value, exponent));
  }
  return ScalarExpr(make_node(Kind::Power, {base.node_}, exponent));
}

ScalarExpr exp(const ScalarExpr& a) {
  if (a.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(std::exp(a.node_->value));
  }
  return ScalarExpr(unary(Kind::Exp, a.node_));
}

ScalarExpr sin(const ScalarExpr& a) {
  if (a.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(std::sin(a.node_->value));
  }
  return ScalarExpr(unary(Kind::Sin, a.node_));
}

ScalarExpr cos(const ScalarExpr& a) {
  if (a.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(std::cos(a.node_->value));
  }
  return ScalarExpr(unary(Kind::Cos, a.node_));
}

ScalarExpr sqrt(const ScalarExpr& a) {
  if (a.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(std::sqrt(a.node_->value));
  }
  return ScalarExpr(unary(Kind::Sqrt, a.node_));
}

ScalarExpr reciprocal(const ScalarExpr& a) {
  if (a.node_->kind == Kind::Constant) {
    return ScalarExpr::constant(1.0 / a.node_->value);
  }
  return ScalarExpr(unary(Kind::Reciprocal, a.node_));
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ScalarExpr parse() {
    skip_ws();
    if (pos_ >= text_.size()) fail("empty expression");
    ScalarExpr e = expr();
    skip_ws();
    if (pos_ < text_.size()) {
      fail(std::string("unexpected '") + text_[pos_] + "'");
    }
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(pos_ + 1, msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) {
        fail(std::string("expected '") + c + "' before end of input");
      }
      fail(std::string("expected '") + c + "'");
    }
  }

  ScalarExpr expr() {
    ScalarExpr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  ScalarExpr term() {
    ScalarExpr lhs = unary_expr();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary_expr();
      } else if (accept('/')) {
        lhs = lhs / unary_expr();
      } else {
        return lhs;
      }
    }
  }

  ScalarExpr unary_expr() {
    if (accept('-')) return -unary_expr();
    if (accept('+')) return unary_expr();
    return power();
  }

  ScalarExpr power() {
    ScalarExpr base = primary();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) {
      ScalarExpr ex = unary_expr();
      if (!ex.is_constant()) {
        pos_ = at;
        fail("exponent must be constant");
      }
      return pow(base, ex.constant_value());
    }
    return base;
  }

  ScalarExpr primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return identifier();
    }
    if (accept('(')) {
      ScalarExpr inner = expr();
      expect(')');
      return inner;
    }
    fail(std::string("unexpected '") + c + "'");
  }

  ScalarExpr number() {
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return ScalarExpr::constant(v);
  }

  ScalarExpr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(text_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      ++pos_;
      std::vector<ScalarExpr> args;
      args.push_back(expr());
      while (accept(',')) args.push_back(expr());
      expect(')');
      return call(name, args, start);
    }
    if (name == "pi") return ScalarExpr::constant(std::numbers::pi);
    return ScalarExpr::variable(name);
  }

  ScalarExpr call(const std::string& name, const std::vector<ScalarExpr>& args,
                  std::size_t start) {
    auto arity = [&](std::size_t n) {
      if (args.size() != n) {
        pos_ = start;
        fail(name + " expects " + std::to_string(n) + " argument(s)");
      }
    };
    if (name == "exp") {
      arity(1);
      return exp(args[0]);
    }
    if (name == "sin") {
      arity(1);
      return sin(args[0]);
    }
    if (name == "cos") {
      arity(1);
      return cos(args[0]);
    }
    if (name == "sqrt") {
      arity(1);
      return sqrt(args[0]);
    }
    if (name == "pow") {
      arity(2);
      if (!args[1].is_constant()) {
        pos_ = start;
        fail("pow exponent must be constant");
      }
      return pow(args[0], args[1].constant_value());
    }
    pos_ = start;
    fail("unknown function '" + name + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarExpr parse_expr(std::string_view text) { return Parser(text).parse(); }

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveWarping: return "NonPositiveWarping";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::SingularMetric: return "SingularMetric";
    case ErrorCode::NumericalInstability: return "NumericalInstability";
    case ErrorCode::UnsupportedP: return "UnsupportedP";
    case ErrorCode::CaseMismatch: return "CaseMismatch";
    case ErrorCode::FiberNotEinstein: return "FiberNotEinstein";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::InvalidDimension: return "InvalidDimension";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnsupportedType: return "UnsupportedType";
    case ErrorCode::StepTooCoarse: return "StepTooCoarse";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigParseError: return "ConfigParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

}  // namespace warpcurv
