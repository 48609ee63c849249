#include "waveinv/expression.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include "waveinv/error.hpp"

namespace waveinv {

struct Expression::Node {
  enum class Op { num, var, add, sub, mul, div, pow, neg, sin, cos, exp } op;
  double value = 0.0;
  char var = 0;
  std::shared_ptr<const Node> a, b;

  double eval(const double* v) const {
    switch (op) {
      case Op::num: return value;
      case Op::var: return v[static_cast<int>(value)];
      case Op::add: return a->eval(v) + b->eval(v);
      case Op::sub: return a->eval(v) - b->eval(v);
      case Op::mul: return a->eval(v) * b->eval(v);
      case Op::div: return a->eval(v) / b->eval(v);
      case Op::pow: {
        const double e = b->eval(v);
        const double r = std::round(e);
        if (e == r && std::abs(r) <= 16) {
          const double base = a->eval(v);
          double p = 1.0;
          for (int k = 0; k < std::abs(static_cast<int>(r)); ++k) p *= base;
          return r < 0 ? 1.0 / p : p;
        }
        return std::pow(a->eval(v), e);
      }
      case Op::neg: return -a->eval(v);
      case Op::sin: return std::sin(a->eval(v));
      case Op::cos: return std::cos(a->eval(v));
      case Op::exp: return std::exp(a->eval(v));
    }
    return 0.0;
  }

  bool uses(char c) const {
    if (op == Op::var) return var == c;
    return (a && a->uses(c)) || (b && b->uses(c));
  }
};

namespace {

using NodeP = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodeP make(Op op, NodeP a = nullptr, NodeP b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodeP number(double v) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Op::num;
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodeP parse() {
    NodeP e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw ConfigError("expression '" + s_ + "' column " + std::to_string(pos_ + 1) + ": " + why);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodeP expr() {
    NodeP l = term();
    for (;;) {
      if (eat('+')) l = make(Op::add, l, term());
      else if (eat('-')) l = make(Op::sub, l, term());
      else return l;
    }
  }
  NodeP term() {
    NodeP l = unary();
    for (;;) {
      if (eat('*')) l = make(Op::mul, l, unary());
      else if (eat('/')) l = make(Op::div, l, unary());
      else return l;
    }
  }
  NodeP unary() {
    if (eat('-')) return make(Op::neg, unary());
    if (eat('+')) return unary();
    return power();
  }
  NodeP power() {
    NodeP base = primary();
    if (eat('^')) return make(Op::pow, base, unary());
    return base;
  }
  NodeP primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodeP e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return number(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t end = pos_;
      while (end < s_.size() && std::isalnum(static_cast<unsigned char>(s_[end]))) ++end;
      const std::string id = s_.substr(pos_, end - pos_);
      pos_ = end;
      if (id == "pi") return number(std::numbers::pi);
      if (id == "x" || id == "y" || id == "t" || id == "s") {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::var;
        n->var = id[0];
        n->value = id == "x" ? 0 : id == "y" ? 1 : id == "t" ? 2 : 3;
        return n;
      }
      Op op;
      if (id == "sin") op = Op::sin;
      else if (id == "cos") op = Op::cos;
      else if (id == "exp") op = Op::exp;
      else fail("unknown identifier '" + id + "'");
      if (!eat('(')) fail("expected '(' after " + id);
      NodeP arg = expr();
      if (!eat(')')) fail("expected ')'");
      return make(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text) {
  Expression e;
  e.root_ = Parser(text).parse();
  e.text_ = text;
  return e;
}

double Expression::operator()(double x, double y, double t, double s) const {
  if (!root_) return 0.0;
  const double v[4] = {x, y, t, s};
  return root_->eval(v);
}

bool Expression::uses(char var) const { return root_ && root_->uses(var); }

}  // namespace waveinv
