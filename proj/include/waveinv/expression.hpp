#pragma once

#include <memory>
#include <string>

namespace waveinv {

/// Arithmetic expression in the variables x, y, t and s.
/// Grammar: numbers, pi, + - * / ^, parentheses, sin, cos, exp.
class Expression {
 public:
  Expression() = default;
  static Expression parse(const std::string& text);

  double operator()(double x, double y, double t, double s = 0.0) const;
  const std::string& text() const { return text_; }
  bool uses(char var) const;

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace waveinv
