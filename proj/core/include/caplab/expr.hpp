#pragma once

#include <memory>
#include <string>

namespace caplab::expr {

// Tiny arithmetic grammar over one variable u:
//   +, -, *, /, ^, unary minus, exp, sin, cos, log, parentheses, numbers.
// Nodes are immutable; derivative() differentiates symbolically (log appears
// internally when differentiating f^g with non-constant base and exponent).

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  enum class Kind { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Sin, Cos, Log };
  Kind kind;
  double value = 0;  // Kind::Const
  NodePtr a, b;
};

NodePtr parse(const std::string& src);  // throws std::invalid_argument with column info
double eval(const NodePtr& n, double u);
NodePtr derivative(const NodePtr& n);
std::string to_string(const NodePtr& n);

}  // namespace caplab::expr
