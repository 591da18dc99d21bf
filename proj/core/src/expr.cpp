#include "caplab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace caplab::expr {

namespace {

using K = Node::Kind;

NodePtr mk(K k, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr num(double v) {
  auto n = std::make_shared<Node>();
  n->kind = K::Const;
  n->value = v;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->kind == K::Const && n->value == v;
}

// constant-folding builders keep derivative trees readable and cheap
NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  if (a->kind == K::Const && b->kind == K::Const) return num(a->value + b->value);
  return mk(K::Add, a, b);
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(b, 0)) return a;
  if (a->kind == K::Const && b->kind == K::Const) return num(a->value - b->value);
  return mk(K::Sub, a, b);
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a, 0) || is_const(b, 0)) return num(0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  if (a->kind == K::Const && b->kind == K::Const) return num(a->value * b->value);
  return mk(K::Mul, a, b);
}
NodePtr divn(NodePtr a, NodePtr b) {
  if (is_const(a, 0)) return num(0);
  if (is_const(b, 1)) return a;
  return mk(K::Div, a, b);
}
NodePtr neg(NodePtr a) {
  if (a->kind == K::Const) return num(-a->value);
  return mk(K::Neg, a);
}
NodePtr pown(NodePtr a, NodePtr b) {
  if (is_const(b, 1)) return a;
  if (is_const(b, 0)) return num(1);
  return mk(K::Pow, a, b);
}

struct Parser {
  const std::string& s;
  size_t pos = 0;

  explicit Parser(const std::string& src) : s(src) {}

  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("expression error at column " + std::to_string(pos + 1) +
                                ": " + what);
  }
  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+'))
        lhs = add(lhs, parse_term());
      else if (eat('-'))
        lhs = sub(lhs, parse_term());
      else
        return lhs;
    }
  }
  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (eat('*'))
        lhs = mul(lhs, parse_factor());
      else if (eat('/'))
        lhs = divn(lhs, parse_factor());
      else
        return lhs;
    }
  }
  NodePtr parse_factor() {  // right-associative ^
    NodePtr base = parse_unary();
    if (eat('^')) return pown(base, parse_factor());
    return base;
  }
  NodePtr parse_unary() {
    if (eat('-')) return neg(parse_unary());
    return parse_primary();
  }
  NodePtr parse_primary() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end of input");
    char c = s[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      double v = std::strtod(s.c_str() + pos, &end);
      if (end == s.c_str() + pos) fail("bad number");
      pos = end - s.c_str();
      return num(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
      std::string word = s.substr(start, pos - start);
      if (word == "u") return mk(K::Var);
      K k;
      if (word == "exp")
        k = K::Exp;
      else if (word == "sin")
        k = K::Sin;
      else if (word == "cos")
        k = K::Cos;
      else if (word == "log")
        k = K::Log;
      else {
        pos = start;
        fail("unknown name '" + word + "'");
      }
      if (!eat('(')) fail("expected '(' after " + word);
      NodePtr arg = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return mk(k, arg);
    }
    if (eat('(')) {
      NodePtr e = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

NodePtr parse(const std::string& src) {
  Parser p(src);
  NodePtr e = p.parse_expr();
  p.skip_ws();
  if (p.pos != src.size()) p.fail("trailing input");
  return e;
}

double eval(const NodePtr& n, double u) {
  switch (n->kind) {
    case K::Const: return n->value;
    case K::Var: return u;
    case K::Add: return eval(n->a, u) + eval(n->b, u);
    case K::Sub: return eval(n->a, u) - eval(n->b, u);
    case K::Mul: return eval(n->a, u) * eval(n->b, u);
    case K::Div: return eval(n->a, u) / eval(n->b, u);
    case K::Pow: return std::pow(eval(n->a, u), eval(n->b, u));
    case K::Neg: return -eval(n->a, u);
    case K::Exp: return std::exp(eval(n->a, u));
    case K::Sin: return std::sin(eval(n->a, u));
    case K::Cos: return std::cos(eval(n->a, u));
    case K::Log: return std::log(eval(n->a, u));
  }
  return 0;
}

NodePtr derivative(const NodePtr& n) {
  switch (n->kind) {
    case K::Const: return num(0);
    case K::Var: return num(1);
    case K::Add: return add(derivative(n->a), derivative(n->b));
    case K::Sub: return sub(derivative(n->a), derivative(n->b));
    case K::Mul: return add(mul(derivative(n->a), n->b), mul(n->a, derivative(n->b)));
    case K::Div:
      return divn(sub(mul(derivative(n->a), n->b), mul(n->a, derivative(n->b))),
                  pown(n->b, num(2)));
    case K::Pow: {
      if (n->b->kind == K::Const) {  // f^c -> c f^(c-1) f'
        double c = n->b->value;
        return mul(mul(num(c), pown(n->a, num(c - 1))), derivative(n->a));
      }
      if (n->a->kind == K::Const) {  // c^g -> c^g ln(c) g'
        return mul(mul(n, num(std::log(n->a->value))), derivative(n->b));
      }
      // f^g -> f^g (g' log f + g f'/f)
      return mul(n, add(mul(derivative(n->b), mk(K::Log, n->a)),
                        mul(n->b, divn(derivative(n->a), n->a))));
    }
    case K::Neg: return neg(derivative(n->a));
    case K::Exp: return mul(n, derivative(n->a));
    case K::Sin: return mul(mk(K::Cos, n->a), derivative(n->a));
    case K::Cos: return neg(mul(mk(K::Sin, n->a), derivative(n->a)));
    case K::Log: return divn(derivative(n->a), n->a);
  }
  return num(0);
}

std::string to_string(const NodePtr& n) {
  switch (n->kind) {
    case K::Const: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", n->value);
      return buf;
    }
    case K::Var: return "u";
    case K::Add: return "(" + to_string(n->a) + " + " + to_string(n->b) + ")";
    case K::Sub: return "(" + to_string(n->a) + " - " + to_string(n->b) + ")";
    case K::Mul: return "(" + to_string(n->a) + " * " + to_string(n->b) + ")";
    case K::Div: return "(" + to_string(n->a) + " / " + to_string(n->b) + ")";
    case K::Pow: return "(" + to_string(n->a) + " ^ " + to_string(n->b) + ")";
    case K::Neg: return "(-" + to_string(n->a) + ")";
    case K::Exp: return "exp(" + to_string(n->a) + ")";
    case K::Sin: return "sin(" + to_string(n->a) + ")";
    case K::Cos: return "cos(" + to_string(n->a) + ")";
    case K::Log: return "log(" + to_string(n->a) + ")";
  }
  return "?";
}

}  // namespace caplab::expr
