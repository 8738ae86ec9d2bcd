#pragma once

// Expression mini-language for nodal fields. Grammar:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//
// Identifiers: x, y, z, pi, and on a torus Lx, Ly. Functions: sin, cos, pow.

#include <cctype>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "isospec/error.hpp"
#include "isospec/surface.hpp"

namespace isospec {

class Expression {
 public:
  struct Variables {
    double x = 0.0, y = 0.0, z = 0.0;
    double lx = 1.0, ly = 1.0;
  };

  static Expression parse(std::string_view text) {
    Parser p{text, 0};
    auto root = p.expr();
    p.skip_ws();
    if (p.pos != text.size())
      throw Error(ErrorKind::UnsupportedExpression,
                  "unexpected '" + std::string(text.substr(p.pos, 1)) + "' at offset " + std::to_string(p.pos));
    Expression e;
    e.root_ = std::move(root);
    e.text_ = std::string(text);
    return e;
  }

  double evaluate(const Variables& vars) const { return eval(*root_, vars); }
  const std::string& text() const { return text_; }

  bool uses_torus_periods() const { return uses(*root_, Node::Kind::Lx) || uses(*root_, Node::Kind::Ly); }

 private:
  struct Node {
    enum class Kind { Number, X, Y, Z, Lx, Ly, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos };
    Kind kind;
    double value = 0.0;
    std::vector<std::shared_ptr<const Node>> args;
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr make(Node::Kind kind, std::vector<NodePtr> args = {}, double value = 0.0) {
    return std::make_shared<const Node>(Node{kind, value, std::move(args)});
  }

  struct Parser {
    std::string_view s;
    std::size_t pos;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    void expect(char c) {
      if (!accept(c))
        throw Error(ErrorKind::UnsupportedExpression,
                    std::string("expected '") + c + "' at offset " + std::to_string(pos));
    }

    NodePtr expr() {
      NodePtr lhs = term();
      for (;;) {
        if (accept('+')) lhs = make(Node::Kind::Add, {lhs, term()});
        else if (accept('-')) lhs = make(Node::Kind::Sub, {lhs, term()});
        else return lhs;
      }
    }
    NodePtr term() {
      NodePtr lhs = unary();
      for (;;) {
        if (accept('*')) lhs = make(Node::Kind::Mul, {lhs, unary()});
        else if (accept('/')) lhs = make(Node::Kind::Div, {lhs, unary()});
        else return lhs;
      }
    }
    NodePtr unary() {
      if (accept('-')) return make(Node::Kind::Neg, {unary()});
      if (accept('+')) return unary();
      return power();
    }
    NodePtr power() {
      NodePtr base = primary();
      if (accept('^')) return make(Node::Kind::Pow, {base, unary()});
      return base;
    }
    NodePtr primary() {
      skip_ws();
      if (pos >= s.size()) throw Error(ErrorKind::UnsupportedExpression, "unexpected end of expression");
      const char c = s[pos];
      if (accept('(')) {
        NodePtr inner = expr();
        expect(')');
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
      throw Error(ErrorKind::UnsupportedExpression,
                  std::string("unexpected '") + c + "' at offset " + std::to_string(pos));
    }
    NodePtr number() {
      const std::string rest(s.substr(pos));
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(rest, &used);
      } catch (const std::exception&) {
        throw Error(ErrorKind::UnsupportedExpression, "malformed number at offset " + std::to_string(pos));
      }
      pos += used;
      return make(Node::Kind::Number, {}, v);
    }
    NodePtr identifier() {
      const std::size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
      const std::string name(s.substr(start, pos - start));
      skip_ws();
      const bool call = pos < s.size() && s[pos] == '(';
      if (!call) {
        if (name == "x") return make(Node::Kind::X);
        if (name == "y") return make(Node::Kind::Y);
        if (name == "z") return make(Node::Kind::Z);
        if (name == "Lx") return make(Node::Kind::Lx);
        if (name == "Ly") return make(Node::Kind::Ly);
        if (name == "pi") return make(Node::Kind::Number, {}, std::numbers::pi);
        throw Error(ErrorKind::UnsupportedExpression, "unknown identifier '" + name + "'");
      }
      Node::Kind kind;
      std::size_t arity = 1;
      if (name == "sin") kind = Node::Kind::Sin;
      else if (name == "cos") kind = Node::Kind::Cos;
      else if (name == "pow") {
        kind = Node::Kind::Pow;
        arity = 2;
      } else {
        throw Error(ErrorKind::UnsupportedExpression, "unsupported function '" + name + "'");
      }
      expect('(');
      std::vector<NodePtr> args{expr()};
      while (accept(',')) args.push_back(expr());
      expect(')');
      if (args.size() != arity)
        throw Error(ErrorKind::UnsupportedExpression,
                    name + " takes " + std::to_string(arity) + " argument(s), got " + std::to_string(args.size()));
      return make(kind, std::move(args));
    }
  };

  static double eval(const Node& n, const Variables& v) {
    switch (n.kind) {
      case Node::Kind::Number: return n.value;
      case Node::Kind::X: return v.x;
      case Node::Kind::Y: return v.y;
      case Node::Kind::Z: return v.z;
      case Node::Kind::Lx: return v.lx;
      case Node::Kind::Ly: return v.ly;
      case Node::Kind::Add: return eval(*n.args[0], v) + eval(*n.args[1], v);
      case Node::Kind::Sub: return eval(*n.args[0], v) - eval(*n.args[1], v);
      case Node::Kind::Mul: return eval(*n.args[0], v) * eval(*n.args[1], v);
      case Node::Kind::Div: return eval(*n.args[0], v) / eval(*n.args[1], v);
      case Node::Kind::Neg: return -eval(*n.args[0], v);
      case Node::Kind::Pow: return std::pow(eval(*n.args[0], v), eval(*n.args[1], v));
      case Node::Kind::Sin: return std::sin(eval(*n.args[0], v));
      case Node::Kind::Cos: return std::cos(eval(*n.args[0], v));
    }
    return 0.0;
  }

  static bool uses(const Node& n, Node::Kind kind) {
    if (n.kind == kind) return true;
    for (const auto& a : n.args)
      if (uses(*a, kind)) return true;
    return false;
  }

  NodePtr root_;
  std::string text_;
};

/// Samples an expression at every node. Non-finite samples (e.g. 1/x at x=0)
/// are rejected by the ScalarField constructor.
inline ScalarField field_from_expression(const DiscreteSurface& surface, std::string_view text) {
  const Expression expr = Expression::parse(text);
  Expression::Variables vars;
  if (surface.kind() == SurfaceKind::TorusGrid) {
    vars.lx = surface.torus_dims()->lx;
    vars.ly = surface.torus_dims()->ly;
  } else if (expr.uses_torus_periods()) {
    throw Error(ErrorKind::UnsupportedExpression, "Lx/Ly are only defined on torus surfaces");
  }
  Eigen::VectorXd values(static_cast<Eigen::Index>(surface.node_count()));
  for (std::size_t i = 0; i < surface.node_count(); ++i) {
    const Eigen::Vector3d p = surface.position(i);
    vars.x = p.x();
    vars.y = p.y();
    vars.z = p.z();
    values[static_cast<Eigen::Index>(i)] = expr.evaluate(vars);
  }
  return ScalarField(surface, std::move(values));
}

}  // namespace isospec
