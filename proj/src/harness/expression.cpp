#include "tvopt/harness/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <vector>

#include "tvopt/error.hpp"
#include "tvopt/harness/report.hpp"

namespace tvopt::harness {

struct Expression::Node {
  enum class Kind { Const, Var, Add, Sub, Mul, Neg, Sin, Cos, Tanh };
  Kind kind;
  double value = 0;
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double value = 0) {
  auto n = std::make_shared<Expression::Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->value = value;
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse_all() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::ConfigError,
                "expression \"" + std::string(s_) + "\" at offset " + std::to_string(pos_) + ": " + why);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(std::string_view tok) {
    skip();
    if (s_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (eat("+")) {
        lhs = make(Kind::Add, lhs, term());
      } else if (eat("-")) {
        lhs = make(Kind::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (eat("*") || eat("\xC2\xB7")) lhs = make(Kind::Mul, lhs, unary());
    return lhs;
  }

  NodePtr unary() {
    if (eat("-")) return make(Kind::Neg, unary());
    if (eat("+")) return unary();
    return primary();
  }

  NodePtr call(Kind kind) {
    if (!eat("(")) fail("expected '(' after function name");
    NodePtr arg = expr();
    if (!eat(")")) fail("expected ')'");
    return make(kind, arg);
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (eat("(")) {
      NodePtr e = expr();
      if (!eat(")")) fail("expected ')'");
      return e;
    }
    const char ch = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      double value = 0;
      const auto* begin = s_.data() + pos_;
      const auto res = std::from_chars(begin, s_.data() + s_.size(), value);
      if (res.ec != std::errc()) fail("malformed number");
      pos_ += static_cast<std::size_t>(res.ptr - begin);
      return make(Kind::Const, nullptr, nullptr, value);
    }
    std::size_t end = pos_;
    while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) ++end;
    const std::string_view word = s_.substr(pos_, end - pos_);
    if (word.empty()) fail("unexpected '" + std::string(1, ch) + "'");
    pos_ = end;
    if (word == "t") return make(Kind::Var);
    if (word == "sin") return call(Kind::Sin);
    if (word == "cos") return call(Kind::Cos);
    if (word == "tanh") return call(Kind::Tanh);
    fail("unknown identifier '" + std::string(word) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::pair<double, double> eval_node(const Expression::Node& n, double t) {
  switch (n.kind) {
    case Kind::Const: return {n.value, 0.0};
    case Kind::Var: return {t, 1.0};
    case Kind::Add: {
      const auto a = eval_node(*n.lhs, t), b = eval_node(*n.rhs, t);
      return {a.first + b.first, a.second + b.second};
    }
    case Kind::Sub: {
      const auto a = eval_node(*n.lhs, t), b = eval_node(*n.rhs, t);
      return {a.first - b.first, a.second - b.second};
    }
    case Kind::Mul: {
      const auto a = eval_node(*n.lhs, t), b = eval_node(*n.rhs, t);
      return {a.first * b.first, a.second * b.first + a.first * b.second};
    }
    case Kind::Neg: {
      const auto a = eval_node(*n.lhs, t);
      return {-a.first, -a.second};
    }
    case Kind::Sin: {
      const auto a = eval_node(*n.lhs, t);
      return {std::sin(a.first), std::cos(a.first) * a.second};
    }
    case Kind::Cos: {
      const auto a = eval_node(*n.lhs, t);
      return {std::cos(a.first), -std::sin(a.first) * a.second};
    }
    case Kind::Tanh: {
      const auto a = eval_node(*n.lhs, t);
      const double th = std::tanh(a.first);
      return {th, (1 - th * th) * a.second};
    }
  }
  return {0.0, 0.0};
}

}  // namespace

Expression::Expression() : root_(make(Kind::Const)), text_("0") {}

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.root_ = Parser(text).parse_all();
  e.text_ = std::string(text);
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  e.root_ = make(Kind::Const, nullptr, nullptr, value);
  e.text_ = format_double(value);
  return e;
}

double Expression::eval(double t) const { return eval_node(*root_, t).first; }

std::pair<double, double> Expression::eval_with_derivative(double t) const { return eval_node(*root_, t); }

}  // namespace tvopt::harness
