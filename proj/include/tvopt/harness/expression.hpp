#pragma once

// Scalar expressions in t over the closed grammar
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '·') unary)*
//   unary   := '-' unary | primary
//   primary := number | 't' | ('sin' | 'cos' | 'tanh') '(' expr ')' | '(' expr ')'

#include <memory>
#include <string>
#include <string_view>
#include <utility>

namespace tvopt::harness {

class Expression {
 public:
  struct Node;

  Expression();
  /// Throws ConfigError on malformed input.
  static Expression parse(std::string_view text);
  static Expression constant(double value);

  double eval(double t) const;
  /// Value and exact derivative d/dt.
  std::pair<double, double> eval_with_derivative(double t) const;

  /// The source text; parse(text()) evaluates identically.
  const std::string& text() const { return text_; }

  friend bool operator==(const Expression& a, const Expression& b) { return a.text_ == b.text_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace tvopt::harness
