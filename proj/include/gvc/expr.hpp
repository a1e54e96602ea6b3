#pragma once

#include <memory>
#include <string>

#include "gvc/core.hpp"

namespace gvc {

// Values the expression variables draw from: indexed families q1.., y1..,
// p1.., u1.. and the scalar t. Families a given expression does not mention
// may be left empty.
struct EvalContext {
  Vec q;
  Vec y;
  Vec p;
  Vec u;
  double t = 0;
};

namespace detail {
struct ExprNode;
}

// Parsed arithmetic expression. Grammar, loosest to tightest binding:
// + − (left), * / (left), unary −, ^ (right-associative, binding above unary
// minus so -q1^2 = -(q1^2)), then atoms: numeric literals, variables
// (q1..qn, y1..ym, p1..pm, u1..uk, t), parentheses, and one-argument calls
// sin, cos, tan, exp, log, sqrt, abs. print() emits text that reparses to the
// identical tree.
class Expr {
 public:
  Expr() = default;

  double eval(const EvalContext& ctx) const;
  std::string print() const;

  // Highest 1-based index of the family ('q','y','p','u') used; 0 if unused.
  int max_index(char family) const;
  bool uses_time() const;

 private:
  friend Expr parse_expr(const std::string& text);
  explicit Expr(std::shared_ptr<const detail::ExprNode> root) : root_(std::move(root)) {}
  std::shared_ptr<const detail::ExprNode> root_;
};

// Throws ParseError (position-annotated) on malformed text, unknown
// identifiers, or misused function names.
Expr parse_expr(const std::string& text);

// Binds an expression over two variable families to a ScalarField block pair:
// family_a indices run over the first block (declared size dim_a), family_b
// over the second. Throws SpecError when the expression mentions any other
// family, the time variable, or an index beyond the declared dimension.
ScalarField field_from_expr(const std::string& text, int dim_a, int dim_b,
                            char family_a, char family_b);

}  // namespace gvc
