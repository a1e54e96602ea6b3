#include "gvc/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <utility>
#include <vector>

namespace gvc {
namespace detail {

enum class NodeKind { Constant, Variable, Time, Negate, Binary, Call };

struct ExprNode {
  NodeKind kind;
  double value = 0;       // Constant
  char family = 0;        // Variable: 'q','y','p','u'
  int index = 0;          // Variable: 0-based
  char op = 0;            // Binary: + - * / ^
  std::string func;       // Call
  std::shared_ptr<const ExprNode> lhs;  // Negate/Call operand, Binary left
  std::shared_ptr<const ExprNode> rhs;  // Binary right
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

NodePtr make_constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Constant;
  n->value = v;
  return n;
}

NodePtr make_variable(char family, int index) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Variable;
  n->family = family;
  n->index = index;
  return n;
}

NodePtr make_time() {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Time;
  return n;
}

NodePtr make_negate(NodePtr operand) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Negate;
  n->lhs = std::move(operand);
  return n;
}

NodePtr make_binary(char op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Binary;
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

NodePtr make_call(std::string func, NodePtr arg) {
  auto n = std::make_shared<ExprNode>();
  n->kind = NodeKind::Call;
  n->func = std::move(func);
  n->lhs = std::move(arg);
  return n;
}

bool known_function(const std::string& name) {
  return name == "sin" || name == "cos" || name == "tan" || name == "exp" ||
         name == "log" || name == "sqrt" || name == "abs";
}

double apply_function(const std::string& name, double x) {
  if (name == "sin") return std::sin(x);
  if (name == "cos") return std::cos(x);
  if (name == "tan") return std::tan(x);
  if (name == "exp") return std::exp(x);
  if (name == "log") return std::log(x);
  if (name == "sqrt") return std::sqrt(x);
  return std::abs(x);
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr parse() {
    NodePtr root = parse_sum();
    skip_space();
    if (pos_ != text_.size()) {
      fail("unexpected trailing text", pos_);
    }
    return root;
  }

 private:
  // sum := product (('+'|'-') product)*
  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    while (true) {
      skip_space();
      if (peek() == '+' || peek() == '-') {
        char op = text_[pos_++];
        lhs = make_binary(op, std::move(lhs), parse_product());
      } else {
        return lhs;
      }
    }
  }

  // product := unary (('*'|'/') unary)*
  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    while (true) {
      skip_space();
      if (peek() == '*' || peek() == '/') {
        char op = text_[pos_++];
        lhs = make_binary(op, std::move(lhs), parse_unary());
      } else {
        return lhs;
      }
    }
  }

  // unary := '-' unary | power
  NodePtr parse_unary() {
    skip_space();
    if (peek() == '-') {
      ++pos_;
      return make_negate(parse_unary());
    }
    return parse_power();
  }

  // power := atom ('^' unary)?   (right-associative; exponent admits a sign)
  NodePtr parse_power() {
    NodePtr base = parse_atom();
    skip_space();
    if (peek() == '^') {
      ++pos_;
      return make_binary('^', std::move(base), parse_unary());
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_space();
    std::size_t start = pos_;
    if (pos_ == text_.size()) {
      fail("unexpected end of expression", pos_);
    }
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      expect(')', start);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number(start);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return parse_identifier(start);
    }
    fail(std::string("unexpected character '") + c + "'", start);
  }

  NodePtr parse_number(std::size_t start) {
    const char* begin = text_.c_str() + start;
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin) {
      fail("malformed number", start);
    }
    pos_ = start + static_cast<std::size_t>(end - begin);
    return make_constant(value);
  }

  NodePtr parse_identifier(std::size_t start) {
    std::size_t end = start;
    while (end < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
      ++end;
    }
    std::string name = text_.substr(start, end - start);
    pos_ = end;
    if (name == "t") {
      return make_time();
    }
    if (known_function(name)) {
      skip_space();
      if (peek() != '(') {
        fail("function '" + name + "' requires an argument list", start);
      }
      ++pos_;
      NodePtr arg = parse_sum();
      skip_space();
      if (peek() == ',') {
        fail("function '" + name + "' takes exactly one argument", pos_);
      }
      expect(')', start);
      return make_call(name, std::move(arg));
    }
    if ((name[0] == 'q' || name[0] == 'y' || name[0] == 'p' || name[0] == 'u') &&
        name.size() > 1) {
      bool digits = true;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
          digits = false;
          break;
        }
      }
      if (digits) {
        long idx = std::strtol(name.c_str() + 1, nullptr, 10);
        if (idx < 1) {
          fail("variable index must be at least 1", start);
        }
        return make_variable(name[0], static_cast<int>(idx) - 1);
      }
    }
    fail("unknown identifier '" + name + "'", start);
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect(char c, std::size_t opener) {
    skip_space();
    if (peek() != c) {
      fail(std::string("expected '") + c + "' to match group opened at position " +
               std::to_string(opener),
           pos_);
    }
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what, std::size_t pos) const {
    throw ParseError(what, pos);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

// Binding strength used for minimal parenthesisation. Chosen so that a
// printed tree reparses to itself: left-associative operators re-group on the
// left, so the right operand of +,-,*,/ is wrapped whenever it sits at the
// same level.
enum Level { LevelSum = 1, LevelProduct = 2, LevelNegate = 3, LevelPower = 4, LevelAtom = 5 };

int node_level(const ExprNode& n) {
  switch (n.kind) {
    case NodeKind::Binary:
      if (n.op == '+' || n.op == '-') return LevelSum;
      if (n.op == '*' || n.op == '/') return LevelProduct;
      return LevelPower;
    case NodeKind::Negate:
      return LevelNegate;
    case NodeKind::Constant:
      return n.value < 0 || std::signbit(n.value) ? LevelNegate : LevelAtom;
    default:
      return LevelAtom;
  }
}

std::string print_constant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_node(const ExprNode& n, std::string& out);

void print_child(const ExprNode& child, int min_level, std::string& out) {
  if (node_level(child) < min_level) {
    out += '(';
    print_node(child, out);
    out += ')';
  } else {
    print_node(child, out);
  }
}

void print_node(const ExprNode& n, std::string& out) {
  switch (n.kind) {
    case NodeKind::Constant:
      out += print_constant(n.value);
      return;
    case NodeKind::Variable:
      out += n.family;
      out += std::to_string(n.index + 1);
      return;
    case NodeKind::Time:
      out += 't';
      return;
    case NodeKind::Negate:
      out += '-';
      print_child(*n.lhs, LevelNegate, out);
      return;
    case NodeKind::Call:
      out += n.func;
      out += '(';
      print_node(*n.lhs, out);
      out += ')';
      return;
    case NodeKind::Binary: {
      int level = node_level(n);
      if (n.op == '^') {
        // Base must be an atom; exponent may carry a sign but regrouping on
        // the right is harmless since ^ is right-associative.
        print_child(*n.lhs, LevelAtom, out);
        out += '^';
        print_child(*n.rhs, LevelNegate, out);
        return;
      }
      print_child(*n.lhs, level, out);
      out += ' ';
      out += n.op;
      out += ' ';
      print_child(*n.rhs, level + 1, out);
      return;
    }
  }
}

double eval_node(const ExprNode& n, const EvalContext& ctx) {
  switch (n.kind) {
    case NodeKind::Constant:
      return n.value;
    case NodeKind::Time:
      return ctx.t;
    case NodeKind::Variable: {
      const Vec* v = nullptr;
      switch (n.family) {
        case 'q': v = &ctx.q; break;
        case 'y': v = &ctx.y; break;
        case 'p': v = &ctx.p; break;
        default: v = &ctx.u; break;
      }
      if (n.index >= v->size()) {
        throw InvalidArgument(std::string("expression evaluation: variable ") + n.family +
                              std::to_string(n.index + 1) + " exceeds bound size " +
                              std::to_string(v->size()));
      }
      return (*v)(n.index);
    }
    case NodeKind::Negate:
      return -eval_node(*n.lhs, ctx);
    case NodeKind::Call:
      return apply_function(n.func, eval_node(*n.lhs, ctx));
    case NodeKind::Binary: {
      double a = eval_node(*n.lhs, ctx);
      double b = eval_node(*n.rhs, ctx);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/': return a / b;
        default: return std::pow(a, b);
      }
    }
  }
  return 0;  // unreachable
}

void scan_usage(const ExprNode& n, char family, int& max_index, bool& time_used) {
  if (n.kind == NodeKind::Time) {
    time_used = true;
  } else if (n.kind == NodeKind::Variable) {
    if (n.family == family && n.index + 1 > max_index) {
      max_index = n.index + 1;
    }
  }
  if (n.lhs) scan_usage(*n.lhs, family, max_index, time_used);
  if (n.rhs) scan_usage(*n.rhs, family, max_index, time_used);
}

}  // namespace
}  // namespace detail

double Expr::eval(const EvalContext& ctx) const {
  if (!root_) {
    throw InvalidArgument("eval: empty expression handle");
  }
  return detail::eval_node(*root_, ctx);
}

std::string Expr::print() const {
  if (!root_) {
    throw InvalidArgument("print: empty expression handle");
  }
  std::string out;
  detail::print_node(*root_, out);
  return out;
}

int Expr::max_index(char family) const {
  if (!root_) return 0;
  int max = 0;
  bool time_used = false;
  detail::scan_usage(*root_, family, max, time_used);
  return max;
}

bool Expr::uses_time() const {
  if (!root_) return false;
  int max = 0;
  bool time_used = false;
  detail::scan_usage(*root_, 'q', max, time_used);
  return time_used;
}

Expr parse_expr(const std::string& text) {
  detail::Parser parser(text);
  return Expr(parser.parse());
}

ScalarField field_from_expr(const std::string& text, int dim_a, int dim_b,
                            char family_a, char family_b) {
  if (family_a == family_b) {
    throw InvalidArgument("field_from_expr: variable families must differ");
  }
  Expr expr = parse_expr(text);
  if (expr.uses_time()) {
    throw SpecError("expression '" + text + "' references t; fields here are autonomous");
  }
  for (char family : {'q', 'y', 'p', 'u'}) {
    int used = expr.max_index(family);
    int allowed = family == family_a ? dim_a : (family == family_b ? dim_b : 0);
    if (used > allowed) {
      throw SpecError("expression '" + text + "' references " + std::string(1, family) +
                      std::to_string(used) + " but only " + std::to_string(allowed) +
                      " component(s) of '" + std::string(1, family) + "' are declared");
    }
  }
  ScalarField field(dim_a, dim_b, [expr, family_a, family_b](const Vec& a, const Vec& b) {
    EvalContext ctx;
    switch (family_a) {
      case 'q': ctx.q = a; break;
      case 'y': ctx.y = a; break;
      case 'p': ctx.p = a; break;
      default: ctx.u = a; break;
    }
    switch (family_b) {
      case 'q': ctx.q = b; break;
      case 'y': ctx.y = b; break;
      case 'p': ctx.p = b; break;
      default: ctx.u = b; break;
    }
    return expr.eval(ctx);
  });
  return field;
}

}  // namespace gvc
