#include "smcsr/parse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace smcsr {

namespace {

struct Parser {
  const std::string& s;
  size_t pos = 0;
  Expression out;
  std::map<int, int> const_slots;  // text index -> slot

  explicit Parser(const std::string& text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eof() {
    skip_ws();
    return pos >= s.size();
  }

  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) { throw parse_error(msg, static_cast<int>(pos)); }

  int expr() {
    int lhs = term();
    while (true) {
      char c = peek();
      if (c == '+' || c == '-') {
        ++pos;
        int rhs = term();
        lhs = add_node(out, Node{c == '+' ? Op::Add : Op::Sub, lhs, rhs, 0, 0.0});
      } else {
        return lhs;
      }
    }
  }

  int term() {
    int lhs = factor();
    while (true) {
      char c = peek();
      if (c == '*' || c == '/') {
        ++pos;
        int rhs = factor();
        lhs = add_node(out, Node{c == '*' ? Op::Mul : Op::Div, lhs, rhs, 0, 0.0});
      } else {
        return lhs;
      }
    }
  }

  int factor() {
    if (peek() == '-') {
      // Unary minus binds looser than '^': -2^2 reads as -(2^2).
      ++pos;
      int operand = factor();
      int zero = add_node(out, Node{Op::Lit, -1, -1, 0, 0.0});
      return add_node(out, Node{Op::Sub, zero, operand, 0, 0.0});
    }
    int base = primary();
    if (peek() == '^') {
      ++pos;
      int exp = factor();  // right associative
      return add_node(out, Node{Op::Pow, base, exp, 0, 0.0});
    }
    return base;
  }

  int primary() {
    char c = peek();
    if (c == '(') {
      ++pos;
      int inner = expr();
      if (peek() != ')') fail("expected ')'");
      ++pos;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    if (c == '\0') fail("unexpected end of input");
    fail(std::string("unexpected character '") + c + "'");
  }

  int number() {
    skip_ws();
    size_t start = pos;
    double v = 0.0;
    auto res = std::from_chars(s.data() + start, s.data() + s.size(), v);
    if (res.ec != std::errc()) fail("malformed number");
    pos = static_cast<size_t>(res.ptr - s.data());
    return add_node(out, Node{Op::Lit, -1, -1, 0, v});
  }

  int ident() {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
    std::string name = s.substr(start, pos - start);
    if ((name[0] == 'x' || name[0] == 'c') && name.size() > 1 &&
        std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
      int idx = std::stoi(name.substr(1));
      if (name[0] == 'x') return add_node(out, Node{Op::Var, -1, -1, idx, 0.0});
      auto [it, inserted] = const_slots.emplace(idx, static_cast<int>(out.params.size()));
      if (!inserted) {
        pos = start;
        fail("constant " + name + " used more than once");
      }
      out.params.push_back(1.0);
      return add_node(out, Node{Op::Const, -1, -1, it->second, 0.0});
    }
    Op op;
    if (op_from_name(name, op) && arity(op) == 1) {
      if (peek() != '(') fail("expected '(' after function name");
      ++pos;
      int inner = expr();
      if (peek() != ')') fail("expected ')'");
      ++pos;
      return add_node(out, Node{op, inner, -1, 0, 0.0});
    }
    pos = start;
    fail("unknown symbol '" + name + "'");
  }
};

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Pow: return 3;
    default: return 4;
  }
}

void format_node(const Expression& e, int idx, std::ostringstream& os);

void format_child(const Expression& e, int child, int parent_prec, bool right_operand,
                  std::ostringstream& os) {
  const Node& c = e.nodes[child];
  bool paren = false;
  if (arity(c.op) == 2) {
    int cp = precedence(c.op);
    // '^' is right associative in the grammar, so an equal-precedence left
    // operand of '^' also needs parentheses.
    paren = cp < parent_prec || (cp == parent_prec && (right_operand || parent_prec == 3));
  } else if (c.op == Op::Lit && c.value < 0) {
    paren = true;
  }
  if (paren) os << '(';
  format_node(e, child, os);
  if (paren) os << ')';
}

void format_node(const Expression& e, int idx, std::ostringstream& os) {
  const Node& n = e.nodes[idx];
  switch (n.op) {
    case Op::Var: os << 'x' << n.index; return;
    case Op::Const: os << 'c' << n.index; return;
    case Op::Lit:
      os.precision(17);
      os << n.value;
      return;
    default: break;
  }
  if (arity(n.op) == 1) {
    os << op_name(n.op) << '(';
    format_node(e, n.a, os);
    os << ')';
    return;
  }
  int prec = precedence(n.op);
  format_child(e, n.a, prec, false, os);
  os << ' ' << op_name(n.op) << ' ';
  format_child(e, n.b, prec, true, os);
}

}  // namespace

Expression parse(const std::string& text) {
  Parser p(text);
  int root = p.expr();
  if (!p.eof()) p.fail("trailing input");
  p.out.root = root;
  return p.out;
}

std::string format(const Expression& e) {
  std::ostringstream os;
  format_node(e, e.root, os);
  return os.str();
}

}  // namespace smcsr
