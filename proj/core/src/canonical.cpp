#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "smcsr/expr.hpp"

namespace smcsr {

namespace {

// Scratch tree used during canonicalization; easier to splice and sort than
// the flat node array.
struct CT {
  Op op;
  std::vector<std::unique_ptr<CT>> kids;
  int var = 0;
  double lit = 0.0;
  double param_value = 0.0;  // hint carried through for Const nodes
};

std::unique_ptr<CT> to_ct(const Expression& e, int idx) {
  const Node& n = e.nodes[idx];
  auto t = std::make_unique<CT>();
  t->op = n.op;
  switch (n.op) {
    case Op::Var: t->var = n.index; break;
    case Op::Lit: t->lit = n.value; break;
    case Op::Const: t->param_value = e.params[n.index]; break;
    default:
      t->kids.push_back(to_ct(e, n.a));
      if (n.b >= 0) t->kids.push_back(to_ct(e, n.b));
  }
  return t;
}

bool is_lit(const CT& t, double v) { return t.op == Op::Lit && t.lit == v; }

double fold_binary(Op op, double a, double b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return std::pow(a, b);
    default: return std::nan("");
  }
}

double fold_unary(Op op, double a) {
  switch (op) {
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Log: return std::log(a);
    case Op::Sqrt: return std::sqrt(a);
    default: return std::nan("");
  }
}

int rank(Op op) {
  switch (op) {
    case Op::Var: return 1;
    case Op::Const: return 2;
    case Op::Lit: return 3;
    default: return 0;  // operators sort first
  }
}

// Total order on canonical subtrees. Constants compare as interchangeable
// placeholders (ties), literals by value, variables by index, operators by
// op id then children lexicographically.
int cmp(const CT& a, const CT& b) {
  if (rank(a.op) != rank(b.op)) return rank(a.op) < rank(b.op) ? -1 : 1;
  switch (a.op) {
    case Op::Var: return (a.var < b.var) ? -1 : (a.var > b.var) ? 1 : 0;
    case Op::Const: return 0;
    case Op::Lit: return (a.lit < b.lit) ? -1 : (a.lit > b.lit) ? 1 : 0;
    default: break;
  }
  if (a.op != b.op) return a.op < b.op ? -1 : 1;
  size_t n = std::min(a.kids.size(), b.kids.size());
  for (size_t i = 0; i < n; ++i) {
    int c = cmp(*a.kids[i], *b.kids[i]);
    if (c != 0) return c;
  }
  if (a.kids.size() != b.kids.size()) return a.kids.size() < b.kids.size() ? -1 : 1;
  return 0;
}

std::unique_ptr<CT> simplify(std::unique_ptr<CT> t);

// Collect operands of a same-op associative chain (Add or Mul), already
// simplified bottom-up.
void flatten(std::unique_ptr<CT> t, Op op, std::vector<std::unique_ptr<CT>>& out) {
  if (t->op == op) {
    for (auto& k : t->kids) flatten(std::move(k), op, out);
  } else {
    out.push_back(std::move(t));
  }
}

std::unique_ptr<CT> make_lit_ct(double v) {
  auto t = std::make_unique<CT>();
  t->op = Op::Lit;
  t->lit = v;
  return t;
}

std::unique_ptr<CT> simplify(std::unique_ptr<CT> t) {
  if (arity(t->op) == 0) return t;
  for (auto& k : t->kids) k = simplify(std::move(k));
  if (arity(t->op) == 1) {
    if (t->kids[0]->op == Op::Lit) {
      double v = fold_unary(t->op, t->kids[0]->lit);
      if (std::isfinite(v)) return make_lit_ct(v);
    }
    return t;
  }
  // binary
  if (t->op == Op::Add || t->op == Op::Mul) {
    Op op = t->op;
    std::vector<std::unique_ptr<CT>> operands;
    for (auto& k : t->kids) flatten(std::move(k), op, operands);
    const double identity = (op == Op::Add) ? 0.0 : 1.0;
    double folded = identity;
    std::vector<std::unique_ptr<CT>> kept;
    for (auto& o : operands) {
      if (o->op == Op::Lit) {
        folded = (op == Op::Add) ? folded + o->lit : folded * o->lit;
      } else {
        kept.push_back(std::move(o));
      }
    }
    if (folded != identity || kept.empty()) kept.push_back(make_lit_ct(folded));
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return cmp(*a, *b) < 0; });
    if (kept.size() == 1) return std::move(kept[0]);
    // rebuild left-deep in sorted order
    auto acc = std::move(kept[0]);
    for (size_t i = 1; i < kept.size(); ++i) {
      auto node = std::make_unique<CT>();
      node->op = op;
      node->kids.push_back(std::move(acc));
      node->kids.push_back(std::move(kept[i]));
      acc = std::move(node);
    }
    return acc;
  }
  CT& a = *t->kids[0];
  CT& b = *t->kids[1];
  if (a.op == Op::Lit && b.op == Op::Lit) {
    double v = fold_binary(t->op, a.lit, b.lit);
    if (std::isfinite(v)) return make_lit_ct(v);
  }
  if (t->op == Op::Sub && is_lit(b, 0.0)) return std::move(t->kids[0]);
  if (t->op == Op::Div && is_lit(b, 1.0)) return std::move(t->kids[0]);
  if (t->op == Op::Pow && is_lit(b, 1.0)) return std::move(t->kids[0]);
  return t;
}

int linearize(const CT& t, Expression& out) {
  Node n;
  n.op = t.op;
  switch (t.op) {
    case Op::Var: n.index = t.var; break;
    case Op::Lit: n.value = t.lit; break;
    case Op::Const:
      n.index = static_cast<int>(out.params.size());
      out.params.push_back(t.param_value);
      break;
    default:
      n.a = linearize(*t.kids[0], out);
      if (t.kids.size() > 1) n.b = linearize(*t.kids[1], out);
  }
  return add_node(out, n);
}

void serialize_key(const CT& t, std::ostringstream& os) {
  switch (t.op) {
    case Op::Var: os << 'x' << t.var; break;
    case Op::Const: os << 'c'; break;
    case Op::Lit: {
      os.precision(17);
      os << t.lit;
      break;
    }
    default:
      os << op_name(t.op) << '(';
      for (size_t i = 0; i < t.kids.size(); ++i) {
        if (i) os << ',';
        serialize_key(*t.kids[i], os);
      }
      os << ')';
  }
}

}  // namespace

Expression canonicalize(const Expression& e) {
  auto t = simplify(to_ct(e, e.root));
  Expression out;
  out.root = linearize(*t, out);
  return out;
}

std::string structural_key(const Expression& e) {
  auto t = simplify(to_ct(e, e.root));
  std::ostringstream os;
  serialize_key(*t, os);
  return os.str();
}

bool structural_equal(const Expression& a, const Expression& b) {
  return structural_key(a) == structural_key(b);
}

int complexity(const Expression& e) {
  return canonicalize(e).num_nodes();
}

}  // namespace smcsr
