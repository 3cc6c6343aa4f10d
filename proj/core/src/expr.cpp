#include "smcsr/expr.hpp"

#include <algorithm>
#include <cmath>

namespace smcsr {

const char* op_name(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Var: return "var";
    case Op::Const: return "const";
    case Op::Lit: return "lit";
  }
  return "?";
}

bool op_from_name(const std::string& name, Op& out) {
  static const std::pair<const char*, Op> table[] = {
      {"+", Op::Add},     {"-", Op::Sub},   {"*", Op::Mul},   {"/", Op::Div},
      {"^", Op::Pow},     {"sin", Op::Sin}, {"cos", Op::Cos}, {"exp", Op::Exp},
      {"log", Op::Log},   {"sqrt", Op::Sqrt},
      {"add", Op::Add},   {"sub", Op::Sub}, {"mul", Op::Mul}, {"div", Op::Div},
      {"pow", Op::Pow}};
  for (const auto& [n, op] : table) {
    if (name == n) {
      out = op;
      return true;
    }
  }
  return false;
}

int add_node(Expression& e, Node n) {
  e.nodes.push_back(n);
  return static_cast<int>(e.nodes.size()) - 1;
}

Expression make_var(int index) {
  Expression e;
  e.root = add_node(e, Node{Op::Var, -1, -1, index, 0.0});
  return e;
}

Expression make_const(double init_value) {
  Expression e;
  e.params.push_back(init_value);
  e.root = add_node(e, Node{Op::Const, -1, -1, 0, 0.0});
  return e;
}

Expression make_lit(double value) {
  Expression e;
  e.root = add_node(e, Node{Op::Lit, -1, -1, 0, value});
  return e;
}

std::vector<int> topo_order(const Expression& e) {
  std::vector<int> order;
  order.reserve(e.nodes.size());
  std::vector<char> seen(e.nodes.size(), 0);
  // Iterative post-order; `stage` 0 = expand, 1 = emit.
  std::vector<std::pair<int, int>> stack;
  stack.emplace_back(e.root, 0);
  while (!stack.empty()) {
    auto [idx, stage] = stack.back();
    stack.pop_back();
    if (idx < 0 || idx >= static_cast<int>(e.nodes.size())) throw expr_error("node index out of range");
    if (stage == 1) {
      order.push_back(idx);
      continue;
    }
    if (seen[idx]) continue;
    seen[idx] = 1;
    stack.emplace_back(idx, 1);
    const Node& n = e.nodes[idx];
    if (n.a >= 0) stack.emplace_back(n.a, 0);
    if (n.b >= 0) stack.emplace_back(n.b, 0);
  }
  return order;
}

int min_features(const Expression& e) {
  int mx = 0;
  for (int idx : topo_order(e)) {
    const Node& n = e.nodes[idx];
    if (n.op == Op::Var) mx = std::max(mx, n.index + 1);
  }
  return mx;
}

std::string validate(const Expression& e, int n_features) {
  if (e.nodes.empty()) return "empty expression";
  if (e.root < 0 || e.root >= static_cast<int>(e.nodes.size())) return "root out of range";
  // Cycle detection via DFS colors.
  std::vector<int> color(e.nodes.size(), 0);
  {
    // recursive check with explicit stack
    std::vector<std::pair<int, int>> st;
    st.emplace_back(e.root, 0);
    while (!st.empty()) {
      auto& [idx, child] = st.back();
      if (idx < 0 || idx >= static_cast<int>(e.nodes.size())) return "child index out of range";
      if (child == 0) {
        if (color[idx] == 1) return "cycle detected";
        if (color[idx] == 2) {
          st.pop_back();
          continue;
        }
        color[idx] = 1;
      }
      const Node& n = e.nodes[idx];
      int want = arity(n.op);
      if ((want >= 1) != (n.a >= 0)) return "arity mismatch (first child)";
      if ((want >= 2) != (n.b >= 0)) return "arity mismatch (second child)";
      if (child < want) {
        int c = (child == 0) ? n.a : n.b;
        ++child;
        st.emplace_back(c, 0);
      } else {
        color[idx] = 2;
        st.pop_back();
      }
    }
  }
  std::vector<int> slot_count(e.params.size(), 0);
  int n_const = 0;
  for (int idx : topo_order(e)) {
    const Node& n = e.nodes[idx];
    if (n.op == Op::Const) {
      ++n_const;
      if (n.index < 0 || n.index >= static_cast<int>(e.params.size())) return "constant slot out of range";
      if (++slot_count[n.index] > 1) return "constant slot shared by two nodes";
    }
    if (n.op == Op::Var) {
      if (n.index < 0) return "negative variable index";
      if (n_features >= 0 && n.index >= n_features) return "variable index out of bounds";
    }
  }
  if (n_const != static_cast<int>(e.params.size())) return "param count differs from constant node count";
  return "";
}

namespace {

inline Eigen::ArrayXd apply_binary(Op op, const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) {
  switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: return Eigen::pow(a, b);
    default: throw expr_error("not a binary op");
  }
}

inline Eigen::ArrayXd apply_unary(Op op, const Eigen::ArrayXd& a) {
  switch (op) {
    case Op::Sin: return Eigen::sin(a);
    case Op::Cos: return Eigen::cos(a);
    case Op::Exp: return Eigen::exp(a);
    case Op::Log: return Eigen::log(a);
    case Op::Sqrt: return Eigen::sqrt(a);
    default: throw expr_error("not a unary op");
  }
}

}  // namespace

Eigen::VectorXd evaluate(const Expression& e, const Eigen::MatrixXd& X) {
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(e.params.data(), e.params.size());
  return evaluate(e, X, theta);
}

Eigen::VectorXd evaluate(const Expression& e, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& theta) {
  if (min_features(e) > X.cols()) throw expr_error("input matrix has too few columns for expression variables");
  if (theta.size() != e.num_params()) throw expr_error("theta size differs from expression parameter count");
  const Eigen::Index n = X.rows();
  std::vector<Eigen::ArrayXd> val(e.nodes.size());
  for (int idx : topo_order(e)) {
    const Node& nd = e.nodes[idx];
    switch (nd.op) {
      case Op::Var: val[idx] = X.col(nd.index).array(); break;
      case Op::Const: val[idx] = Eigen::ArrayXd::Constant(n, theta[nd.index]); break;
      case Op::Lit: val[idx] = Eigen::ArrayXd::Constant(n, nd.value); break;
      default:
        if (arity(nd.op) == 1)
          val[idx] = apply_unary(nd.op, val[nd.a]);
        else
          val[idx] = apply_binary(nd.op, val[nd.a], val[nd.b]);
    }
  }
  return val[e.root].matrix();
}

void evaluate_with_gradient(const Expression& e, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& theta, Eigen::VectorXd& value,
                            Eigen::MatrixXd& jacobian) {
  if (min_features(e) > X.cols()) throw expr_error("input matrix has too few columns for expression variables");
  if (theta.size() != e.num_params()) throw expr_error("theta size differs from expression parameter count");
  const Eigen::Index n = X.rows();
  const Eigen::Index k = theta.size();
  std::vector<Eigen::ArrayXd> val(e.nodes.size());
  // Jacobians are allocated only for nodes whose subtree contains a constant.
  std::vector<Eigen::ArrayXXd> jac(e.nodes.size());
  std::vector<char> dep(e.nodes.size(), 0);
  auto zero_jac = [&]() { return Eigen::ArrayXXd::Zero(n, k); };
  for (int idx : topo_order(e)) {
    const Node& nd = e.nodes[idx];
    switch (nd.op) {
      case Op::Var: val[idx] = X.col(nd.index).array(); break;
      case Op::Const:
        val[idx] = Eigen::ArrayXd::Constant(n, theta[nd.index]);
        jac[idx] = zero_jac();
        jac[idx].col(nd.index).setOnes();
        dep[idx] = 1;
        break;
      case Op::Lit: val[idx] = Eigen::ArrayXd::Constant(n, nd.value); break;
      case Op::Sin:
      case Op::Cos:
      case Op::Exp:
      case Op::Log:
      case Op::Sqrt: {
        const auto& a = val[nd.a];
        val[idx] = apply_unary(nd.op, a);
        if (dep[nd.a]) {
          Eigen::ArrayXd d;
          switch (nd.op) {
            case Op::Sin: d = Eigen::cos(a); break;
            case Op::Cos: d = -Eigen::sin(a); break;
            case Op::Exp: d = val[idx]; break;
            case Op::Log: d = a.inverse(); break;
            default: d = 0.5 * val[idx].inverse(); break;  // sqrt
          }
          jac[idx] = jac[nd.a].colwise() * d;
          dep[idx] = 1;
        }
        break;
      }
      default: {  // binary
        const auto& a = val[nd.a];
        const auto& b = val[nd.b];
        val[idx] = apply_binary(nd.op, a, b);
        bool da = dep[nd.a], db = dep[nd.b];
        if (!da && !db) break;
        Eigen::ArrayXXd ja = da ? jac[nd.a] : zero_jac();
        Eigen::ArrayXXd jb = db ? jac[nd.b] : zero_jac();
        switch (nd.op) {
          case Op::Add: jac[idx] = ja + jb; break;
          case Op::Sub: jac[idx] = ja - jb; break;
          case Op::Mul: jac[idx] = (ja.colwise() * b) + (jb.colwise() * a); break;
          case Op::Div: {
            Eigen::ArrayXd inv_b = b.inverse();
            jac[idx] = (ja.colwise() * inv_b) - (jb.colwise() * (val[idx] * inv_b));
            break;
          }
          case Op::Pow: {
            // d(a^b) = a^b * (b' ln a + b a'/a)
            jac[idx] = zero_jac();
            if (da) jac[idx] += ja.colwise() * Eigen::ArrayXd(val[idx] * b / a);
            if (db) jac[idx] += jb.colwise() * Eigen::ArrayXd(val[idx] * Eigen::log(a));
            break;
          }
          default: throw expr_error("unexpected op");
        }
        dep[idx] = 1;
      }
    }
  }
  value = val[e.root].matrix();
  if (dep[e.root])
    jacobian = jac[e.root].matrix();
  else
    jacobian = Eigen::MatrixXd::Zero(n, k);
}

int copy_subtree(const Expression& src, int node, Expression& dst) {
  const Node& n = src.nodes[node];
  Node out = n;
  if (n.a >= 0) out.a = copy_subtree(src, n.a, dst);
  if (n.b >= 0) out.b = copy_subtree(src, n.b, dst);
  if (n.op == Op::Const) {
    out.index = static_cast<int>(dst.params.size());
    dst.params.push_back(src.params[n.index]);
  }
  return add_node(dst, out);
}

namespace {

// Grow one subtree into `e`; returns root index and consumes node budget.
int grow(Expression& e, const GenerationConfig& cfg, int n_features, Rng& rng, int depth,
         int& budget) {
  double p_term = cfg.terminal_probability +
                  (1.0 - cfg.terminal_probability) * static_cast<double>(depth) / std::max(1, cfg.max_depth);
  bool terminal = depth >= cfg.max_depth || budget < 3 || rng.uniform() < p_term;
  if (terminal) {
    --budget;
    if (rng.uniform() < cfg.constant_probability) {
      int slot = static_cast<int>(e.params.size());
      e.params.push_back(rng.normal());
      return add_node(e, Node{Op::Const, -1, -1, slot, 0.0});
    }
    int v = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_features)));
    return add_node(e, Node{Op::Var, -1, -1, v, 0.0});
  }
  Op op = cfg.operator_set[rng.uniform_index(cfg.operator_set.size())];
  --budget;
  if (arity(op) == 1) {
    int a = grow(e, cfg, n_features, rng, depth + 1, budget);
    return add_node(e, Node{op, a, -1, 0, 0.0});
  }
  int a_budget = budget - 1;  // reserve one node so the second child cannot starve
  int a = grow(e, cfg, n_features, rng, depth + 1, a_budget);
  budget = a_budget + 1;
  int b = grow(e, cfg, n_features, rng, depth + 1, budget);
  return add_node(e, Node{op, a, b, 0, 0.0});
}

}  // namespace

Expression generate_random(const GenerationConfig& cfg, int n_features, Rng& rng) {
  if (n_features < 1) throw expr_error("n_features must be >= 1");
  Expression e;
  int budget = std::max(1, cfg.max_nodes);
  e.root = grow(e, cfg, n_features, rng, 0, budget);
  return e;
}

}  // namespace smcsr
