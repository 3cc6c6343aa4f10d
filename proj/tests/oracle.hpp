// Independent reference implementations used as test oracles. These stay
// deliberately naive (recursive, scalar, double-checked formulas) so they
// share no code paths with the library.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "smcsr/expr.hpp"

namespace oracle {

// Scalar recursive evaluation of a single row.
inline double eval_node(const smcsr::Expression& e, int node, const std::vector<double>& x,
                        const std::vector<double>& theta) {
  const smcsr::Node& n = e.nodes[node];
  switch (n.op) {
    case smcsr::Op::Add: return eval_node(e, n.a, x, theta) + eval_node(e, n.b, x, theta);
    case smcsr::Op::Sub: return eval_node(e, n.a, x, theta) - eval_node(e, n.b, x, theta);
    case smcsr::Op::Mul: return eval_node(e, n.a, x, theta) * eval_node(e, n.b, x, theta);
    case smcsr::Op::Div: return eval_node(e, n.a, x, theta) / eval_node(e, n.b, x, theta);
    case smcsr::Op::Pow: return std::pow(eval_node(e, n.a, x, theta), eval_node(e, n.b, x, theta));
    case smcsr::Op::Sin: return std::sin(eval_node(e, n.a, x, theta));
    case smcsr::Op::Cos: return std::cos(eval_node(e, n.a, x, theta));
    case smcsr::Op::Exp: return std::exp(eval_node(e, n.a, x, theta));
    case smcsr::Op::Log: return std::log(eval_node(e, n.a, x, theta));
    case smcsr::Op::Sqrt: return std::sqrt(eval_node(e, n.a, x, theta));
    case smcsr::Op::Var: return x.at(n.index);
    case smcsr::Op::Const: return theta.at(n.index);
    case smcsr::Op::Lit: return n.value;
  }
  throw std::logic_error("bad op");
}

inline double eval_row(const smcsr::Expression& e, const std::vector<double>& x) {
  return eval_node(e, e.root, x, e.params);
}

inline double eval_row(const smcsr::Expression& e, const std::vector<double>& x,
                       const std::vector<double>& theta) {
  return eval_node(e, e.root, x, theta);
}

// Central finite-difference Jacobian d f(x; theta) / d theta.
inline std::vector<double> fd_gradient(const smcsr::Expression& e, const std::vector<double>& x,
                                       std::vector<double> theta, double h = 1e-6) {
  std::vector<double> g(theta.size());
  for (size_t k = 0; k < theta.size(); ++k) {
    double step = h * std::max(1.0, std::abs(theta[k]));
    double saved = theta[k];
    theta[k] = saved + step;
    double up = eval_node(e, e.root, x, theta);
    theta[k] = saved - step;
    double dn = eval_node(e, e.root, x, theta);
    theta[k] = saved;
    g[k] = (up - dn) / (2.0 * step);
  }
  return g;
}

}  // namespace oracle
