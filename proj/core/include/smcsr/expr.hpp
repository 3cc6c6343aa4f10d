#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smcsr/rng.hpp"

namespace smcsr {

enum class Op : std::uint8_t {
  // binary
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  // unary
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  // terminals
  Var,    // independent variable x_i
  Const,  // fitted constant, indexes a slot of Expression::params
  Lit     // fixed numeric literal (never optimized)
};

inline int arity(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Pow:
      return 2;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
      return 1;
    default:
      return 0;
  }
}

const char* op_name(Op op);
bool op_from_name(const std::string& name, Op& out);

struct Node {
  Op op = Op::Lit;
  int a = -1;          // first child index
  int b = -1;          // second child index
  int index = 0;       // variable index (Var) or parameter slot (Const)
  double value = 0.0;  // literal value (Lit)
};

// A symbolic expression stored as a flat node array rooted at `root`.
// Constant nodes reference distinct slots of `params`; the stored values act
// as initialization hints for the constant optimizer, not as fitted results.
// Expressions are treated as immutable once built.
struct Expression {
  std::vector<Node> nodes;
  int root = 0;
  std::vector<double> params;

  int num_params() const { return static_cast<int>(params.size()); }
  int num_nodes() const { return static_cast<int>(nodes.size()); }
  bool empty() const { return nodes.empty(); }
};

struct expr_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Leaf/operator constructors (append node, return its index).
int add_node(Expression& e, Node n);
Expression make_var(int index);
Expression make_const(double init_value);
Expression make_lit(double value);

// Checks the structural invariants (acyclic, arities, slot bijection,
// variable bounds). Returns an empty string when valid, else a diagnostic.
std::string validate(const Expression& e, int n_features = -1);

// Highest variable index present plus one (0 when no variables).
int min_features(const Expression& e);

// Evaluates the expression at every row of X using e.params. Non-finite
// results propagate as non-finite entries. Throws expr_error when X has too
// few columns for the variables present.
Eigen::VectorXd evaluate(const Expression& e, const Eigen::MatrixXd& X);
Eigen::VectorXd evaluate(const Expression& e, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& theta);

// Value plus analytic Jacobian d yhat / d theta (forward mode).
void evaluate_with_gradient(const Expression& e, const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& theta, Eigen::VectorXd& value,
                            Eigen::MatrixXd& jacobian);

struct GenerationConfig {
  std::vector<Op> operator_set{Op::Add, Op::Sub, Op::Mul};
  int max_nodes = 24;
  int max_depth = 6;
  double terminal_probability = 0.3;
  double constant_probability = 0.4;
};

// Grow-style random expression with depth-dependent terminal probability.
Expression generate_random(const GenerationConfig& config, int n_features, Rng& rng);

// Semantics-preserving canonical form: commutative operands sorted under a
// total node ordering, literal-only subtrees folded, associative chains
// flattened and rebuilt left-deep, additive/multiplicative identities
// removed, constant slots renumbered in preorder. Idempotent.
Expression canonicalize(const Expression& e);

// Serialization of the canonical form with constants as positional
// placeholders; equal keys define structural equality.
std::string structural_key(const Expression& e);

bool structural_equal(const Expression& a, const Expression& b);

// Node count of the canonical form.
int complexity(const Expression& e);

// Deep copy of the subtree rooted at `node` in `src`, appended to `dst`.
// Constant slots are re-slotted onto fresh `dst.params` entries carrying the
// source hint values. Returns the new root index within dst.
int copy_subtree(const Expression& src, int node, Expression& dst);

// Indices of nodes reachable from the root, children before parents.
std::vector<int> topo_order(const Expression& e);

}  // namespace smcsr
