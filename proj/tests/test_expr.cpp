#include <doctest.h>

#include <cmath>

#include "oracle.hpp"
#include "smcsr/expr.hpp"
#include "smcsr/parse.hpp"
#include "smcsr/rng.hpp"

using namespace smcsr;

namespace {

GenerationConfig full_ops() {
  GenerationConfig cfg;
  cfg.operator_set = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow,
                      Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt};
  return cfg;
}

}  // namespace

TEST_CASE("evaluate matches the recursive scalar oracle on random expressions") {
  Rng rng(101);
  GenerationConfig cfg = full_ops();
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Expression e = generate_random(cfg, 3, rng);
    REQUIRE(validate(e, 3).empty());
    Eigen::MatrixXd X(4, 3);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-2.0, 2.0);
    Eigen::VectorXd got = evaluate(e, X);
    for (int r = 0; r < 4; ++r) {
      std::vector<double> x{X(r, 0), X(r, 1), X(r, 2)};
      double want = oracle::eval_row(e, x);
      if (std::isfinite(want)) {
        REQUIRE(got[r] == doctest::Approx(want).epsilon(1e-12));
        ++checked;
      } else {
        REQUIRE_FALSE(std::isfinite(got[r]));
      }
    }
  }
  CHECK(checked > 500);  // the vast majority of rows are finite
}

TEST_CASE("evaluate with an explicit theta overrides the stored hints") {
  Expression e = parse("c0 * x0 + c1");
  e.params = {2.0, 3.0};
  Eigen::MatrixXd X(2, 1);
  X << 1.0, -1.0;
  Eigen::VectorXd at_hints = evaluate(e, X);
  CHECK(at_hints[0] == doctest::Approx(5.0));
  Eigen::VectorXd theta(2);
  theta << -1.0, 0.5;
  Eigen::VectorXd at_theta = evaluate(e, X, theta);
  CHECK(at_theta[0] == doctest::Approx(-0.5));
  CHECK(at_theta[1] == doctest::Approx(1.5));
}

TEST_CASE("analytic parameter Jacobian matches central finite differences") {
  // 100 random (expression, theta, X) triples over the full operator set
  Rng rng(2024);
  GenerationConfig cfg = full_ops();
  int accepted = 0;
  while (accepted < 100) {
    Expression e = generate_random(cfg, 2, rng);
    if (e.num_params() == 0) continue;
    Eigen::MatrixXd X(3, 2);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(0.2, 2.0);
    Eigen::VectorXd theta(e.num_params());
    for (int k = 0; k < theta.size(); ++k) theta[k] = rng.uniform(0.3, 2.0);

    Eigen::VectorXd value;
    Eigen::MatrixXd jac;
    evaluate_with_gradient(e, X, theta, value, jac);
    if (!value.allFinite() || !jac.allFinite()) continue;

    bool well_conditioned = true;
    std::vector<double> tv(theta.data(), theta.data() + theta.size());
    for (int r = 0; r < 3 && well_conditioned; ++r) {
      std::vector<double> x{X(r, 0), X(r, 1)};
      std::vector<double> fd = oracle::fd_gradient(e, x, tv);
      for (int k = 0; k < theta.size(); ++k) {
        if (!std::isfinite(fd[k]) || std::abs(jac(r, k)) > 1e6) {
          well_conditioned = false;  // resample: fd itself is unreliable here
          break;
        }
        double denom = std::max({std::abs(jac(r, k)), std::abs(fd[k]), 1e-6});
        CHECK(std::abs(jac(r, k) - fd[k]) / denom < 1e-5);
      }
    }
    if (well_conditioned) ++accepted;
  }
  CHECK(accepted == 100);
}

TEST_CASE("validate rejects malformed trees") {
  Expression e;
  CHECK_FALSE(validate(e).empty());  // empty

  e = parse("x0 + x1");
  CHECK(validate(e, 2).empty());
  CHECK_FALSE(validate(e, 1).empty());  // too few features

  Expression bad = e;
  bad.nodes[bad.root].b = 99;  // child out of range
  CHECK_FALSE(validate(bad).empty());

  Expression dup = parse("c0 * x0");
  dup.params.push_back(7.0);  // slot without a node
  CHECK_FALSE(validate(dup).empty());
}

TEST_CASE("min_features reports the highest referenced variable") {
  CHECK(min_features(parse("1 + 2")) == 0);
  CHECK(min_features(parse("x0 * x3")) == 4);
}

TEST_CASE("generate_random respects node and depth budgets") {
  Rng rng(7);
  GenerationConfig cfg = full_ops();
  cfg.max_nodes = 15;
  cfg.max_depth = 4;
  for (int i = 0; i < 500; ++i) {
    Expression e = generate_random(cfg, 2, rng);
    REQUIRE(validate(e, 2).empty());
    CHECK(e.num_nodes() <= cfg.max_nodes);
    // depth via the oracle-side recursion
    std::vector<int> depth(e.nodes.size(), 0);
    for (int n : topo_order(e)) {
      const Node& node = e.nodes[n];
      if (arity(node.op) >= 1) depth[n] = depth[node.a] + 1;
      if (arity(node.op) == 2) depth[n] = std::max(depth[n], depth[node.b] + 1);
    }
    CHECK(depth[e.root] <= cfg.max_depth);
  }
}

TEST_CASE("copy_subtree re-slots constants with their hint values") {
  Expression src = parse("c0 * x0 + c1");
  src.params = {4.0, -2.0};
  Expression dst = parse("c0 + x1");
  dst.params = {9.0};
  int mul = -1;
  for (int i = 0; i < src.num_nodes(); ++i)
    if (src.nodes[i].op == Op::Mul) mul = i;
  REQUIRE(mul >= 0);
  int new_root = copy_subtree(src, mul, dst);
  CHECK(new_root >= 0);
  CHECK(dst.num_params() == 2);
  CHECK(dst.params[1] == doctest::Approx(4.0));
  // Compacting into a fresh expression restores the slot bijection.
  Expression grafted;
  grafted.root = copy_subtree(src, mul, grafted);
  CHECK(validate(grafted, 2).empty());
  CHECK(grafted.num_params() == 1);
  CHECK(grafted.params[0] == doctest::Approx(4.0));
  std::vector<double> x{3.0, 0.0};
  CHECK(oracle::eval_row(grafted, x) == doctest::Approx(12.0));
}

TEST_CASE("topo_order lists children before parents") {
  Rng rng(55);
  for (int i = 0; i < 50; ++i) {
    Expression e = generate_random(full_ops(), 2, rng);
    std::vector<int> order = topo_order(e);
    std::vector<int> pos(e.nodes.size(), -1);
    for (size_t k = 0; k < order.size(); ++k) pos[order[k]] = static_cast<int>(k);
    CHECK(order.back() == e.root);
    for (int n : order) {
      if (arity(e.nodes[n].op) >= 1) CHECK(pos[e.nodes[n].a] < pos[n]);
      if (arity(e.nodes[n].op) == 2) CHECK(pos[e.nodes[n].b] < pos[n]);
    }
  }
}

TEST_CASE("op names round trip") {
  for (Op op : {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow, Op::Sin, Op::Cos, Op::Exp, Op::Log,
                Op::Sqrt}) {
    Op back;
    REQUIRE(op_from_name(op_name(op), back));
    CHECK(back == op);
  }
  Op dummy;
  CHECK_FALSE(op_from_name("tan", dummy));
}
