#include <doctest.h>

#include "oracle.hpp"
#include "smcsr/parse.hpp"
#include "smcsr/rng.hpp"

using namespace smcsr;

TEST_CASE("parse handles precedence and associativity") {
  CHECK(oracle::eval_row(parse("1 + 2 * 3"), {}) == doctest::Approx(7.0));
  CHECK(oracle::eval_row(parse("(1 + 2) * 3"), {}) == doctest::Approx(9.0));
  CHECK(oracle::eval_row(parse("8 - 3 - 2"), {}) == doctest::Approx(3.0));
  CHECK(oracle::eval_row(parse("12 / 3 / 2"), {}) == doctest::Approx(2.0));
  CHECK(oracle::eval_row(parse("2 ^ 3 ^ 2"), {}) == doctest::Approx(512.0));  // right assoc
  CHECK(oracle::eval_row(parse("(2 ^ 3) ^ 2"), {}) == doctest::Approx(64.0));
  CHECK(oracle::eval_row(parse("-2 ^ 2"), {}) == doctest::Approx(-4.0));
  CHECK(oracle::eval_row(parse("2 * -3"), {}) == doctest::Approx(-6.0));
}

TEST_CASE("functions, variables and constants parse") {
  Expression e = parse("sin(x0) + sqrt(x1) * c0 - log(exp(1))");
  e.params = {2.0};
  CHECK(oracle::eval_row(e, {0.0, 4.0}) == doctest::Approx(3.0));
  CHECK(e.num_params() == 1);
  CHECK(min_features(e) == 2);
}

TEST_CASE("constant tokens re-slot in appearance order with hint 1") {
  Expression e = parse("c3 * x0 + c1");
  REQUIRE(e.num_params() == 2);
  CHECK(e.params[0] == doctest::Approx(1.0));
  CHECK(e.params[1] == doctest::Approx(1.0));
}

TEST_CASE("parse errors carry an offset and reject duplicates") {
  CHECK_THROWS_AS(parse(""), parse_error);
  CHECK_THROWS_AS(parse("x0 +"), parse_error);
  CHECK_THROWS_AS(parse("(x0"), parse_error);
  CHECK_THROWS_AS(parse("foo(x0)"), parse_error);
  CHECK_THROWS_AS(parse("x0 x1"), parse_error);
  CHECK_THROWS_AS(parse("c0 + c0"), parse_error);  // each c_i may appear once
  try {
    parse("x0 + @");
    FAIL("expected parse_error");
  } catch (const parse_error& ex) {
    CHECK(ex.offset == 5);
  }
}

TEST_CASE("format then parse round trips random expressions") {
  Rng rng(77);
  GenerationConfig cfg;
  cfg.operator_set = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow,
                      Op::Sin, Op::Cos, Op::Exp, Op::Log, Op::Sqrt};
  for (int i = 0; i < 400; ++i) {
    Expression e = generate_random(cfg, 3, rng);
    Expression back = parse(format(e));
    REQUIRE(structural_equal(e, back));
    // same tree, not just same class: evaluation agrees pointwise
    back.params = e.params;
    for (int r = 0; r < 3; ++r) {
      std::vector<double> x{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                            rng.uniform(-2.0, 2.0)};
      double want = oracle::eval_row(e, x);
      if (std::isfinite(want)) CHECK(oracle::eval_row(back, x) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("format parenthesizes only where needed") {
  CHECK(format(parse("(x0 + x1) * x2")) == "(x0 + x1) * x2");
  CHECK(format(parse("x0 + x1 * x2")) == "x0 + x1 * x2");
  CHECK(format(parse("x0 - (x1 - x2)")) == "x0 - (x1 - x2)");
  CHECK(format(parse("(x0 - x1) - x2")) == "x0 - x1 - x2");
}
