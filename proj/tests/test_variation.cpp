#include <doctest.h>

#include <cmath>
#include <map>

#include "smcsr/parse.hpp"
#include "smcsr/variation.hpp"

using namespace smcsr;

namespace {

GenerationConfig gen_cfg() {
  GenerationConfig cfg;
  cfg.operator_set = {Op::Add, Op::Sub, Op::Mul, Op::Div};
  return cfg;
}

}  // namespace

TEST_CASE("crossover produces valid bounded offspring") {
  Rng rng(21);
  GenerationConfig gen = gen_cfg();
  for (int i = 0; i < 300; ++i) {
    Expression a = generate_random(gen, 2, rng);
    Expression b = generate_random(gen, 2, rng);
    Expression child = crossover(a, b, 24, rng);
    REQUIRE(validate(child, 2).empty());
    CHECK(child.num_nodes() <= 24);
  }
}

TEST_CASE("crossover with itself can still be a no-op copy under the node bound") {
  Rng rng(22);
  Expression a = parse("x0 + x1");
  Expression child = crossover(a, a, 3, rng);
  REQUIRE(validate(child, 2).empty());
  CHECK(child.num_nodes() <= 3);
}

TEST_CASE("every mutation kind yields a valid expression") {
  Rng rng(23);
  GenerationConfig gen = gen_cfg();
  for (MutationKind kind :
       {MutationKind::Point, MutationKind::Subtree, MutationKind::Prune, MutationKind::Parameter}) {
    for (int i = 0; i < 200; ++i) {
      Expression e = generate_random(gen, 2, rng);
      Expression m = mutate(e, kind, gen, 2, 24, rng);
      REQUIRE(validate(m, 2).empty());
      CHECK(m.num_nodes() <= 24);
    }
  }
}

TEST_CASE("point mutation keeps the tree shape") {
  Rng rng(24);
  GenerationConfig gen = gen_cfg();
  for (int i = 0; i < 100; ++i) {
    Expression e = generate_random(gen, 2, rng);
    Expression m = mutate(e, MutationKind::Point, gen, 2, 24, rng);
    CHECK(m.num_nodes() == e.num_nodes());  // arity-compatible swap, same tree shape
  }
}

TEST_CASE("parameter mutation only perturbs constant hints") {
  Rng rng(25);
  Expression e = parse("c0 * x0 + c1");
  e.params = {2.0, -3.0};
  int changed_hint = 0;
  for (int i = 0; i < 50; ++i) {
    Expression m = mutate(e, MutationKind::Parameter, gen_cfg(), 2, 24, rng);
    REQUIRE(structural_equal(e, m));
    REQUIRE(m.num_params() == 2);
    if (m.params[0] != e.params[0] || m.params[1] != e.params[1]) ++changed_hint;
  }
  CHECK(changed_hint == 50);
}

TEST_CASE("parameter mutation on a constant-free tree falls back to point mutation") {
  Rng rng(26);
  Expression e = parse("x0 + x1");
  Expression m = mutate(e, MutationKind::Parameter, gen_cfg(), 2, 24, rng);
  REQUIRE(validate(m, 2).empty());
}

TEST_CASE("propose forces a change when crossover and mutation both skip") {
  VariationConfig var;
  var.crossover_probability = 0.0;
  var.mutation_probability = 0.0;
  std::vector<Expression> pop{parse("x0 + x1"), parse("x0 * x1"), parse("x0 - c0")};
  std::vector<Expression> kids = propose(pop, var, gen_cfg(), 2, 123);
  REQUIRE(kids.size() == pop.size());
  int different = 0;
  for (size_t i = 0; i < pop.size(); ++i) {
    REQUIRE(validate(kids[i], 2).empty());
    if (!structural_equal(pop[i], kids[i]) || kids[i].params != pop[i].params) ++different;
  }
  CHECK(different == static_cast<int>(pop.size()));
}

TEST_CASE("propose is deterministic in the seed and independent of call order") {
  Rng rng(27);
  std::vector<Expression> pop;
  for (int i = 0; i < 40; ++i) pop.push_back(generate_random(gen_cfg(), 2, rng));
  VariationConfig var;
  std::vector<Expression> a = propose(pop, var, gen_cfg(), 2, 999);
  std::vector<Expression> b = propose(pop, var, gen_cfg(), 2, 999);
  for (size_t i = 0; i < pop.size(); ++i) {
    CHECK(format(a[i]) == format(b[i]));
    CHECK(a[i].params == b[i].params);
  }
  // per-parent streams: each offspring equals the one-parent call
  for (size_t i = 0; i < pop.size(); ++i) {
    Rng one(derive_seed(999, stream::kPropose, i));
    Expression solo = propose_one(pop, i, var, gen_cfg(), 2, one);
    CHECK(format(solo) == format(a[i]));
  }
}

TEST_CASE("offspring respect the configured node budget") {
  Rng rng(28);
  GenerationConfig gen = gen_cfg();
  gen.max_nodes = 16;
  VariationConfig var;
  var.max_nodes = 16;
  std::vector<Expression> pop;
  for (int i = 0; i < 60; ++i) pop.push_back(generate_random(gen, 2, rng));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (const Expression& kid : propose(pop, var, gen, 2, seed)) {
      REQUIRE(validate(kid, 2).empty());
      CHECK(kid.num_nodes() <= 16);
    }
  }
}

TEST_CASE("crossover cut points are uniform over nodes (chi-squared)") {
  // Replace subtrees of a 7-node parent with a terminal donor; the replaced
  // position is identifiable from the offspring, so the cut distribution is
  // observable. df = 6, p = 0.01 threshold 16.812.
  Expression parent = parse("(x0 + x1) * (x0 - x1)");
  REQUIRE(parent.num_nodes() == 7);
  Expression donor = parse("5");
  const int reps = 7000;
  std::map<std::string, int> counts;
  Rng rng(31);
  for (int r = 0; r < reps; ++r) ++counts[structural_key(crossover(parent, donor, 64, rng))];
  REQUIRE(counts.size() == 7);  // every cut position reachable and distinct here
  double chi2 = 0.0;
  const double expected = reps / 7.0;
  for (const auto& [key, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
  CHECK(chi2 < 16.812);
}
