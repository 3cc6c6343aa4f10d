#include "smcsr/variation.hpp"

#include <algorithm>
#include <cmath>

namespace smcsr {

namespace {

// Rebuild with only reachable nodes and compacted parameter slots.
Expression compact(const Expression& e) {
  Expression out;
  out.root = copy_subtree(e, e.root, out);
  return out;
}

// Clone of `a` with the subtree at `cut` replaced by the subtree of `b`
// rooted at `sub`.
int graft_rec(const Expression& a, int idx, int cut, const Expression& b, int sub,
              Expression& out) {
  if (idx == cut) return copy_subtree(b, sub, out);
  Node n = a.nodes[idx];
  if (n.a >= 0) n.a = graft_rec(a, n.a, cut, b, sub, out);
  if (n.b >= 0) n.b = graft_rec(a, n.b, cut, b, sub, out);
  if (n.op == Op::Const) {
    n.index = static_cast<int>(out.params.size());
    out.params.push_back(a.params[a.nodes[idx].index]);
  }
  return add_node(out, n);
}

Expression graft(const Expression& a, int cut, const Expression& b, int sub) {
  Expression out;
  out.root = graft_rec(a, a.root, cut, b, sub, out);
  return out;
}

MutationKind sample_kind(const VariationConfig& cfg, Rng& rng) {
  double total = 0.0;
  for (double w : cfg.mutation_kind_weights) total += w;
  double u = rng.uniform() * total;
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) {
    acc += cfg.mutation_kind_weights[i];
    if (u < acc) return static_cast<MutationKind>(i);
  }
  return MutationKind::Point;
}

Expression point_mutate(const Expression& e, const GenerationConfig& gen, int n_features,
                        Rng& rng);

Expression subtree_mutate(const Expression& e, const GenerationConfig& gen, int n_features,
                          int max_nodes, Rng& rng) {
  auto order = topo_order(e);
  GenerationConfig sub_cfg = gen;
  sub_cfg.max_depth = 2;
  for (int attempt = 0; attempt < 5; ++attempt) {
    int cut = order[rng.uniform_index(order.size())];
    sub_cfg.max_nodes = std::min(gen.max_nodes, 7);
    Expression fresh = generate_random(sub_cfg, n_features, rng);
    Expression out = graft(e, cut, fresh, fresh.root);
    if (out.num_nodes() <= max_nodes) return out;
  }
  return compact(e);
}

Expression prune_mutate(const Expression& e, const GenerationConfig& gen, int n_features,
                        Rng& rng) {
  auto order = topo_order(e);
  std::vector<int> internal;
  for (int idx : order)
    if (arity(e.nodes[idx].op) > 0) internal.push_back(idx);
  if (internal.empty()) return point_mutate(e, gen, n_features, rng);
  int target = internal[rng.uniform_index(internal.size())];
  const Node& n = e.nodes[target];
  int child = (n.b >= 0 && rng.bernoulli(0.5)) ? n.b : n.a;
  return compact(graft(e, target, e, child));
}

Expression parameter_mutate(const Expression& e, const GenerationConfig& gen, int n_features,
                            Rng& rng) {
  if (e.params.empty()) return point_mutate(e, gen, n_features, rng);
  Expression out = compact(e);
  size_t slot = rng.uniform_index(out.params.size());
  double factor = rng.lognormal(0.5);
  // The hint feeds fit initialization only; a zero hint gets a fresh draw.
  out.params[slot] = (out.params[slot] == 0.0) ? rng.normal() : out.params[slot] * factor;
  return out;
}

Expression point_mutate(const Expression& e, const GenerationConfig& gen, int n_features,
                        Rng& rng) {
  auto order = topo_order(e);
  std::vector<Op> binaries, unaries;
  for (Op op : gen.operator_set) {
    if (arity(op) == 2) binaries.push_back(op);
    if (arity(op) == 1) unaries.push_back(op);
  }
  for (int attempt = 0; attempt < 16; ++attempt) {
    int idx = order[rng.uniform_index(order.size())];
    const Node& n = e.nodes[idx];
    // Mutate a clone in place, then compact away unreachable nodes.
    Expression out = e;
    Node& m = out.nodes[idx];
    if (arity(n.op) == 2) {
      std::vector<Op> alts;
      for (Op op : binaries)
        if (op != n.op) alts.push_back(op);
      if (alts.empty()) continue;
      m.op = alts[rng.uniform_index(alts.size())];
      return compact(out);
    }
    if (arity(n.op) == 1) {
      std::vector<Op> alts;
      for (Op op : unaries)
        if (op != n.op) alts.push_back(op);
      if (alts.empty()) continue;
      m.op = alts[rng.uniform_index(alts.size())];
      return compact(out);
    }
    // terminal: other variables, plus a fresh constant when not one already
    int n_alts = (n.op == Op::Var) ? (n_features - 1) + 1 : n_features + (n.op == Op::Lit ? 1 : 0);
    if (n_alts <= 0) continue;
    int pick = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_alts)));
    if (n.op == Op::Var) {
      if (pick < n_features - 1) {
        m.index = (pick >= n.index) ? pick + 1 : pick;  // skip the current var
      } else {
        m.op = Op::Const;
        m.index = static_cast<int>(out.params.size());
        out.params.push_back(rng.normal());
      }
    } else {  // Const or Lit becomes a variable (or a const for Lit)
      if (pick < n_features) {
        m.op = Op::Var;
        m.index = pick;
        m.value = 0.0;
      } else {
        m.op = Op::Const;
        m.index = static_cast<int>(out.params.size());
        out.params.push_back(rng.normal());
      }
    }
    return compact(out);
  }
  return compact(e);
}

}  // namespace

Expression crossover(const Expression& a, const Expression& b, int max_nodes, Rng& rng) {
  auto order_a = topo_order(a);
  auto order_b = topo_order(b);
  for (int attempt = 0; attempt < 5; ++attempt) {
    int cut = order_a[rng.uniform_index(order_a.size())];
    int sub = order_b[rng.uniform_index(order_b.size())];
    Expression out = graft(a, cut, b, sub);
    if (out.num_nodes() <= max_nodes) return out;
  }
  return compact(a);
}

Expression mutate(const Expression& e, MutationKind kind, const GenerationConfig& gen,
                  int n_features, int max_nodes, Rng& rng) {
  switch (kind) {
    case MutationKind::Point: return point_mutate(e, gen, n_features, rng);
    case MutationKind::Subtree: return subtree_mutate(e, gen, n_features, max_nodes, rng);
    case MutationKind::Prune: return prune_mutate(e, gen, n_features, rng);
    case MutationKind::Parameter: return parameter_mutate(e, gen, n_features, rng);
  }
  return compact(e);
}

Expression propose_one(const std::vector<Expression>& population, size_t parent,
                       const VariationConfig& var, const GenerationConfig& gen, int n_features,
                       Rng& rng) {
  const Expression& p = population[parent];
  bool do_cross = rng.bernoulli(var.crossover_probability);
  bool do_mut = rng.bernoulli(var.mutation_probability);
  Expression off = p;
  if (do_cross) {
    const Expression& partner = population[rng.uniform_index(population.size())];
    off = crossover(off, partner, var.max_nodes, rng);
  }
  if (do_mut) {
    off = mutate(off, sample_kind(var, rng), gen, n_features, var.max_nodes, rng);
  }
  if (!do_cross && !do_mut) {
    // Forced mutation: the offspring should differ structurally or
    // parametrically with positive probability.
    for (int attempt = 0; attempt < 10; ++attempt) {
      off = mutate(p, sample_kind(var, rng), gen, n_features, var.max_nodes, rng);
      if (!structural_equal(off, p) || off.params != p.params) break;
    }
  }
  return off;
}

std::vector<Expression> propose(const std::vector<Expression>& population,
                                const VariationConfig& var, const GenerationConfig& gen,
                                int n_features, std::uint64_t seed) {
  std::vector<Expression> offspring(population.size());
  for (size_t i = 0; i < population.size(); ++i) {
    Rng rng(derive_seed(seed, stream::kPropose, i));
    offspring[i] = propose_one(population, i, var, gen, n_features, rng);
  }
  return offspring;
}

}  // namespace smcsr
