#pragma once

#include <array>
#include <vector>

#include "smcsr/expr.hpp"
#include "smcsr/rng.hpp"

namespace smcsr {

enum class MutationKind { Point, Subtree, Prune, Parameter };

struct VariationConfig {
  double crossover_probability = 0.4;
  double mutation_probability = 0.4;
  // weights over {point, subtree, prune, parameter-perturb}
  std::array<double, 4> mutation_kind_weights{1.0, 1.0, 1.0, 1.0};
  int max_nodes = 24;
};

// Uniform random subtree of a replaced by a uniform random subtree of b,
// constants re-slotted. Bounded retry against max_nodes, then a copy of a.
Expression crossover(const Expression& a, const Expression& b, int max_nodes, Rng& rng);

// point: replace one node with an arity-compatible alternative;
// subtree: replace a random subtree with a fresh one of depth <= 2;
// prune: replace a random internal node by one of its children;
// parameter: multiply one constant's initialization hint by a lognormal
// factor. Inapplicable kinds fall back to point mutation.
Expression mutate(const Expression& e, MutationKind kind, const GenerationConfig& gen,
                  int n_features, int max_nodes, Rng& rng);

// One offspring per parent, index aligned. Each parent undergoes crossover
// and/or mutation with the configured probabilities; when neither fires one
// mutation is forced. Crossover partners are drawn uniformly from the
// population via `partner_rng` so parallel per-parent proposals stay
// deterministic.
Expression propose_one(const std::vector<Expression>& population, size_t parent,
                       const VariationConfig& var, const GenerationConfig& gen, int n_features,
                       Rng& rng);

std::vector<Expression> propose(const std::vector<Expression>& population,
                                const VariationConfig& var, const GenerationConfig& gen,
                                int n_features, std::uint64_t seed);

}  // namespace smcsr
