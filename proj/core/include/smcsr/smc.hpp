#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "smcsr/dataset.hpp"
#include "smcsr/evidence.hpp"
#include "smcsr/expr.hpp"
#include "smcsr/variation.hpp"

namespace smcsr {

// Raised when every particle has zero posterior mass and no tempering step
// can be taken.
struct degenerate_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Population {
  std::vector<Expression> members;
  std::vector<double> weights;
  std::vector<double> log_nml;
  std::vector<double> log_lik;
  std::vector<std::string> keys;  // cached structural keys, index-aligned

  size_t size() const { return members.size(); }
};

struct StepRecord {
  int step = 0;
  double phi = 0.0;
  double delta_phi = 0.0;
  double ess_pre = 0.0;
  double ess_post = 0.0;
  double accept_rate = 0.0;
  double mean_log_nml = 0.0;
  double max_log_nml = 0.0;
  long long unique_in_pop = 0;
  long long unique_total = 0;
  long long unique_accepted_total = 0;
  // extra in-memory diagnostics (not part of the trace file schema)
  double min_nrmse_train = 0.0;
  double mean_complexity = 0.0;
  double max_complexity = 0.0;
  double mean_n_params = 0.0;
};

struct Snapshot {
  double phi = 0.0;
  std::vector<double> log_nml;
};

struct SmcTrace {
  std::vector<StepRecord> steps;
  std::vector<Snapshot> snapshots;
};

struct SmcConfig {
  int population_size = 2000;
  int n_mcmc = 10;
  double ess_target_fraction = 0.95;
  std::uint64_t seed = 0;
  int workers = 1;
  bool record_snapshots = false;
  GenerationConfig generation;
  VariationConfig variation;
  EvidenceConfig evidence;
  // When non-empty, generation samples uniformly from this list and the
  // rejuvenation proposal is a uniform redraw; used by the enumerable-space
  // test harness.
  std::vector<std::string> enumerated_space;
};

struct SmcResult {
  Population population;
  SmcTrace trace;
};

// ESS = 1 / sum(W_i^2) for normalized weights.
double ess(const std::vector<double>& weights);

// W_i <- W_i * exp(delta_phi * log_nml_i), max-log shifted, renormalized.
std::vector<double> reweight(const std::vector<double>& weights,
                             const std::vector<double>& log_nml, double delta_phi);

// Bisection step size: the largest delta in (0, 1 - phi] whose reweighted
// ESS stays at the target (within 0.5), or the full remaining distance when
// even that keeps ESS above target.
double next_phi_delta(const std::vector<double>& weights, const std::vector<double>& log_nml,
                      double phi, double target_ess);

// One uniform per stratum u_k in [k/N, (k+1)/N), mapped through the weight
// CDF (cumulative sums in index order, ties to the lower index).
std::vector<int> stratified_resample_indices(const std::vector<double>& weights, Rng& rng);

// min(1, (q'/q)^phi) under the uniform model prior.
double acceptance_probability(double phi, double log_nml_old, double log_nml_new);

struct RejuvenationStats {
  long long proposals = 0;
  long long accepted = 0;
};

// N_MCMC sweeps of the forward kernel at tempering exponent phi. Offspring
// evidence is always computed fresh (no cache). `step` namespaces the random
// streams.
void mcmc_rejuvenate(Population& pop, double phi, const SmcConfig& cfg, const Dataset& data,
                     int step, RejuvenationStats& stats,
                     std::unordered_set<std::string>& unique_total,
                     std::unordered_set<std::string>& unique_accepted);

SmcResult run_smc(const SmcConfig& cfg, const Dataset& data);

// Inverts the profiled/fixed-sigma Gaussian log-likelihood back to the
// training RMSE; used for per-step diagnostics.
double rmse_from_log_likelihood(double log_lik, int n_rows, const EvidenceConfig& cfg);

}  // namespace smcsr
