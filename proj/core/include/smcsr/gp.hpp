#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smcsr/dataset.hpp"
#include "smcsr/evidence.hpp"
#include "smcsr/smc.hpp"
#include "smcsr/variation.hpp"

namespace smcsr {

enum class GpVariant { Mse, Nml, Agg };
enum class GpSelection { DeterministicCrowding, Tournament };

bool gp_variant_from_name(const std::string& name, GpVariant& out);
const char* gp_variant_name(GpVariant v);

struct GpConfig {
  GpVariant variant = GpVariant::Mse;
  int population_size = 2000;
  int n_generations = 10;
  GpSelection selection = GpSelection::DeterministicCrowding;
  int tournament_size = 4;
  std::uint64_t seed = 0;
  int workers = 1;
  GenerationConfig generation;
  VariationConfig variation;
  EvidenceConfig evidence;
};

struct GpStepRecord {
  int generation = 0;
  double accept_rate = 0.0;  // replacement fraction
  double min_loss = 0.0;
  double median_loss = 0.0;
  double mean_log_nml = 0.0;  // NaN for MSE-loss variants
  double max_log_nml = 0.0;
  long long unique_in_pop = 0;
  long long unique_total = 0;
  long long unique_accepted_total = 0;
  double min_nrmse_train = 0.0;
  double mean_complexity = 0.0;
  double max_complexity = 0.0;
  double mean_n_params = 0.0;
};

struct GpTrace {
  std::vector<GpStepRecord> steps;
};

// Population plus per-member loss; members carry fitted theta* so MSE and
// NRMSE are computable downstream.
struct GpResult {
  Population population;          // weights uniform, log_nml/log_lik cached
  std::vector<double> loss;       // e(M_i) under the configured loss
  GpTrace trace;
};

// Algorithm: per generation, propose one offspring per parent via the shared
// variation module, fit constants, then select. Deterministic crowding pairs
// parent i with offspring i and replaces iff e' <= e. Tournament (gp-agg)
// fills each next-generation slot with the loss-best of `tournament_size`
// uniform draws from parents + offspring.
GpResult run_gp(const GpConfig& cfg, const Dataset& data);

// Compute matching: generations = (number of SMC steps) * n_mcmc.
int matched_generations(const SmcTrace& smc_trace, int n_mcmc);

}  // namespace smcsr
