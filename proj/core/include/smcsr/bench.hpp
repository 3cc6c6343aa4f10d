#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smcsr/dataset.hpp"
#include "smcsr/evidence.hpp"
#include "smcsr/gp.hpp"
#include "smcsr/smc.hpp"

namespace smcsr {

struct Range {
  double low = 0.0;
  double high = 1.0;
};

struct ProblemSpec {
  std::string name;
  std::string expression;  // ground truth, literal constants only
  std::vector<Range> ranges;
  int n_total = 100;
  int n_train = 50;
  double noise_fraction = 0.0;
  // Absolute training-noise sigma; overrides noise_fraction * magnitude.
  std::optional<double> noise_sigma;
  std::uint64_t seed = 0;
};

// Uniform input sampling, ground-truth targets, iid Gaussian noise with
// sigma = noise_fraction * median(|y_clean|) added to the training split
// only. The dataset magnitude is recorded from the clean targets. Resamples
// on non-finite targets up to a bound.
Dataset synthesize(const ProblemSpec& spec, Rng& rng);

// Demo problem plus four physics-flavored analytic forms.
std::vector<ProblemSpec> builtin_problem_specs();
std::optional<ProblemSpec> builtin_spec(const std::string& name);

enum class SelectionMethod { MaxNml, Validation, Mode };
bool selection_from_name(const std::string& name, SelectionMethod& out);
const char* selection_name(SelectionMethod m);

// One structural-equality class of a final population, with the reporting
// fit (theta*, ln q) attached to the canonical representative.
struct ClassSummary {
  Expression expr;  // canonical form, params = theta*
  std::string key;
  long long count = 0;
  double log_nml = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
};

// Groups a population by structural class and refits each class once via the
// reporting cache. Sorted by count desc, then log_nml desc, then key.
std::vector<ClassSummary> aggregate_classes(const Population& pop, const Dataset& data,
                                            const EvidenceConfig& cfg, EvidenceCache& cache,
                                            std::uint64_t seed);

// max-nml: argmax ln q; validation: argmin validation NRMSE (requires the
// split); mode: largest class, ties by higher ln q.
const ClassSummary& select_model(const std::vector<ClassSummary>& classes, SelectionMethod m,
                                 const Dataset& data);

// Refit theta on the (noiseless) test split; true iff NRMSE-test < 1e-10.
bool ground_truth_identified(const Expression& expr, const Dataset& data,
                             const EvidenceConfig& cfg, std::uint64_t seed);

// 2-D posterior-predictive histogram for 1-feature problems. Returns a
// (y_bins + 1) x |x_grid| count matrix; the extra last row collects
// non-finite predictions, finite out-of-range values clamp to edge bins, so
// every column sums to the population size.
Eigen::MatrixXi posterior_predictive_histogram(const std::vector<ClassSummary>& classes,
                                               const std::vector<double>& x_grid, double y_min,
                                               double y_max, int y_bins);

// First recorded snapshot at or past each requested phi.
std::vector<Snapshot> select_snapshots(const SmcTrace& trace, const std::vector<double>& phis);

double interquartile_range(std::vector<double> values);

struct CampaignConfig {
  std::vector<ProblemSpec> specs;
  std::vector<std::string> algorithms{"smc", "gp-mse", "gp-nml", "gp-agg"};
  std::vector<std::string> selections{"max-nml", "validation", "mode"};
  int repetitions = 1;
  std::uint64_t seed = 0;
  SmcConfig smc;  // per-cell seed/worker overrides applied by the runner
  GpConfig gp;
};

struct CampaignRow {
  std::string problem;
  std::string algorithm;
  int repetition = 0;
  std::string selection;
  double nrmse_train = 0.0;
  double nrmse_test = 0.0;
  double min_nrmse_test_pop = 0.0;
  int complexity = 0;
  int n_params = 0;
  bool ground_truth_hit = false;
  int steps = 0;
  int generations = 0;
  std::string status = "ok";
};

// Per-run trajectory on the normalized compute axis [0, 1].
struct FigureSeries {
  std::string problem;
  std::string algorithm;
  int repetition = 0;
  std::vector<double> compute;
  std::vector<double> min_nrmse_train;
  std::vector<double> phi;  // SMC only
};

struct CellOutput {
  std::vector<CampaignRow> rows;
  std::vector<FigureSeries> series;
};

std::uint64_t campaign_cell_seed(const CampaignConfig& cfg, const ProblemSpec& spec,
                                 int repetition);

// Runs the SMC reference (always, to fix the compute budget) and every
// requested algorithm for one (spec, repetition) cell.
CellOutput run_campaign_cell(const CampaignConfig& cfg, const ProblemSpec& spec, int repetition);

// All cells; individual cell failures become status rows and the campaign
// continues.
CellOutput run_campaign(const CampaignConfig& cfg);

}  // namespace smcsr
