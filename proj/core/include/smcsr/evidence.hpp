#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <unordered_map>

#include "smcsr/dataset.hpp"
#include "smcsr/expr.hpp"
#include "smcsr/rng.hpp"

namespace smcsr {

struct EvidenceConfig {
  int restarts = 3;              // random initializations per fit
  double init_stddev = 10.0;     // theta init ~ N(0, init_stddev^2)
  int max_iterations = 500;
  double step_tolerance = 1e-8;
  bool count_noise_param = true;           // count sigma in N_theta for the Occam term
  std::optional<double> fixed_noise_sigma; // profiled by ML when unset
};

struct FitResult {
  Eigen::VectorXd theta_star;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int n_params = 0;  // N_theta plus the profiled noise parameter when counted
  double log_nml = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int n_restarts_used = 0;
};

// Maximum-likelihood constant fit: damped least squares on the residuals
// with the analytic Jacobian, falling back to Nelder-Mead when the Jacobian
// is non-finite at the start point. Initializations: the expression's stored
// hint (when present and finite) plus `restarts` random draws. Returns the
// profiled Gaussian log-likelihood (or the fixed-sigma one) at the best
// optimum found.
FitResult fit_params(const Expression& e, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const EvidenceConfig& cfg, Rng& rng);

// Log normalized marginal likelihood via the Laplace approximation over the
// training split: ln q = (n_params/2) ln(gamma) + (1 - gamma) ln L(theta*)
// with gamma = 1/sqrt(N_train). gamma = 1 forces ln q = 0.
FitResult log_nml(const Expression& e, const Dataset& data, const EvidenceConfig& cfg, Rng& rng);

// Mean squared residual of e (at e.params) on a split; +inf when predictions
// are non-finite.
double mse(const Expression& e, const Dataset& data, Split split = Split::Train);
double mse_at(const Expression& e, const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y);

// sqrt(mse) / data.magnitude (magnitude always from the full dataset).
double nrmse(const Expression& e, const Dataset& data, Split split);
double nrmse_at(const Expression& e, const Eigen::VectorXd& theta, const Dataset& data, Split split);

// Reporting-side memo of fits keyed by (canonical form, dataset, config).
// Not used inside SMC rejuvenation, where every occurrence refits.
class EvidenceCache {
 public:
  // The per-entry rng stream is derived from the key so a cached result is
  // bit-identical to a fresh computation with the same stream.
  const FitResult& log_nml(const Expression& e, const Dataset& data, const EvidenceConfig& cfg,
                           std::uint64_t seed);
  size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::string, FitResult> map_;
};

std::string cache_key(const Expression& e, const Dataset& data, const EvidenceConfig& cfg);

}  // namespace smcsr
