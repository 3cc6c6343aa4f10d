#include "smcsr/smc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smcsr/parallel.hpp"
#include "smcsr/parse.hpp"

namespace smcsr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double ess(const std::vector<double>& weights) {
  double s = 0.0;
  for (double w : weights) s += w * w;
  return 1.0 / s;
}

std::vector<double> reweight(const std::vector<double>& weights,
                             const std::vector<double>& log_nml, double delta_phi) {
  const size_t n = weights.size();
  std::vector<double> logs(n);
  double shift = -kInf;
  for (size_t i = 0; i < n; ++i) {
    logs[i] = std::log(weights[i]) + delta_phi * log_nml[i];
    if (weights[i] > 0.0 && log_nml[i] == -kInf) logs[i] = -kInf;
    shift = std::max(shift, logs[i]);
  }
  if (shift == -kInf) throw degenerate_error("all reweighted particle weights are zero");
  std::vector<double> out(n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    out[i] = std::exp(logs[i] - shift);
    total += out[i];
  }
  for (double& w : out) w /= total;
  return out;
}

double next_phi_delta(const std::vector<double>& weights, const std::vector<double>& log_nml,
                      double phi, double target_ess) {
  const double remaining = 1.0 - phi;
  bool any_finite = false;
  for (size_t i = 0; i < weights.size(); ++i)
    if (weights[i] > 0.0 && std::isfinite(log_nml[i])) any_finite = true;
  if (!any_finite) throw degenerate_error("population evidence is degenerate (all -inf)");
  if (ess(reweight(weights, log_nml, remaining)) >= target_ess) return remaining;
  // ESS is monotone non-increasing in the tempering increment, so bisection
  // converges to the unique crossing; 100 halvings reach machine precision,
  // well inside the 0.5-ESS-unit contract.
  double lo = 0.0, hi = remaining, mid = 0.5 * remaining;
  for (int iter = 0; iter < 100 && hi - lo > 1e-15 * remaining; ++iter) {
    mid = 0.5 * (lo + hi);
    double e = ess(reweight(weights, log_nml, mid));
    if (e > target_ess)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

std::vector<int> stratified_resample_indices(const std::vector<double>& weights, Rng& rng) {
  const size_t n = weights.size();
  std::vector<double> cdf(n);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    acc += weights[i];
    cdf[i] = acc;
  }
  cdf[n - 1] = 1.0;  // guard against rounding
  std::vector<int> out(n);
  // One point per stratum [k/n, (k+1)/n) at a shared offset. The shared
  // offset (rather than an independent draw per stratum) is what makes the
  // floor(n*W_i) lower bound on copy counts hold on every draw.
  const double offset = rng.uniform();
  for (size_t k = 0; k < n; ++k) {
    double u = (static_cast<double>(k) + offset) / static_cast<double>(n);
    out[k] = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  }
  return out;
}

double acceptance_probability(double phi, double log_nml_old, double log_nml_new) {
  if (log_nml_new == -kInf) return 0.0;
  if (log_nml_old == -kInf) return 1.0;
  double a = std::exp(phi * (log_nml_new - log_nml_old));
  return std::min(1.0, a);
}

double rmse_from_log_likelihood(double log_lik, int n_rows, const EvidenceConfig& cfg) {
  if (!std::isfinite(log_lik)) return kInf;
  constexpr double kLog2Pi = 1.8378770664093453;
  double nd = static_cast<double>(n_rows);
  if (cfg.fixed_noise_sigma) {
    double s2 = (*cfg.fixed_noise_sigma) * (*cfg.fixed_noise_sigma);
    double sse = -2.0 * s2 * (log_lik + 0.5 * nd * std::log(6.283185307179586 * s2));
    return std::sqrt(std::max(sse, 0.0) / nd);
  }
  double s2 = std::exp(-2.0 * log_lik / nd - kLog2Pi - 1.0);
  return std::sqrt(s2);
}

namespace {

std::vector<Expression> parse_enumerated(const std::vector<std::string>& texts) {
  std::vector<Expression> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(parse(t));
  return out;
}

struct SweepResult {
  std::vector<Expression> offspring;
  std::vector<FitResult> fits;
  std::vector<std::string> keys;
};

SweepResult propose_and_evaluate(const Population& pop, const SmcConfig& cfg,
                                 const Dataset& data,
                                 const std::vector<Expression>& enumerated, int step, int sweep) {
  const size_t n = pop.size();
  SweepResult res;
  res.offspring.resize(n);
  res.fits.resize(n);
  res.keys.resize(n);
  std::uint64_t sweep_seed = derive_seed(cfg.seed, stream::kPropose, step, sweep);
  if (!enumerated.empty()) {
    for (size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(sweep_seed, stream::kPropose, i));
      res.offspring[i] = enumerated[rng.uniform_index(enumerated.size())];
    }
  } else {
    res.offspring = propose(pop.members, cfg.variation, cfg.generation, data.n_features(), sweep_seed);
  }
  parallel_for(n, cfg.workers, [&](size_t i) {
    Rng rng(derive_seed(cfg.seed, stream::kFit, step, sweep, i));
    res.fits[i] = log_nml(res.offspring[i], data, cfg.evidence, rng);
    res.keys[i] = structural_key(res.offspring[i]);
  });
  return res;
}

}  // namespace

void mcmc_rejuvenate(Population& pop, double phi, const SmcConfig& cfg, const Dataset& data,
                     int step, RejuvenationStats& stats,
                     std::unordered_set<std::string>& unique_total,
                     std::unordered_set<std::string>& unique_accepted) {
  const size_t n = pop.size();
  std::vector<Expression> enumerated = parse_enumerated(cfg.enumerated_space);
  for (int sweep = 0; sweep < cfg.n_mcmc; ++sweep) {
    SweepResult sr = propose_and_evaluate(pop, cfg, data, enumerated, step, sweep);
    for (size_t i = 0; i < n; ++i) {
      unique_total.insert(sr.keys[i]);
      ++stats.proposals;
      double alpha = acceptance_probability(phi, pop.log_nml[i], sr.fits[i].log_nml);
      Rng rng(derive_seed(cfg.seed, stream::kAccept, step, sweep, i));
      if (alpha >= 1.0 || rng.uniform() < alpha) {
        pop.members[i] = std::move(sr.offspring[i]);
        pop.log_nml[i] = sr.fits[i].log_nml;
        pop.log_lik[i] = sr.fits[i].log_likelihood;
        pop.keys[i] = std::move(sr.keys[i]);
        unique_accepted.insert(pop.keys[i]);
        ++stats.accepted;
      }
    }
  }
}

SmcResult run_smc(const SmcConfig& cfg, const Dataset& data) {
  if (cfg.population_size < 2) throw std::invalid_argument("population_size must be >= 2");
  const size_t n = static_cast<size_t>(cfg.population_size);
  std::vector<Expression> enumerated = parse_enumerated(cfg.enumerated_space);

  Population pop;
  pop.members.resize(n);
  pop.weights.assign(n, 1.0 / static_cast<double>(n));
  pop.log_nml.assign(n, -kInf);
  pop.log_lik.assign(n, -kInf);
  pop.keys.resize(n);

  if (!enumerated.empty()) {
    for (size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed(cfg.seed, stream::kInit, i));
      pop.members[i] = enumerated[rng.uniform_index(enumerated.size())];
    }
  } else {
    // Random generation until a unique set of structural classes is reached,
    // bounded; on exhaustion duplicates are admitted.
    std::unordered_set<std::string> seen;
    size_t filled = 0;
    std::uint64_t attempt = 0;
    const std::uint64_t max_unique_attempts = 50ULL * n;
    while (filled < n) {
      Rng rng(derive_seed(cfg.seed, stream::kInit, attempt));
      Expression e = generate_random(cfg.generation, data.n_features(), rng);
      std::string key = structural_key(e);
      ++attempt;
      if (attempt <= max_unique_attempts && !seen.insert(key).second) continue;
      pop.members[filled] = std::move(e);
      pop.keys[filled] = std::move(key);
      ++filled;
    }
  }

  parallel_for(n, cfg.workers, [&](size_t i) {
    Rng rng(derive_seed(cfg.seed, stream::kFit, 0, 0, i));
    FitResult fr = log_nml(pop.members[i], data, cfg.evidence, rng);
    pop.log_nml[i] = fr.log_nml;
    pop.log_lik[i] = fr.log_likelihood;
    if (pop.keys[i].empty()) pop.keys[i] = structural_key(pop.members[i]);
  });

  SmcTrace trace;
  std::unordered_set<std::string> unique_total(pop.keys.begin(), pop.keys.end());
  std::unordered_set<std::string> unique_accepted;
  auto snapshot = [&](double phi) {
    if (cfg.record_snapshots) trace.snapshots.push_back({phi, pop.log_nml});
  };
  snapshot(0.0);

  const double target_ess = cfg.ess_target_fraction * static_cast<double>(n);
  double phi = 0.0;
  int step = 0;
  while (phi < 1.0) {
    ++step;
    double delta = next_phi_delta(pop.weights, pop.log_nml, phi, target_ess);
    phi = (delta >= 1.0 - phi) ? 1.0 : phi + delta;

    pop.weights = reweight(pop.weights, pop.log_nml, delta);
    double ess_pre = ess(pop.weights);

    Rng res_rng(derive_seed(cfg.seed, stream::kResample, step));
    std::vector<int> idx = stratified_resample_indices(pop.weights, res_rng);
    Population next;
    next.members.reserve(n);
    next.log_nml.reserve(n);
    next.log_lik.reserve(n);
    next.keys.reserve(n);
    for (int j : idx) {
      next.members.push_back(pop.members[j]);
      next.log_nml.push_back(pop.log_nml[j]);
      next.log_lik.push_back(pop.log_lik[j]);
      next.keys.push_back(pop.keys[j]);
    }
    next.weights.assign(n, 1.0 / static_cast<double>(n));
    pop = std::move(next);

    RejuvenationStats stats;
    mcmc_rejuvenate(pop, phi, cfg, data, step, stats, unique_total, unique_accepted);

    StepRecord rec;
    rec.step = step;
    rec.phi = phi;
    rec.delta_phi = delta;
    rec.ess_pre = ess_pre;
    rec.ess_post = static_cast<double>(n);
    rec.accept_rate = stats.proposals ? static_cast<double>(stats.accepted) / stats.proposals : 0.0;
    double sum = 0.0, mx = -kInf;
    long long finite = 0;
    std::unordered_set<std::string> in_pop;
    double csum = 0.0, cmax = 0.0, psum = 0.0, best_rmse = kInf;
    for (size_t i = 0; i < n; ++i) {
      if (std::isfinite(pop.log_nml[i])) {
        sum += pop.log_nml[i];
        ++finite;
      }
      mx = std::max(mx, pop.log_nml[i]);
      in_pop.insert(pop.keys[i]);
      int c = complexity(pop.members[i]);
      csum += c;
      cmax = std::max(cmax, static_cast<double>(c));
      psum += pop.members[i].num_params();
      best_rmse = std::min(best_rmse,
                           rmse_from_log_likelihood(pop.log_lik[i],
                                                    static_cast<int>(data.train.size()), cfg.evidence));
    }
    rec.mean_log_nml = finite ? sum / static_cast<double>(finite) : -kInf;
    rec.max_log_nml = mx;
    rec.unique_in_pop = static_cast<long long>(in_pop.size());
    rec.unique_total = static_cast<long long>(unique_total.size());
    rec.unique_accepted_total = static_cast<long long>(unique_accepted.size());
    rec.min_nrmse_train = best_rmse / data.magnitude;
    rec.mean_complexity = csum / static_cast<double>(n);
    rec.max_complexity = cmax;
    rec.mean_n_params = psum / static_cast<double>(n);
    trace.steps.push_back(rec);
    snapshot(phi);
  }
  return {std::move(pop), std::move(trace)};
}

}  // namespace smcsr
