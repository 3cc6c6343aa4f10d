#include "smcsr/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "smcsr/parallel.hpp"

namespace smcsr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

bool gp_variant_from_name(const std::string& name, GpVariant& out) {
  if (name == "gp-mse") out = GpVariant::Mse;
  else if (name == "gp-nml") out = GpVariant::Nml;
  else if (name == "gp-agg") out = GpVariant::Agg;
  else return false;
  return true;
}

const char* gp_variant_name(GpVariant v) {
  switch (v) {
    case GpVariant::Mse: return "gp-mse";
    case GpVariant::Nml: return "gp-nml";
    case GpVariant::Agg: return "gp-agg";
  }
  return "?";
}

int matched_generations(const SmcTrace& smc_trace, int n_mcmc) {
  return static_cast<int>(smc_trace.steps.size()) * n_mcmc;
}

namespace {

struct Evaluated {
  FitResult fit;
  double loss = kInf;
};

double loss_of(const GpConfig& cfg, const Expression& e, const FitResult& fit,
               const Dataset& data) {
  if (cfg.variant == GpVariant::Nml) return -fit.log_nml;  // +inf for -inf evidence
  if (!fit.converged) return kInf;
  return mse_at(e, fit.theta_star, data.x_rows(Split::Train), data.y_rows(Split::Train));
}

}  // namespace

GpResult run_gp(const GpConfig& cfg, const Dataset& data) {
  if (cfg.population_size < 2) throw std::invalid_argument("population_size must be >= 2");
  if (cfg.selection == GpSelection::Tournament && cfg.tournament_size < 2)
    throw std::invalid_argument("tournament_size must be >= 2");
  const size_t n = static_cast<size_t>(cfg.population_size);

  Population pop;
  pop.members.resize(n);
  pop.weights.assign(n, 1.0 / static_cast<double>(n));
  pop.log_nml.assign(n, -kInf);
  pop.log_lik.assign(n, -kInf);
  pop.keys.resize(n);
  std::vector<double> loss(n, kInf);

  {
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

  auto evaluate_in_place = [&](std::vector<Expression>& members, std::vector<FitResult>& fits,
                               int generation) {
    fits.resize(members.size());
    parallel_for(members.size(), cfg.workers, [&](size_t i) {
      Rng rng(derive_seed(cfg.seed, stream::kFit, generation, 0, i));
      fits[i] = log_nml(members[i], data, cfg.evidence, rng);
      if (fits[i].converged) {
        members[i].params.assign(fits[i].theta_star.data(),
                                 fits[i].theta_star.data() + fits[i].theta_star.size());
      }
    });
  };

  std::vector<FitResult> fits;
  evaluate_in_place(pop.members, fits, 0);
  for (size_t i = 0; i < n; ++i) {
    pop.log_nml[i] = fits[i].log_nml;
    pop.log_lik[i] = fits[i].log_likelihood;
    loss[i] = loss_of(cfg, pop.members[i], fits[i], data);
  }

  GpTrace trace;
  std::unordered_set<std::string> unique_total(pop.keys.begin(), pop.keys.end());
  std::unordered_set<std::string> unique_accepted;

  for (int gen = 1; gen <= cfg.n_generations; ++gen) {
    std::uint64_t sweep_seed = derive_seed(cfg.seed, stream::kPropose, gen, 0);
    std::vector<Expression> offspring =
        propose(pop.members, cfg.variation, cfg.generation, data.n_features(), sweep_seed);
    std::vector<FitResult> off_fits;
    evaluate_in_place(offspring, off_fits, gen);
    std::vector<double> off_loss(n);
    std::vector<std::string> off_keys(n);
    parallel_for(n, cfg.workers, [&](size_t i) {
      off_loss[i] = loss_of(cfg, offspring[i], off_fits[i], data);
      off_keys[i] = structural_key(offspring[i]);
    });
    for (size_t i = 0; i < n; ++i) unique_total.insert(off_keys[i]);

    long long accepted = 0;
    if (cfg.selection == GpSelection::DeterministicCrowding) {
      for (size_t i = 0; i < n; ++i) {
        if (off_loss[i] <= loss[i]) {  // ties replace the parent
          pop.members[i] = std::move(offspring[i]);
          pop.log_nml[i] = off_fits[i].log_nml;
          pop.log_lik[i] = off_fits[i].log_likelihood;
          pop.keys[i] = std::move(off_keys[i]);
          loss[i] = off_loss[i];
          unique_accepted.insert(pop.keys[i]);
          ++accepted;
        }
      }
    } else {
      // Tournament over the combined pool of parents and offspring.
      Population next = pop;
      std::vector<double> next_loss(n);
      for (size_t j = 0; j < n; ++j) {
        Rng rng(derive_seed(cfg.seed, stream::kAccept, gen, j));
        size_t best = rng.uniform_index(2 * n);
        auto pool_loss = [&](size_t p) { return p < n ? loss[p] : off_loss[p - n]; };
        for (int t = 1; t < cfg.tournament_size; ++t) {
          size_t cand = rng.uniform_index(2 * n);
          if (pool_loss(cand) < pool_loss(best)) best = cand;
        }
        if (best < n) {
          next.members[j] = pop.members[best];
          next.log_nml[j] = pop.log_nml[best];
          next.log_lik[j] = pop.log_lik[best];
          next.keys[j] = pop.keys[best];
          next_loss[j] = loss[best];
        } else {
          size_t o = best - n;
          next.members[j] = offspring[o];
          next.log_nml[j] = off_fits[o].log_nml;
          next.log_lik[j] = off_fits[o].log_likelihood;
          next.keys[j] = off_keys[o];
          next_loss[j] = off_loss[o];
          unique_accepted.insert(next.keys[j]);
          ++accepted;
        }
      }
      pop = std::move(next);
      loss = std::move(next_loss);
    }

    GpStepRecord rec;
    rec.generation = gen;
    rec.accept_rate = static_cast<double>(accepted) / static_cast<double>(n);
    std::vector<double> sorted_loss = loss;
    std::sort(sorted_loss.begin(), sorted_loss.end());
    rec.min_loss = sorted_loss.front();
    rec.median_loss = (n % 2 == 1) ? sorted_loss[n / 2]
                                   : 0.5 * (sorted_loss[n / 2 - 1] + sorted_loss[n / 2]);
    if (cfg.variant == GpVariant::Nml) {
      double sum = 0.0, mx = -kInf;
      long long finite = 0;
      for (double q : pop.log_nml) {
        if (std::isfinite(q)) {
          sum += q;
          ++finite;
        }
        mx = std::max(mx, q);
      }
      rec.mean_log_nml = finite ? sum / static_cast<double>(finite) : -kInf;
      rec.max_log_nml = mx;
    } else {
      rec.mean_log_nml = kNan;
      rec.max_log_nml = kNan;
    }
    std::unordered_set<std::string> in_pop(pop.keys.begin(), pop.keys.end());
    rec.unique_in_pop = static_cast<long long>(in_pop.size());
    rec.unique_total = static_cast<long long>(unique_total.size());
    rec.unique_accepted_total = static_cast<long long>(unique_accepted.size());
    double csum = 0.0, cmax = 0.0, psum = 0.0, best_rmse = kInf;
    for (size_t i = 0; i < n; ++i) {
      int c = complexity(pop.members[i]);
      csum += c;
      cmax = std::max(cmax, static_cast<double>(c));
      psum += pop.members[i].num_params();
      best_rmse = std::min(best_rmse,
                           rmse_from_log_likelihood(pop.log_lik[i],
                                                    static_cast<int>(data.train.size()), cfg.evidence));
    }
    rec.min_nrmse_train = best_rmse / data.magnitude;
    rec.mean_complexity = csum / static_cast<double>(n);
    rec.max_complexity = cmax;
    rec.mean_n_params = psum / static_cast<double>(n);
    trace.steps.push_back(rec);
  }

  GpResult res;
  res.population = std::move(pop);
  res.loss = std::move(loss);
  res.trace = std::move(trace);
  return res;
}

}  // namespace smcsr
