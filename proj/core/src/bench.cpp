#include "smcsr/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "smcsr/parse.hpp"

namespace smcsr {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Dataset synthesize(const ProblemSpec& spec, Rng& rng) {
  if (spec.ranges.empty()) throw data_error("problem spec has no input ranges");
  for (const auto& r : spec.ranges)
    if (!(r.low <= r.high)) throw data_error("problem spec range has low > high");
  if (spec.n_total < 1 || spec.n_train < 1 || spec.n_train > spec.n_total)
    throw data_error("problem spec needs 1 <= n_train <= n_total");
  Expression gt = parse(spec.expression);
  if (gt.num_params() != 0)
    throw data_error("ground truth must use literal constants only (no c_i slots)");
  const int nx = static_cast<int>(spec.ranges.size());
  if (min_features(gt) > nx) throw data_error("ground truth references more variables than ranges");

  const int n = spec.n_total;
  Eigen::MatrixXd X(n, nx);
  Eigen::VectorXd y_clean(n);
  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < nx; ++j) X(i, j) = rng.uniform(spec.ranges[j].low, spec.ranges[j].high);
    y_clean = evaluate(gt, X);
    ok = y_clean.allFinite();
  }
  if (!ok) throw data_error("ground truth is non-finite on sampled inputs");

  double magnitude = median_abs(y_clean);
  double sigma = spec.noise_sigma ? *spec.noise_sigma : spec.noise_fraction * magnitude;

  // Random train/test partition (Fisher-Yates).
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[i], perm[j]);
  }
  Dataset d;
  d.X = std::move(X);
  d.y = y_clean;
  d.magnitude = magnitude;
  d.train.assign(perm.begin(), perm.begin() + spec.n_train);
  d.test.assign(perm.begin() + spec.n_train, perm.end());
  std::sort(d.train.begin(), d.train.end());
  std::sort(d.test.begin(), d.test.end());
  if (sigma > 0.0)
    for (int i : d.train) d.y[i] += rng.normal(0.0, sigma);
  if (!d.y.allFinite()) throw data_error("noise injection produced non-finite targets");
  return d;
}

std::vector<ProblemSpec> builtin_problem_specs() {
  std::vector<ProblemSpec> specs;
  {
    ProblemSpec s;
    s.name = "demo";
    s.expression = "0.15915494309189535 * exp(0 - (x0*x0)/2)";
    s.ranges = {{-3.0, 3.0}};
    s.n_total = 25;
    s.n_train = 25;  // all points train; no test split
    s.noise_sigma = 0.16;
    s.seed = 20250702;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.name = "triple-product";
    s.expression = "x0 * x1 * x2";
    s.ranges = {{1.0, 5.0}, {1.0, 5.0}, {1.0, 5.0}};
    s.n_total = 600;
    s.n_train = 100;
    s.noise_fraction = 0.1;
    s.seed = 1;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.name = "bilinear-sum";
    s.expression = "x0*x1 + x2*x3";
    s.ranges = {{-2.0, 2.0}, {-2.0, 2.0}, {-2.0, 2.0}, {-2.0, 2.0}};
    s.n_total = 600;
    s.n_train = 100;
    s.noise_fraction = 0.1;
    s.seed = 2;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.name = "inverse-square";
    s.expression = "x0 * x1 / (x2 * x2)";
    s.ranges = {{1.0, 5.0}, {1.0, 5.0}, {1.0, 2.0}};
    s.n_total = 600;
    s.n_train = 100;
    s.noise_fraction = 0.1;
    s.seed = 3;
    specs.push_back(s);
  }
  {
    ProblemSpec s;
    s.name = "damped-response";
    s.expression = "exp(0 - x0) * cos(x1) + x2";
    s.ranges = {{0.0, 2.0}, {-3.0, 3.0}, {-1.0, 1.0}};
    s.n_total = 600;
    s.n_train = 100;
    s.noise_fraction = 0.1;
    s.seed = 4;
    specs.push_back(s);
  }
  return specs;
}

std::optional<ProblemSpec> builtin_spec(const std::string& name) {
  for (auto& s : builtin_problem_specs())
    if (s.name == name) return s;
  return std::nullopt;
}

bool selection_from_name(const std::string& name, SelectionMethod& out) {
  if (name == "max-nml") out = SelectionMethod::MaxNml;
  else if (name == "validation") out = SelectionMethod::Validation;
  else if (name == "mode") out = SelectionMethod::Mode;
  else return false;
  return true;
}

const char* selection_name(SelectionMethod m) {
  switch (m) {
    case SelectionMethod::MaxNml: return "max-nml";
    case SelectionMethod::Validation: return "validation";
    case SelectionMethod::Mode: return "mode";
  }
  return "?";
}

std::vector<ClassSummary> aggregate_classes(const Population& pop, const Dataset& data,
                                            const EvidenceConfig& cfg, EvidenceCache& cache,
                                            std::uint64_t seed) {
  std::map<std::string, std::pair<long long, size_t>> groups;  // key -> (count, rep index)
  for (size_t i = 0; i < pop.size(); ++i) {
    auto [it, inserted] = groups.emplace(pop.keys[i], std::make_pair(0LL, i));
    ++it->second.first;
  }
  std::vector<ClassSummary> out;
  out.reserve(groups.size());
  for (const auto& [key, cnt_idx] : groups) {
    ClassSummary cs;
    cs.key = key;
    cs.count = cnt_idx.first;
    const FitResult& fr = cache.log_nml(pop.members[cnt_idx.second], data, cfg, seed);
    cs.expr = canonicalize(pop.members[cnt_idx.second]);
    cs.expr.params.assign(fr.theta_star.data(), fr.theta_star.data() + fr.theta_star.size());
    cs.log_nml = fr.log_nml;
    cs.log_likelihood = fr.log_likelihood;
    cs.converged = fr.converged;
    out.push_back(std::move(cs));
  }
  std::sort(out.begin(), out.end(), [](const ClassSummary& a, const ClassSummary& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.log_nml != b.log_nml) return a.log_nml > b.log_nml;
    return a.key < b.key;
  });
  return out;
}

const ClassSummary& select_model(const std::vector<ClassSummary>& classes, SelectionMethod m,
                                 const Dataset& data) {
  if (classes.empty()) throw std::invalid_argument("empty population");
  switch (m) {
    case SelectionMethod::MaxNml: {
      size_t best = 0;
      for (size_t i = 1; i < classes.size(); ++i)
        if (classes[i].log_nml > classes[best].log_nml) best = i;
      return classes[best];
    }
    case SelectionMethod::Validation: {
      if (data.validation.empty()) throw data_error("validation selection requires a validation split");
      size_t best = 0;
      double best_err = kInf;
      for (size_t i = 0; i < classes.size(); ++i) {
        Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(classes[i].expr.params.data(),
                                                                  classes[i].expr.params.size());
        double err = nrmse_at(classes[i].expr, theta, data, Split::Validation);
        if (err < best_err) {
          best_err = err;
          best = i;
        }
      }
      return classes[best];
    }
    case SelectionMethod::Mode:
      // classes are sorted by count, then log_nml
      return classes.front();
  }
  return classes.front();
}

bool ground_truth_identified(const Expression& expr, const Dataset& data,
                             const EvidenceConfig& cfg, std::uint64_t seed) {
  if (data.test.empty()) return false;
  Expression canon = canonicalize(expr);
  Rng rng(derive_seed(seed, stream::kReport, 0x67740000ULL));
  FitResult fr = fit_params(canon, data.x_rows(Split::Test), data.y_rows(Split::Test), cfg, rng);
  if (!fr.converged) return false;
  return nrmse_at(canon, fr.theta_star, data, Split::Test) < 1e-10;
}

Eigen::MatrixXi posterior_predictive_histogram(const std::vector<ClassSummary>& classes,
                                               const std::vector<double>& x_grid, double y_min,
                                               double y_max, int y_bins) {
  if (y_bins < 1 || y_max <= y_min) throw std::invalid_argument("bad histogram bins");
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(y_bins + 1, static_cast<int>(x_grid.size()));
  Eigen::MatrixXd X(x_grid.size(), 1);
  for (size_t i = 0; i < x_grid.size(); ++i) X(i, 0) = x_grid[i];
  for (const auto& cs : classes) {
    Eigen::VectorXd v = evaluate(cs.expr, X);
    for (int col = 0; col < v.size(); ++col) {
      int row;
      if (!std::isfinite(v[col])) {
        row = y_bins;  // overflow bin
      } else {
        double t = (v[col] - y_min) / (y_max - y_min);
        row = std::clamp(static_cast<int>(t * y_bins), 0, y_bins - 1);
      }
      counts(row, col) += static_cast<int>(cs.count);
    }
  }
  return counts;
}

std::vector<Snapshot> select_snapshots(const SmcTrace& trace, const std::vector<double>& phis) {
  std::vector<Snapshot> out;
  for (double target : phis) {
    for (const auto& snap : trace.snapshots) {
      if (snap.phi >= target - 1e-12) {
        out.push_back(snap);
        break;
      }
    }
  }
  return out;
}

double interquartile_range(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(),
                              [](double v) { return !std::isfinite(v); }),
               values.end());
  if (values.size() < 2) return 0.0;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    double pos = q * static_cast<double>(values.size() - 1);
    size_t lo = static_cast<size_t>(pos);
    size_t hi = std::min(lo + 1, values.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
  };
  return quantile(0.75) - quantile(0.25);
}

std::uint64_t campaign_cell_seed(const CampaignConfig& cfg, const ProblemSpec& spec,
                                 int repetition) {
  std::uint64_t name_hash = 1469598103934665603ULL;
  for (unsigned char c : spec.name) {
    name_hash ^= c;
    name_hash *= 1099511628211ULL;
  }
  return derive_seed(cfg.seed, stream::kCampaign, name_hash, static_cast<std::uint64_t>(repetition));
}

namespace {

// Move a random 1/6 of the train rows into a validation split, leaving the
// validation set at 20% of the remaining train size.
void carve_validation(Dataset& data, Rng& rng) {
  size_t n_val = data.train.size() / 6;
  if (n_val == 0) return;
  std::vector<int> train = data.train;
  for (size_t i = train.size() - 1; i > 0; --i) {
    size_t j = rng.uniform_index(i + 1);
    std::swap(train[i], train[j]);
  }
  data.validation.assign(train.end() - static_cast<long>(n_val), train.end());
  train.resize(train.size() - n_val);
  std::sort(train.begin(), train.end());
  std::sort(data.validation.begin(), data.validation.end());
  data.train = std::move(train);
}

double min_nrmse_test_over(const std::vector<ClassSummary>& classes, const Dataset& data) {
  double best = kInf;
  for (const auto& cs : classes) {
    Eigen::VectorXd theta =
        Eigen::Map<const Eigen::VectorXd>(cs.expr.params.data(), cs.expr.params.size());
    best = std::min(best, nrmse_at(cs.expr, theta, data, Split::Test));
  }
  return best;
}

CampaignRow base_row(const ProblemSpec& spec, const std::string& algorithm, int repetition) {
  CampaignRow row;
  row.problem = spec.name;
  row.algorithm = algorithm;
  row.repetition = repetition;
  return row;
}

}  // namespace

CellOutput run_campaign_cell(const CampaignConfig& cfg, const ProblemSpec& spec, int repetition) {
  CellOutput out;
  std::uint64_t cell_seed = campaign_cell_seed(cfg, spec, repetition);
  Rng synth_rng(derive_seed(cell_seed, stream::kSynth, spec.seed));
  Dataset data = synthesize(spec, synth_rng);
  bool want_validation =
      std::find(cfg.selections.begin(), cfg.selections.end(), "validation") != cfg.selections.end();
  if (want_validation && !data.train.empty()) {
    Rng carve_rng(derive_seed(cell_seed, stream::kSynth, 0xCA57ULL));
    carve_validation(data, carve_rng);
  }

  // SMC always runs: it fixes the matched compute budget for the GP runs.
  SmcConfig smc_cfg = cfg.smc;
  smc_cfg.seed = derive_seed(cell_seed, stream::kCampaign, 0);
  SmcResult smc = run_smc(smc_cfg, data);
  int steps = static_cast<int>(smc.trace.steps.size());
  int budget = matched_generations(smc.trace, smc_cfg.n_mcmc);

  bool want_smc =
      std::find(cfg.algorithms.begin(), cfg.algorithms.end(), "smc") != cfg.algorithms.end();
  if (want_smc) {
    EvidenceCache cache;
    auto classes = aggregate_classes(smc.population, data, smc_cfg.evidence, cache, cell_seed);
    double min_test = min_nrmse_test_over(classes, data);
    for (const auto& sel_name : cfg.selections) {
      SelectionMethod method;
      if (!selection_from_name(sel_name, method)) continue;
      CampaignRow row = base_row(spec, "smc", repetition);
      row.selection = sel_name;
      row.steps = steps;
      row.generations = budget;
      row.min_nrmse_test_pop = min_test;
      try {
        const ClassSummary& sel = select_model(classes, method, data);
        Eigen::VectorXd theta =
            Eigen::Map<const Eigen::VectorXd>(sel.expr.params.data(), sel.expr.params.size());
        row.nrmse_train = nrmse_at(sel.expr, theta, data, Split::Train);
        row.nrmse_test = data.test.empty() ? kInf : nrmse_at(sel.expr, theta, data, Split::Test);
        row.complexity = complexity(sel.expr);
        row.n_params = sel.expr.num_params();
        row.ground_truth_hit = ground_truth_identified(sel.expr, data, smc_cfg.evidence, cell_seed);
      } catch (const std::exception& ex) {
        row.status = std::string("error: ") + ex.what();
      }
      out.rows.push_back(std::move(row));
    }
    FigureSeries fs;
    fs.problem = spec.name;
    fs.algorithm = "smc";
    fs.repetition = repetition;
    for (const auto& st : smc.trace.steps) {
      fs.compute.push_back(static_cast<double>(st.step) / static_cast<double>(steps));
      fs.min_nrmse_train.push_back(st.min_nrmse_train);
      fs.phi.push_back(st.phi);
    }
    out.series.push_back(std::move(fs));
  }

  for (const auto& alg : cfg.algorithms) {
    GpVariant variant;
    if (!gp_variant_from_name(alg, variant)) continue;
    CampaignRow row = base_row(spec, alg, repetition);
    row.selection = "best-train";
    row.generations = budget;
    try {
      GpConfig gp_cfg = cfg.gp;
      gp_cfg.variant = variant;
      gp_cfg.selection =
          (variant == GpVariant::Agg) ? GpSelection::Tournament : GpSelection::DeterministicCrowding;
      gp_cfg.seed = derive_seed(cell_seed, stream::kCampaign, 1 + static_cast<std::uint64_t>(variant));
      gp_cfg.n_generations = std::max(1, budget);
      GpResult gp = run_gp(gp_cfg, data);
      size_t best = 0;
      for (size_t i = 1; i < gp.loss.size(); ++i)
        if (gp.loss[i] < gp.loss[best]) best = i;
      const Expression& sel = gp.population.members[best];
      row.nrmse_train = nrmse(sel, data, Split::Train);
      row.nrmse_test = data.test.empty() ? kInf : nrmse(sel, data, Split::Test);
      row.complexity = complexity(sel);
      row.n_params = sel.num_params();
      row.ground_truth_hit = ground_truth_identified(sel, data, gp_cfg.evidence, cell_seed);
      EvidenceCache cache;
      auto classes = aggregate_classes(gp.population, data, gp_cfg.evidence, cache, cell_seed);
      row.min_nrmse_test_pop = min_nrmse_test_over(classes, data);
      FigureSeries fs;
      fs.problem = spec.name;
      fs.algorithm = alg;
      fs.repetition = repetition;
      for (const auto& st : gp.trace.steps) {
        fs.compute.push_back(static_cast<double>(st.generation) / static_cast<double>(gp_cfg.n_generations));
        fs.min_nrmse_train.push_back(st.min_nrmse_train);
      }
      out.series.push_back(std::move(fs));
    } catch (const std::exception& ex) {
      row.status = std::string("error: ") + ex.what();
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

CellOutput run_campaign(const CampaignConfig& cfg) {
  CellOutput all;
  for (const auto& spec : cfg.specs) {
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      try {
        CellOutput cell = run_campaign_cell(cfg, spec, rep);
        all.rows.insert(all.rows.end(), cell.rows.begin(), cell.rows.end());
        all.series.insert(all.series.end(), cell.series.begin(), cell.series.end());
      } catch (const std::exception& ex) {
        CampaignRow row;
        row.problem = spec.name;
        row.algorithm = "cell";
        row.repetition = rep;
        row.status = std::string("error: ") + ex.what();
        all.rows.push_back(std::move(row));
      }
    }
  }
  return all;
}

}  // namespace smcsr
