#include "smcsr/evidence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace smcsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586;

double sse_at(const Expression& e, const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y) {
  Eigen::VectorXd v = evaluate(e, X, theta);
  double s = (v - y).squaredNorm();
  return std::isfinite(s) ? s : kInf;
}

struct LmOutcome {
  Eigen::VectorXd theta;
  double sse = kInf;
  bool converged = false;
  bool jacobian_bad = false;  // non-finite Jacobian at the start point
};

LmOutcome levenberg_marquardt(const Expression& e, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, Eigen::VectorXd theta,
                              const EvidenceConfig& cfg) {
  LmOutcome out;
  out.theta = theta;
  Eigen::VectorXd v;
  Eigen::MatrixXd J;
  evaluate_with_gradient(e, X, theta, v, J);
  if (!J.allFinite()) {
    out.jacobian_bad = true;
    out.sse = sse_at(e, theta, X, y);
    return out;
  }
  Eigen::VectorXd r = v - y;
  double sse = r.squaredNorm();
  if (!std::isfinite(sse)) {
    out.jacobian_bad = true;
    return out;
  }
  double lambda = 1e-3;
  const int k = static_cast<int>(theta.size());
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    Eigen::MatrixXd A = J.transpose() * J;
    Eigen::VectorXd g = J.transpose() * r;
    Eigen::VectorXd damp = A.diagonal().cwiseMax(1e-12);
    bool accepted = false;
    Eigen::VectorXd delta(k);
    for (int tries = 0; tries < 40 && lambda < 1e14; ++tries) {
      Eigen::MatrixXd M = A;
      M.diagonal() += lambda * damp;
      delta = M.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      Eigen::VectorXd theta_try = theta + delta;
      double sse_try = sse_at(e, theta_try, X, y);
      if (sse_try <= sse) {
        theta = theta_try;
        sse = sse_try;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
    if (delta.norm() < cfg.step_tolerance * (1.0 + theta.norm())) {
      out.converged = true;
      break;
    }
    evaluate_with_gradient(e, X, theta, v, J);
    if (!J.allFinite()) break;
    r = v - y;
    if (!std::isfinite(r.squaredNorm())) break;
  }
  out.theta = theta;
  out.sse = sse;
  return out;
}

// Derivative-free fallback for expressions whose Jacobian is non-finite at
// the start point (log/sqrt domain edges).
LmOutcome nelder_mead(const Expression& e, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& theta0) {
  const int k = static_cast<int>(theta0.size());
  auto f = [&](const Eigen::VectorXd& t) { return sse_at(e, t, X, y); };
  std::vector<Eigen::VectorXd> pts(k + 1, theta0);
  std::vector<double> val(k + 1);
  for (int i = 0; i < k; ++i) pts[i + 1][i] += (theta0[i] != 0.0 ? 0.25 * std::abs(theta0[i]) : 0.25);
  for (int i = 0; i <= k; ++i) val[i] = f(pts[i]);
  int evals = 0;
  const int max_evals = 200 * k + 200;
  auto order = [&] {
    std::vector<int> idx(k + 1);
    for (int i = 0; i <= k; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
    std::vector<Eigen::VectorXd> p2;
    std::vector<double> v2;
    for (int i : idx) {
      p2.push_back(pts[i]);
      v2.push_back(val[i]);
    }
    pts = std::move(p2);
    val = std::move(v2);
  };
  order();
  while (evals < max_evals) {
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) centroid += pts[i];
    centroid /= static_cast<double>(k);
    Eigen::VectorXd xr = centroid + (centroid - pts[k]);
    double fr = f(xr);
    ++evals;
    if (fr < val[0]) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - pts[k]);
      double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[k] = xe;
        val[k] = fe;
      } else {
        pts[k] = xr;
        val[k] = fr;
      }
    } else if (fr < val[k - 1]) {
      pts[k] = xr;
      val[k] = fr;
    } else {
      Eigen::VectorXd xc = centroid + 0.5 * (pts[k] - centroid);
      double fc = f(xc);
      ++evals;
      if (fc < val[k]) {
        pts[k] = xc;
        val[k] = fc;
      } else {
        for (int i = 1; i <= k; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          val[i] = f(pts[i]);
          ++evals;
        }
      }
    }
    order();
    if (std::isfinite(val[0]) && std::isfinite(val[k]) && val[k] - val[0] < 1e-12 * (1.0 + val[0])) break;
  }
  LmOutcome out;
  out.theta = pts[0];
  out.sse = val[0];
  return out;
}

double log_likelihood_from_sse(double sse, Eigen::Index n, const EvidenceConfig& cfg) {
  if (!std::isfinite(sse)) return -kInf;
  double nd = static_cast<double>(n);
  if (cfg.fixed_noise_sigma) {
    double s2 = (*cfg.fixed_noise_sigma) * (*cfg.fixed_noise_sigma);
    return -0.5 * nd * std::log(kTwoPi * s2) - sse / (2.0 * s2);
  }
  double s2 = std::max(sse / nd, 1e-12);  // floor against exact interpolation
  return -0.5 * nd * (std::log(kTwoPi * s2) + 1.0);
}

}  // namespace

FitResult fit_params(const Expression& e, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const EvidenceConfig& cfg, Rng& rng) {
  FitResult res;
  const int k = e.num_params();
  if (k == 0) {
    res.theta_star = Eigen::VectorXd(0);
    double sse = sse_at(e, res.theta_star, X, y);
    res.log_likelihood = log_likelihood_from_sse(sse, y.size(), cfg);
    res.converged = std::isfinite(sse);
    return res;
  }
  std::vector<Eigen::VectorXd> inits;
  if (static_cast<int>(e.params.size()) == k) {
    Eigen::VectorXd hint = Eigen::Map<const Eigen::VectorXd>(e.params.data(), k);
    if (hint.allFinite()) inits.push_back(hint);
  }
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    Eigen::VectorXd t(k);
    for (int i = 0; i < k; ++i) t[i] = rng.normal(0.0, cfg.init_stddev);
    inits.push_back(std::move(t));
  }
  double best_sse = kInf;
  Eigen::VectorXd best_theta;
  for (const auto& init : inits) {
    LmOutcome o = levenberg_marquardt(e, X, y, init, cfg);
    if (o.jacobian_bad) o = nelder_mead(e, X, y, init);
    ++res.n_restarts_used;
    if (o.sse < best_sse) {
      best_sse = o.sse;
      best_theta = o.theta;
    }
  }
  if (!std::isfinite(best_sse)) {
    res.theta_star = inits.front();
    res.converged = false;
    res.log_likelihood = -kInf;
    return res;
  }
  res.theta_star = best_theta;
  res.log_likelihood = log_likelihood_from_sse(best_sse, y.size(), cfg);
  res.converged = true;
  return res;
}

FitResult log_nml(const Expression& e, const Dataset& data, const EvidenceConfig& cfg, Rng& rng) {
  Eigen::MatrixXd X = data.x_rows(Split::Train);
  Eigen::VectorXd y = data.y_rows(Split::Train);
  FitResult res = fit_params(e, X, y, cfg, rng);
  bool profiled = !cfg.fixed_noise_sigma.has_value();
  res.n_params = e.num_params() + ((profiled && cfg.count_noise_param) ? 1 : 0);
  double nd = static_cast<double>(y.size());
  double gamma = 1.0 / std::sqrt(nd);
  if (gamma >= 1.0) {
    res.log_nml = 0.0;  // single observation: q = 1 for every expression
    return res;
  }
  if (!std::isfinite(res.log_likelihood)) {
    res.log_nml = -kInf;
    return res;
  }
  res.log_nml = 0.5 * res.n_params * std::log(gamma) + (1.0 - gamma) * res.log_likelihood;
  return res;
}

double mse_at(const Expression& e, const Eigen::VectorXd& theta, const Eigen::MatrixXd& X,
              const Eigen::VectorXd& y) {
  Eigen::VectorXd v = evaluate(e, X, theta);
  double s = (v - y).squaredNorm() / static_cast<double>(y.size());
  return std::isfinite(s) ? s : kInf;
}

double mse(const Expression& e, const Dataset& data, Split split) {
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(e.params.data(), e.params.size());
  return mse_at(e, theta, data.x_rows(split), data.y_rows(split));
}

double nrmse_at(const Expression& e, const Eigen::VectorXd& theta, const Dataset& data, Split split) {
  double m = mse_at(e, theta, data.x_rows(split), data.y_rows(split));
  return std::sqrt(m) / data.magnitude;
}

double nrmse(const Expression& e, const Dataset& data, Split split) {
  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(e.params.data(), e.params.size());
  return nrmse_at(e, theta, data, split);
}

std::string cache_key(const Expression& e, const Dataset& data, const EvidenceConfig& cfg) {
  std::ostringstream os;
  os << structural_key(e) << '|' << std::hex << fingerprint(data) << '|' << std::dec
     << cfg.restarts << ',' << cfg.init_stddev << ',' << cfg.count_noise_param << ','
     << (cfg.fixed_noise_sigma ? *cfg.fixed_noise_sigma : -1.0);
  return os.str();
}

const FitResult& EvidenceCache::log_nml(const Expression& e, const Dataset& data,
                                        const EvidenceConfig& cfg, std::uint64_t seed) {
  std::string key = cache_key(e, data, cfg);
  auto it = map_.find(key);
  if (it != map_.end()) return it->second;
  Rng rng(derive_seed(seed, stream::kReport, std::hash<std::string>{}(key)));
  // Fit the canonical form so every member of a structural class shares the
  // same parameterization.
  FitResult res = smcsr::log_nml(canonicalize(e), data, cfg, rng);
  return map_.emplace(std::move(key), std::move(res)).first->second;
}

}  // namespace smcsr
