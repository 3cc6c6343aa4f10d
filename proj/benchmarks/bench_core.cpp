// Micro-benchmarks for the hot paths of the engine: batched expression
// evaluation, parameter fitting with evidence computation, resampling, and
// canonicalization.
#include <benchmark/benchmark.h>

#include <vector>

#include "smcsr/evidence.hpp"
#include "smcsr/expr.hpp"
#include "smcsr/parse.hpp"
#include "smcsr/smc.hpp"

namespace {

using namespace smcsr;

GenerationConfig full_ops() {
  GenerationConfig cfg;
  cfg.operator_set = {Op::Add, Op::Sub, Op::Mul, Op::Div,
                      Op::Sin, Op::Cos, Op::Exp, Op::Sqrt};
  return cfg;
}

Dataset bench_dataset(int rows) {
  Eigen::MatrixXd X(rows, 2);
  Rng rng(7);
  for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(0.5, 3.0);
  Eigen::VectorXd y = X.col(0).array() * X.col(1).array() + 0.5;
  return make_dataset(X, y);
}

void BM_Evaluate(benchmark::State& state) {
  Rng rng(11);
  std::vector<Expression> exprs;
  for (int i = 0; i < 64; ++i) exprs.push_back(generate_random(full_ops(), 2, rng));
  Dataset d = bench_dataset(static_cast<int>(state.range(0)));
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(exprs[i % exprs.size()], d.X));
    ++i;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(32)->Arg(256)->Arg(2048);

void BM_FitAndEvidence(benchmark::State& state) {
  Dataset d = bench_dataset(64);
  Expression e = parse("c0 * x0 * x1 + c1");
  e.params = {0.5, 0.5};
  EvidenceConfig cfg;
  cfg.restarts = static_cast<int>(state.range(0));
  Rng rng(17);
  for (auto _ : state) {
    FitResult fit = log_nml(e, d, cfg, rng);
    benchmark::DoNotOptimize(fit.log_nml);
  }
}
BENCHMARK(BM_FitAndEvidence)->Arg(1)->Arg(3);

void BM_Resample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng wrng(3);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& v : w) total += (v = wrng.uniform(0.1, 1.0));
  for (double& v : w) v /= total;
  Rng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(stratified_resample_indices(w, rng));
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_Resample)->Arg(500)->Arg(5000);

void BM_Canonicalize(benchmark::State& state) {
  Rng rng(13);
  std::vector<Expression> exprs;
  for (int i = 0; i < 128; ++i) exprs.push_back(generate_random(full_ops(), 2, rng));
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(canonicalize(exprs[i % exprs.size()]));
    ++i;
  }
}
BENCHMARK(BM_Canonicalize);

}  // namespace

BENCHMARK_MAIN();
