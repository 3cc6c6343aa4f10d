// Command-line front end: smc / gp / bench / synth subcommands.
//
// Exit codes: 0 success, 2 degenerate population, 64 usage or config error,
// 65 data error.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "smcsr/bench.hpp"
#include "smcsr/io.hpp"
#include "smcsr/parse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDegenerate = 2;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_data) {
  cmd->add_option("--config", args.config_path, "JSON config file");
  auto* data = cmd->add_option("--data", args.data_path, "input dataset CSV");
  if (needs_data) data->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "master RNG seed (overrides config)");
  cmd->add_option("--workers", args.workers, "worker thread count (overrides config)");
}

// Loads the CSV plus, when present, the sibling `<stem>.split.json` manifest.
smcsr::Dataset load_data(const std::string& path) {
  smcsr::Dataset data = smcsr::load_csv(path);
  fs::path manifest = fs::path(path);
  manifest.replace_extension(".split.json");
  if (fs::exists(manifest)) smcsr::load_split_manifest(data, manifest.string());
  return data;
}

json selection_report(const std::vector<smcsr::ClassSummary>& classes,
                      const smcsr::Dataset& data) {
  json report = json::object();
  for (auto method : {smcsr::SelectionMethod::MaxNml, smcsr::SelectionMethod::Validation,
                      smcsr::SelectionMethod::Mode}) {
    if (method == smcsr::SelectionMethod::Validation && data.validation.empty()) continue;
    const smcsr::ClassSummary& sel = smcsr::select_model(classes, method, data);
    Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(sel.expr.params.data(),
                                                              sel.expr.params.size());
    json entry{{"expression", smcsr::format(sel.expr)},
               {"params", sel.expr.params},
               {"count", sel.count},
               {"complexity", smcsr::complexity(sel.expr)},
               {"nrmse_train", smcsr::nrmse_at(sel.expr, theta, data, smcsr::Split::Train)}};
    if (std::isfinite(sel.log_nml)) entry["log_nml"] = sel.log_nml;
    else entry["log_nml"] = nullptr;
    if (!data.test.empty())
      entry["nrmse_test"] = smcsr::nrmse_at(sel.expr, theta, data, smcsr::Split::Test);
    report[smcsr::selection_name(method)] = std::move(entry);
  }
  return report;
}

int run_smc_cmd(const CommonArgs& args, bool snapshots) {
  smcsr::SmcConfig cfg;
  if (!args.config_path.empty())
    cfg = smcsr::smc_config_from_json(smcsr::load_json_file(args.config_path));
  if (args.seed) cfg.seed = *args.seed;
  if (args.workers) cfg.workers = *args.workers;
  cfg.record_snapshots = cfg.record_snapshots || snapshots;

  smcsr::Dataset data = load_data(args.data_path);
  smcsr::SmcResult res = smcsr::run_smc(cfg, data);

  fs::create_directories(args.out_dir);
  fs::path out(args.out_dir);
  smcsr::write_trace_jsonl((out / "trace.jsonl").string(), res.trace);
  smcsr::EvidenceCache cache;
  auto classes = smcsr::aggregate_classes(res.population, data, cfg.evidence, cache, cfg.seed);
  smcsr::write_population_json((out / "population.json").string(), classes);
  smcsr::write_selection_report((out / "selection.json").string(),
                                selection_report(classes, data));
  if (cfg.record_snapshots)
    smcsr::write_snapshots_json((out / "snapshots.json").string(), res.trace.snapshots);
  std::cout << "smc: " << res.trace.steps.size() << " steps, " << classes.size()
            << " structural classes -> " << out.string() << "\n";
  return kExitOk;
}

int run_gp_cmd(const CommonArgs& args, const std::string& variant_name,
               std::optional<int> matched_steps) {
  smcsr::GpConfig cfg;
  if (!args.config_path.empty())
    cfg = smcsr::gp_config_from_json(smcsr::load_json_file(args.config_path));
  if (!variant_name.empty()) {
    if (!smcsr::gp_variant_from_name(variant_name, cfg.variant))
      throw smcsr::config_error("--variant must be gp-mse, gp-nml or gp-agg");
    cfg.selection = (cfg.variant == smcsr::GpVariant::Agg)
                        ? smcsr::GpSelection::Tournament
                        : smcsr::GpSelection::DeterministicCrowding;
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.workers) cfg.workers = *args.workers;
  // Compute matching against a tempered run: one generation per rejuvenation
  // sweep, 10 sweeps per step by default.
  if (matched_steps) cfg.n_generations = *matched_steps * 10;

  smcsr::Dataset data = load_data(args.data_path);
  smcsr::GpResult res = smcsr::run_gp(cfg, data);

  fs::create_directories(args.out_dir);
  fs::path out(args.out_dir);
  smcsr::write_trace_jsonl((out / "trace.jsonl").string(), res.trace, cfg.variant);
  smcsr::EvidenceCache cache;
  auto classes = smcsr::aggregate_classes(res.population, data, cfg.evidence, cache, cfg.seed);
  smcsr::write_population_json((out / "population.json").string(), classes);
  smcsr::write_selection_report((out / "selection.json").string(),
                                selection_report(classes, data));
  std::cout << smcsr::gp_variant_name(cfg.variant) << ": " << cfg.n_generations
            << " generations, " << classes.size() << " structural classes -> " << out.string()
            << "\n";
  return kExitOk;
}

int run_synth_cmd(const CommonArgs& args, const std::string& problem_name) {
  smcsr::ProblemSpec spec;
  if (!problem_name.empty()) {
    auto builtin = smcsr::builtin_spec(problem_name);
    if (!builtin) throw smcsr::config_error("unknown builtin problem '" + problem_name + "'");
    spec = *builtin;
  } else if (!args.config_path.empty()) {
    spec = smcsr::problem_spec_from_json(smcsr::load_json_file(args.config_path));
  } else {
    throw smcsr::config_error("synth needs --problem or --config");
  }
  if (args.seed) spec.seed = *args.seed;

  smcsr::Rng rng(smcsr::derive_seed(spec.seed, smcsr::stream::kSynth, 0));
  smcsr::Dataset data = smcsr::synthesize(spec, rng);

  fs::create_directories(args.out_dir);
  fs::path out(args.out_dir);
  fs::path csv = out / (spec.name + ".csv");
  fs::path manifest = out / (spec.name + ".split.json");
  smcsr::save_csv(data, csv.string());
  smcsr::save_split_manifest(data, manifest.string());
  std::ofstream spec_out(out / (spec.name + ".problem.json"));
  spec_out << smcsr::problem_spec_to_json(spec).dump(2) << "\n";
  std::cout << "synth: " << data.n_rows() << " rows (" << data.train.size() << " train, "
            << data.test.size() << " test) -> " << csv.string() << "\n";
  return kExitOk;
}

int run_bench_cmd(const CommonArgs& args) {
  smcsr::CampaignConfig cfg;
  if (!args.config_path.empty())
    cfg = smcsr::campaign_config_from_json(smcsr::load_json_file(args.config_path));
  if (args.seed) cfg.seed = *args.seed;
  if (args.workers) {
    cfg.smc.workers = *args.workers;
    cfg.gp.workers = *args.workers;
  }

  fs::create_directories(fs::path(args.out_dir) / "cells");
  smcsr::CellOutput all;
  for (const auto& spec : cfg.specs) {
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      fs::path cell_path =
          fs::path(args.out_dir) / "cells" / (spec.name + "-rep" + std::to_string(rep) + ".json");
      smcsr::CellOutput cell;
      if (fs::exists(cell_path)) {
        cell = smcsr::cell_output_from_json(smcsr::load_json_file(cell_path.string()));
        std::cout << "bench: reusing " << cell_path.string() << "\n";
      } else {
        try {
          cell = smcsr::run_campaign_cell(cfg, spec, rep);
        } catch (const std::exception& ex) {
          smcsr::CampaignRow row;
          row.problem = spec.name;
          row.algorithm = "cell";
          row.repetition = rep;
          row.status = std::string("error: ") + ex.what();
          cell.rows.push_back(row);
        }
        std::ofstream out(cell_path);
        out << smcsr::cell_output_to_json(cell).dump() << "\n";
        std::cout << "bench: finished " << spec.name << " rep " << rep << "\n";
      }
      all.rows.insert(all.rows.end(), cell.rows.begin(), cell.rows.end());
      all.series.insert(all.series.end(), cell.series.begin(), cell.series.end());
    }
  }
  fs::path out(args.out_dir);
  smcsr::write_campaign_csv((out / "results.csv").string(), all.rows);
  smcsr::write_figure_data_json((out / "figure_data.json").string(), all.series);
  std::cout << "bench: " << all.rows.size() << " result rows -> "
            << (out / "results.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tempered-posterior symbolic regression"};
  app.require_subcommand(1);

  CommonArgs smc_args, gp_args, bench_args, synth_args;
  bool snapshots = false;
  std::string gp_variant, synth_problem;
  std::optional<int> matched_steps;

  CLI::App* smc = app.add_subcommand("smc", "tempered posterior sampling over expressions");
  add_common(smc, smc_args, true);
  smc->add_flag("--snapshots", snapshots, "record per-step evidence snapshots");

  CLI::App* gp = app.add_subcommand("gp", "genetic-programming baseline");
  add_common(gp, gp_args, true);
  gp->add_option("--variant", gp_variant, "gp-mse | gp-nml | gp-agg");
  gp->add_option("--matched-steps", matched_steps,
                 "match compute to an SMC run with this many steps");

  CLI::App* bench = app.add_subcommand("bench", "run the benchmark campaign");
  add_common(bench, bench_args, false);

  CLI::App* synth = app.add_subcommand("synth", "synthesize a benchmark dataset");
  add_common(synth, synth_args, false);
  synth->add_option("--problem", synth_problem, "builtin problem name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (smc->parsed()) return run_smc_cmd(smc_args, snapshots);
    if (gp->parsed()) return run_gp_cmd(gp_args, gp_variant, matched_steps);
    if (bench->parsed()) return run_bench_cmd(bench_args);
    if (synth->parsed()) return run_synth_cmd(synth_args, synth_problem);
  } catch (const smcsr::degenerate_error& ex) {
    std::cerr << "degenerate population: " << ex.what() << "\n";
    return kExitDegenerate;
  } catch (const smcsr::config_error& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const smcsr::parse_error& ex) {
    std::cerr << "expression error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const smcsr::data_error& ex) {
    std::cerr << "data error: " << ex.what() << "\n";
    return kExitData;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
