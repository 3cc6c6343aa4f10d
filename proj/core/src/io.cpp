#include "smcsr/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "smcsr/parse.hpp"

namespace smcsr {

using nlohmann::json;

namespace {

json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

double number_from(const json& v, double fallback) {
  if (v.is_null()) return fallback;
  return v.get<double>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw config_error(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw config_error(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw config_error(path + ": " + ex.what());
  }
}

GenerationConfig generation_from_json(const json& j) {
  check_keys(j, {"operators", "max_nodes", "max_depth", "terminal_probability",
                 "constant_probability"},
             "generation");
  GenerationConfig cfg;
  if (auto it = j.find("operators"); it != j.end()) {
    cfg.operator_set.clear();
    for (const auto& name : *it) {
      Op op;
      if (!op_from_name(name.get<std::string>(), op) || arity(op) == 0)
        throw config_error("generation.operators: unknown operator '" +
                           name.get<std::string>() + "'");
      cfg.operator_set.push_back(op);
    }
    if (cfg.operator_set.empty()) throw config_error("generation.operators must be non-empty");
  }
  read_field(j, "max_nodes", cfg.max_nodes);
  read_field(j, "max_depth", cfg.max_depth);
  read_field(j, "terminal_probability", cfg.terminal_probability);
  read_field(j, "constant_probability", cfg.constant_probability);
  if (cfg.max_nodes < 1 || cfg.max_depth < 1) throw config_error("generation limits must be >= 1");
  return cfg;
}

VariationConfig variation_from_json(const json& j) {
  check_keys(j, {"crossover_probability", "mutation_probability", "mutation_kind_weights",
                 "max_nodes"},
             "variation");
  VariationConfig cfg;
  read_field(j, "crossover_probability", cfg.crossover_probability);
  read_field(j, "mutation_probability", cfg.mutation_probability);
  if (auto it = j.find("mutation_kind_weights"); it != j.end()) {
    if (!it->is_array() || it->size() != 4)
      throw config_error("variation.mutation_kind_weights needs 4 entries");
    for (size_t k = 0; k < 4; ++k) cfg.mutation_kind_weights[k] = (*it)[k].get<double>();
  }
  read_field(j, "max_nodes", cfg.max_nodes);
  return cfg;
}

EvidenceConfig evidence_from_json(const json& j) {
  check_keys(j, {"restarts", "init_stddev", "max_iterations", "step_tolerance",
                 "count_noise_param", "fixed_noise_sigma"},
             "evidence");
  EvidenceConfig cfg;
  read_field(j, "restarts", cfg.restarts);
  read_field(j, "init_stddev", cfg.init_stddev);
  read_field(j, "max_iterations", cfg.max_iterations);
  read_field(j, "step_tolerance", cfg.step_tolerance);
  read_field(j, "count_noise_param", cfg.count_noise_param);
  if (auto it = j.find("fixed_noise_sigma"); it != j.end() && !it->is_null())
    cfg.fixed_noise_sigma = it->get<double>();
  return cfg;
}

SmcConfig smc_config_from_json(const json& j) {
  check_keys(j, {"population_size", "n_mcmc", "ess_target_fraction", "seed", "workers",
                 "record_snapshots", "generation", "variation", "evidence", "enumerated_space"},
             "smc");
  SmcConfig cfg;
  read_field(j, "population_size", cfg.population_size);
  read_field(j, "n_mcmc", cfg.n_mcmc);
  read_field(j, "ess_target_fraction", cfg.ess_target_fraction);
  read_field(j, "seed", cfg.seed);
  read_field(j, "workers", cfg.workers);
  read_field(j, "record_snapshots", cfg.record_snapshots);
  if (auto it = j.find("generation"); it != j.end()) cfg.generation = generation_from_json(*it);
  if (auto it = j.find("variation"); it != j.end()) cfg.variation = variation_from_json(*it);
  if (auto it = j.find("evidence"); it != j.end()) cfg.evidence = evidence_from_json(*it);
  read_field(j, "enumerated_space", cfg.enumerated_space);
  if (cfg.population_size < 2) throw config_error("smc.population_size must be >= 2");
  if (cfg.n_mcmc < 1) throw config_error("smc.n_mcmc must be >= 1");
  if (!(cfg.ess_target_fraction > 0.0 && cfg.ess_target_fraction <= 1.0))
    throw config_error("smc.ess_target_fraction must be in (0, 1]");
  return cfg;
}

GpConfig gp_config_from_json(const json& j) {
  check_keys(j, {"variant", "population_size", "n_generations", "selection", "tournament_size",
                 "seed", "workers", "generation", "variation", "evidence"},
             "gp");
  GpConfig cfg;
  if (auto it = j.find("variant"); it != j.end()) {
    if (!gp_variant_from_name(it->get<std::string>(), cfg.variant))
      throw config_error("gp.variant must be gp-mse, gp-nml or gp-agg");
  }
  cfg.selection = (cfg.variant == GpVariant::Agg) ? GpSelection::Tournament
                                                  : GpSelection::DeterministicCrowding;
  if (auto it = j.find("selection"); it != j.end()) {
    std::string s = it->get<std::string>();
    if (s == "crowding") cfg.selection = GpSelection::DeterministicCrowding;
    else if (s == "tournament") cfg.selection = GpSelection::Tournament;
    else throw config_error("gp.selection must be crowding or tournament");
  }
  read_field(j, "population_size", cfg.population_size);
  read_field(j, "n_generations", cfg.n_generations);
  read_field(j, "tournament_size", cfg.tournament_size);
  read_field(j, "seed", cfg.seed);
  read_field(j, "workers", cfg.workers);
  if (auto it = j.find("generation"); it != j.end()) cfg.generation = generation_from_json(*it);
  if (auto it = j.find("variation"); it != j.end()) cfg.variation = variation_from_json(*it);
  if (auto it = j.find("evidence"); it != j.end()) cfg.evidence = evidence_from_json(*it);
  if (cfg.population_size < 2) throw config_error("gp.population_size must be >= 2");
  if (cfg.n_generations < 1) throw config_error("gp.n_generations must be >= 1");
  return cfg;
}

ProblemSpec problem_spec_from_json(const json& j) {
  check_keys(j, {"name", "expression", "ranges", "n_total", "n_train", "noise_fraction",
                 "noise_sigma", "seed"},
             "problem");
  ProblemSpec spec;
  if (!j.contains("name") || !j.contains("expression") || !j.contains("ranges"))
    throw config_error("problem spec needs name, expression and ranges");
  spec.name = j.at("name").get<std::string>();
  spec.expression = j.at("expression").get<std::string>();
  for (const auto& r : j.at("ranges")) {
    check_keys(r, {"low", "high"}, "problem.ranges");
    Range range;
    range.low = r.at("low").get<double>();
    range.high = r.at("high").get<double>();
    spec.ranges.push_back(range);
  }
  read_field(j, "n_total", spec.n_total);
  read_field(j, "n_train", spec.n_train);
  read_field(j, "noise_fraction", spec.noise_fraction);
  if (auto it = j.find("noise_sigma"); it != j.end() && !it->is_null())
    spec.noise_sigma = it->get<double>();
  read_field(j, "seed", spec.seed);
  return spec;
}

json problem_spec_to_json(const ProblemSpec& spec) {
  json ranges = json::array();
  for (const auto& r : spec.ranges) ranges.push_back({{"low", r.low}, {"high", r.high}});
  json j{{"name", spec.name},
         {"expression", spec.expression},
         {"ranges", ranges},
         {"n_total", spec.n_total},
         {"n_train", spec.n_train},
         {"noise_fraction", spec.noise_fraction},
         {"seed", spec.seed}};
  if (spec.noise_sigma) j["noise_sigma"] = *spec.noise_sigma;
  return j;
}

CampaignConfig campaign_config_from_json(const json& j) {
  check_keys(j, {"problems", "algorithms", "selections", "repetitions", "seed", "smc", "gp"},
             "campaign");
  CampaignConfig cfg;
  if (auto it = j.find("problems"); it != j.end()) {
    for (const auto& p : *it) {
      if (p.is_string()) {
        auto spec = builtin_spec(p.get<std::string>());
        if (!spec) throw config_error("unknown builtin problem '" + p.get<std::string>() + "'");
        cfg.specs.push_back(*spec);
      } else {
        cfg.specs.push_back(problem_spec_from_json(p));
      }
    }
  } else {
    cfg.specs = builtin_problem_specs();
  }
  read_field(j, "algorithms", cfg.algorithms);
  read_field(j, "selections", cfg.selections);
  read_field(j, "repetitions", cfg.repetitions);
  read_field(j, "seed", cfg.seed);
  if (auto it = j.find("smc"); it != j.end()) cfg.smc = smc_config_from_json(*it);
  if (auto it = j.find("gp"); it != j.end()) cfg.gp = gp_config_from_json(*it);
  if (cfg.repetitions < 1) throw config_error("campaign.repetitions must be >= 1");
  for (const auto& a : cfg.algorithms) {
    GpVariant v;
    if (a != "smc" && !gp_variant_from_name(a, v))
      throw config_error("campaign.algorithms: unknown algorithm '" + a + "'");
  }
  for (const auto& s : cfg.selections) {
    SelectionMethod m;
    if (!selection_from_name(s, m))
      throw config_error("campaign.selections: unknown selection '" + s + "'");
  }
  return cfg;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write " + path);
  out.precision(17);
  return out;
}

json trace_record(int step, json phi, json delta_phi, json ess_pre, json ess_post,
                  double accept_rate, json mean_log_nml, json max_log_nml, long long unique_in_pop,
                  long long unique_total, long long unique_accepted_total) {
  return json{{"step", step},
              {"phi", std::move(phi)},
              {"delta_phi", std::move(delta_phi)},
              {"ess_pre", std::move(ess_pre)},
              {"ess_post", std::move(ess_post)},
              {"accept_rate", accept_rate},
              {"mean_log_nml", std::move(mean_log_nml)},
              {"max_log_nml", std::move(max_log_nml)},
              {"unique_in_pop", unique_in_pop},
              {"unique_total", unique_total},
              {"unique_accepted_total", unique_accepted_total}};
}

}  // namespace

void write_trace_jsonl(const std::string& path, const SmcTrace& trace) {
  std::ofstream out = open_out(path);
  for (const auto& s : trace.steps) {
    out << trace_record(s.step, s.phi, s.delta_phi, s.ess_pre, s.ess_post, s.accept_rate,
                        number_or_null(s.mean_log_nml), number_or_null(s.max_log_nml),
                        s.unique_in_pop, s.unique_total, s.unique_accepted_total)
               .dump()
        << '\n';
  }
}

void write_trace_jsonl(const std::string& path, const GpTrace& trace, GpVariant variant) {
  std::ofstream out = open_out(path);
  const bool has_nml = variant == GpVariant::Nml;
  for (const auto& s : trace.steps) {
    out << trace_record(s.generation, nullptr, nullptr, nullptr, nullptr, s.accept_rate,
                        has_nml ? number_or_null(s.mean_log_nml) : json(nullptr),
                        has_nml ? number_or_null(s.max_log_nml) : json(nullptr), s.unique_in_pop,
                        s.unique_total, s.unique_accepted_total)
               .dump()
        << '\n';
  }
}

void write_population_json(const std::string& path, const std::vector<ClassSummary>& classes) {
  json arr = json::array();
  for (const auto& cs : classes) {
    arr.push_back({{"expression", format(cs.expr)},
                   {"params", cs.expr.params},
                   {"log_nml", number_or_null(cs.log_nml)},
                   {"count", cs.count}});
  }
  open_out(path) << arr.dump(2) << '\n';
}

void write_snapshots_json(const std::string& path, const std::vector<Snapshot>& snapshots) {
  json arr = json::array();
  for (const auto& s : snapshots) {
    json lnq = json::array();
    for (double v : s.log_nml) lnq.push_back(number_or_null(v));
    arr.push_back({{"phi", s.phi}, {"log_nml", std::move(lnq)}});
  }
  open_out(path) << arr.dump() << '\n';
}

void write_selection_report(const std::string& path, const json& report) {
  open_out(path) << report.dump(2) << '\n';
}

std::string campaign_csv_header() {
  return "problem,algorithm,repetition,selection,nrmse_train,nrmse_test,min_nrmse_test_pop,"
         "complexity,n_params,ground_truth_hit,steps,generations,status";
}

std::string campaign_row_csv(const CampaignRow& row) {
  std::ostringstream os;
  os.precision(17);
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    if (std::isnan(v)) s << "nan";
    else if (std::isinf(v)) s << (v > 0 ? "inf" : "-inf");
    else s << v;
    return s.str();
  };
  os << row.problem << ',' << row.algorithm << ',' << row.repetition << ',' << row.selection << ','
     << num(row.nrmse_train) << ',' << num(row.nrmse_test) << ',' << num(row.min_nrmse_test_pop)
     << ',' << row.complexity << ',' << row.n_params << ',' << (row.ground_truth_hit ? 1 : 0)
     << ',' << row.steps << ',' << row.generations << ',' << row.status;
  return os.str();
}

void write_campaign_csv(const std::string& path, const std::vector<CampaignRow>& rows) {
  std::ofstream out = open_out(path);
  out << campaign_csv_header() << '\n';
  for (const auto& r : rows) out << campaign_row_csv(r) << '\n';
}

namespace {

CampaignRow parse_campaign_row(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) f.push_back(tok);
  if (f.size() < 13) throw config_error("malformed campaign row: " + line);
  auto num = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::stod(s);
  };
  CampaignRow r;
  r.problem = f[0];
  r.algorithm = f[1];
  r.repetition = std::stoi(f[2]);
  r.selection = f[3];
  r.nrmse_train = num(f[4]);
  r.nrmse_test = num(f[5]);
  r.min_nrmse_test_pop = num(f[6]);
  r.complexity = std::stoi(f[7]);
  r.n_params = std::stoi(f[8]);
  r.ground_truth_hit = f[9] == "1";
  r.steps = std::stoi(f[10]);
  r.generations = std::stoi(f[11]);
  // status may contain commas; rejoin the tail
  r.status = f[12];
  for (size_t k = 13; k < f.size(); ++k) r.status += "," + f[k];
  return r;
}

}  // namespace

std::vector<CampaignRow> read_campaign_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != campaign_csv_header())
    throw config_error(path + ": unexpected CSV header");
  std::vector<CampaignRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(parse_campaign_row(line));
  }
  return rows;
}

namespace {

json series_to_json(const FigureSeries& fs) {
  json compute = json::array(), err = json::array(), phi = json::array();
  for (double v : fs.compute) compute.push_back(number_or_null(v));
  for (double v : fs.min_nrmse_train) err.push_back(number_or_null(v));
  for (double v : fs.phi) phi.push_back(number_or_null(v));
  json j{{"problem", fs.problem},
         {"algorithm", fs.algorithm},
         {"repetition", fs.repetition},
         {"compute", std::move(compute)},
         {"min_nrmse_train", std::move(err)}};
  if (!fs.phi.empty()) j["phi"] = std::move(phi);
  return j;
}

FigureSeries series_from_json(const json& j) {
  FigureSeries fs;
  fs.problem = j.at("problem").get<std::string>();
  fs.algorithm = j.at("algorithm").get<std::string>();
  fs.repetition = j.at("repetition").get<int>();
  for (const auto& v : j.at("compute")) fs.compute.push_back(number_from(v, 0.0));
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (const auto& v : j.at("min_nrmse_train")) fs.min_nrmse_train.push_back(number_from(v, kInf));
  if (auto it = j.find("phi"); it != j.end())
    for (const auto& v : *it) fs.phi.push_back(number_from(v, 0.0));
  return fs;
}

}  // namespace

void write_figure_data_json(const std::string& path, const std::vector<FigureSeries>& series) {
  json arr = json::array();
  for (const auto& fs : series) arr.push_back(series_to_json(fs));
  open_out(path) << arr.dump() << '\n';
}

json cell_output_to_json(const CellOutput& cell) {
  json rows = json::array();
  for (const auto& r : cell.rows) rows.push_back(campaign_row_csv(r));
  json series = json::array();
  for (const auto& fs : cell.series) series.push_back(series_to_json(fs));
  return json{{"rows", std::move(rows)}, {"series", std::move(series)}};
}

CellOutput cell_output_from_json(const json& j) {
  CellOutput cell;
  // rows are stored as CSV lines so both paths share one parser
  for (const auto& r : j.at("rows")) cell.rows.push_back(parse_campaign_row(r.get<std::string>()));
  for (const auto& s : j.at("series")) cell.series.push_back(series_from_json(s));
  return cell;
}

}  // namespace smcsr
