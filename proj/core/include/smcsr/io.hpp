#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "smcsr/bench.hpp"
#include "smcsr/gp.hpp"
#include "smcsr/smc.hpp"

namespace smcsr {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json load_json_file(const std::string& path);

// Config readers; every field is optional and falls back to the struct
// default, unknown keys raise config_error. Non-finite numbers are written
// as JSON null throughout the output writers.
GenerationConfig generation_from_json(const nlohmann::json& j);
VariationConfig variation_from_json(const nlohmann::json& j);
EvidenceConfig evidence_from_json(const nlohmann::json& j);
SmcConfig smc_config_from_json(const nlohmann::json& j);
GpConfig gp_config_from_json(const nlohmann::json& j);
ProblemSpec problem_spec_from_json(const nlohmann::json& j);
nlohmann::json problem_spec_to_json(const ProblemSpec& spec);
CampaignConfig campaign_config_from_json(const nlohmann::json& j);

// One JSON object per line with keys step, phi, delta_phi, ess_pre,
// ess_post, accept_rate, mean_log_nml, max_log_nml, unique_in_pop,
// unique_total, unique_accepted_total.
void write_trace_jsonl(const std::string& path, const SmcTrace& trace);
// Same record schema; phi/delta_phi/ess_* are null, and the evidence
// statistics are null for MSE-loss variants.
void write_trace_jsonl(const std::string& path, const GpTrace& trace, GpVariant variant);

// JSON array of {expression, params, log_nml, count}, one entry per
// structural class.
void write_population_json(const std::string& path, const std::vector<ClassSummary>& classes);

// JSON array of {phi, log_nml: [...]}.
void write_snapshots_json(const std::string& path, const std::vector<Snapshot>& snapshots);

// One chosen model per selection method, with its train/test errors.
void write_selection_report(const std::string& path, const nlohmann::json& report);

std::string campaign_csv_header();
std::string campaign_row_csv(const CampaignRow& row);
void write_campaign_csv(const std::string& path, const std::vector<CampaignRow>& rows);
std::vector<CampaignRow> read_campaign_csv(const std::string& path);

void write_figure_data_json(const std::string& path, const std::vector<FigureSeries>& series);

nlohmann::json cell_output_to_json(const CellOutput& cell);
CellOutput cell_output_from_json(const nlohmann::json& j);

}  // namespace smcsr
