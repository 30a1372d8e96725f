#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coldrec/data/split.hpp"
#include "coldrec/data/synth.hpp"
#include "coldrec/json_util.hpp"
#include "coldrec/recsys/pipeline.hpp"

namespace coldrec::experiments {

// One grid cell family: a model configuration evaluated over folds x seeds.
struct AblationConfig {
  std::string label;  // defaults to default_label(fit)
  recsys::FitConfig fit;
  std::size_t k = 5;
  std::size_t folds = 3;
  std::vector<std::uint64_t> seeds = {42};
};

std::string default_label(const recsys::FitConfig& fit);

// Same fields as a train config plus label, k, folds and seeds.
AblationConfig ablation_config_from_json(const Json& json);
Json to_json(const AblationConfig& config);

struct OutputPaths {
  std::string csv;
  std::string markdown;
  std::string json;    // sidecar; defaults to the csv path with .json
  std::string timing;  // wall-clock seconds; defaults to <stem>.timing.json
};

// {
//   "synth": {...} | "data": "dir/",
//   "cold_users": 0.3, "cold_items": 0.0,
//   "defaults": {...},        // merged under every grid entry
//   "grid": [{...}, ...],
//   "output": {"csv": ..., "markdown": ..., "json": ..., "timing": ...}
// }
struct ExperimentConfig {
  std::optional<data::SynthSpec> synth;
  std::string data_dir;
  double cold_users = 0.3;
  double cold_items = 0.0;
  std::vector<AblationConfig> grid;
  OutputPaths output;
};

ExperimentConfig experiment_config_from_json(const Json& json);
ExperimentConfig load_experiment_config(const std::string& path);
// Fills the sidecar and timing paths from the csv path when they are empty.
void complete_output_paths(OutputPaths& paths);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  friend bool operator==(const Summary&, const Summary&) = default;
};

Summary summarize(const std::vector<double>& values);

struct CellResult {
  std::uint64_t seed = 0;
  std::size_t fold = 0;
  bool failed = false;
  std::string error;
  double mse = 0.0;
  double precision = 0.0;
  double ndcg = 0.0;
  std::size_t users_evaluated = 0;
  std::size_t pseudo_kept = 0;
  friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct ReportRow {
  std::string label;
  std::size_t k = 5;
  bool failed = false;
  std::string error;  // first failing cell
  Summary mse;
  Summary precision;
  Summary ndcg;
  std::vector<CellResult> cells;  // seed-major, then fold
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct GridTiming {
  std::vector<double> row_seconds;  // summed cell time per row
  double total_seconds = 0.0;       // wall clock for the whole grid
  std::size_t jobs = 1;
};

struct GridResult {
  std::vector<ReportRow> rows;
  GridTiming timing;
};

struct GridOptions {
  std::size_t jobs = 1;
  bool verbose = false;  // one log line per finished cell on stderr
};

// Every config x seed x fold cell trains an implicit model for the ranking
// metrics and an explicit one for MSE. Synthetic data is regenerated per
// seed; splits depend on (seed, folds) only, so all configs see the same
// scenarios. A failing cell marks its row failed without stopping the grid.
GridResult run_ablation_grid(const ExperimentConfig& config, const GridOptions& options = {});

// Runs one cell. Exposed for the acceptance checks and tests.
CellResult run_cell(const AblationConfig& config, const data::DatasetBundle& bundle,
                    const data::ColdStartScenario& scenario, std::uint64_t seed,
                    std::size_t fold);

// Header `Models,MSE,Precision@K,NDCG`, values to 2 decimals; failed rows
// print `failed`. ArgumentError on empty rows.
std::string report_csv(const std::vector<ReportRow>& rows);
std::string report_markdown(const std::vector<ReportRow>& rows);
Json report_to_json(const std::vector<ReportRow>& rows);
std::vector<ReportRow> report_from_json(const Json& json);
Json timing_to_json(const std::vector<ReportRow>& rows, const GridTiming& timing);

void write_reports(const GridResult& result, const OutputPaths& paths);

}  // namespace coldrec::experiments
