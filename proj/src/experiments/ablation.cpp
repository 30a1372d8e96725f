#include "coldrec/experiments/ablation.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "coldrec/data/csv.hpp"
#include "coldrec/experiments/harness.hpp"
#include "coldrec/recsys/config.hpp"

namespace coldrec::experiments {

std::string default_label(const recsys::FitConfig& fit) {
  switch (fit.spec.kind) {
    case recsys::ModelKind::kMf:
      return "MF";
    case recsys::ModelKind::kNeumf:
      return "NeuMF";
    case recsys::ModelKind::kMultimodal:
      break;
  }
  std::string label = "Multimodal-" + fusion::to_string(fit.spec.fusion.mode);
  if (fit.vae.enabled) label += "+VAE";
  if (fit.spec.side_features) label += "+side";
  return label;
}

AblationConfig ablation_config_from_json(const Json& json) {
  ObjectReader r(json, "grid entry");
  AblationConfig c;
  const std::string label = r.text("label", "");
  c.k = r.count("k", c.k);
  c.folds = r.count("folds", c.folds);
  const auto seeds = r.counts("seeds", {42});
  c.seeds.assign(seeds.begin(), seeds.end());
  c.fit = recsys::read_fit_config(r);
  r.finish();
  c.label = label.empty() ? default_label(c.fit) : label;
  if (c.k == 0) throw ConfigError(c.label + ": k must be at least 1");
  if (c.folds < 2) throw ConfigError(c.label + ": folds must be at least 2");
  if (c.seeds.empty()) throw ConfigError(c.label + ": seeds must not be empty");
  return c;
}

Json to_json(const AblationConfig& c) {
  Json j = recsys::to_json(c.fit);
  j["label"] = c.label;
  j["k"] = c.k;
  j["folds"] = c.folds;
  j["seeds"] = c.seeds;
  return j;
}

void complete_output_paths(OutputPaths& p) {
  namespace fs = std::filesystem;
  if (p.csv.empty()) p.csv = "report.csv";
  fs::path stem(p.csv);
  stem.replace_extension();
  if (p.json.empty()) p.json = stem.string() + ".json";
  if (p.timing.empty()) p.timing = stem.string() + ".timing.json";
}

ExperimentConfig experiment_config_from_json(const Json& json) {
  ObjectReader r(json, "experiment");
  ExperimentConfig c;
  if (r.has("synth")) c.synth = data::synth_spec_from_json(r.raw("synth"));
  c.data_dir = r.text("data", "");
  if (c.synth.has_value() == !c.data_dir.empty()) {
    throw ConfigError("experiment: give exactly one of \"synth\" and \"data\"");
  }
  c.cold_users = r.number("cold_users", c.cold_users);
  c.cold_items = r.number("cold_items", c.cold_items);
  if (!(c.cold_users >= 0.0 && c.cold_users <= 0.9) || !(c.cold_items >= 0.0 && c.cold_items <= 0.9)) {
    throw ConfigError("experiment: cold fractions must lie in [0, 0.9]");
  }
  Json defaults = Json::object();
  if (r.has("defaults")) {
    defaults = r.raw("defaults");
    if (!defaults.is_object()) throw ConfigError("experiment.defaults must be an object");
  }
  const Json& grid = r.raw("grid");
  if (!grid.is_array() || grid.empty()) throw ConfigError("experiment.grid must be a nonempty array");
  std::set<std::string> labels;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!grid[k].is_object()) throw ConfigError(fmt::format("experiment.grid[{}] must be an object", k));
    Json entry = defaults;
    entry.merge_patch(grid[k]);
    AblationConfig cell;
    try {
      cell = ablation_config_from_json(entry);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("experiment.grid[{}]: {}", k, e.what()));
    }
    if (!labels.insert(cell.label).second) {
      throw ConfigError("experiment: duplicate row label '" + cell.label + "'");
    }
    c.grid.push_back(std::move(cell));
  }
  if (r.has("output")) {
    ObjectReader o(r.raw("output"), "experiment.output");
    c.output.csv = o.text("csv", "");
    c.output.markdown = o.text("markdown", "");
    c.output.json = o.text("json", "");
    c.output.timing = o.text("timing", "");
    o.finish();
  }
  r.finish();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(parse_json_file(path));
}

Summary summarize(const std::vector<double>& v) {
  Summary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

CellResult run_cell(const AblationConfig& c, const data::DatasetBundle& bundle,
                    const data::ColdStartScenario& scenario, std::uint64_t seed, std::size_t fold) {
  CellResult out;
  out.seed = seed;
  out.fold = fold;
  const data::Dataset& d = bundle.dataset;
  const std::uint64_t cell_seed = derive_seed(derive_seed(seed, 2), fold);

  std::optional<recsys::FeatureSet> features;
  if (c.fit.spec.kind == recsys::ModelKind::kMultimodal) {
    features = feature_set_for(bundle, c.fit.spec.side_features);
  }
  const recsys::FeatureSet* fp = features ? &*features : nullptr;

  const auto implicit = train_data_for(d, scenario.train, Feedback::kImplicit);
  const auto cold = cold_sets_for(implicit);
  recsys::FitConfig fi = c.fit;
  fi.spec.feedback = Feedback::kImplicit;
  const auto ranker = recsys::fit_model(fi, implicit, fp, cold, derive_seed(cell_seed, 1));

  const auto explicit_data = train_data_for(d, scenario.train, Feedback::kExplicit);
  recsys::FitConfig fe = c.fit;
  fe.spec.feedback = Feedback::kExplicit;
  const auto rater = recsys::fit_model(fe, explicit_data, fp, cold, derive_seed(cell_seed, 2));

  const auto report =
      evaluate_split(*ranker.scorer, rater.scorer.get(), d, scenario.train, scenario.test, c.k);
  out.mse = report.mse;
  out.precision = report.precision_at_k;
  out.ndcg = report.ndcg_at_k;
  out.users_evaluated = report.users_evaluated;
  out.pseudo_kept = ranker.pseudo_kept;
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SeedData {
  std::optional<data::DatasetBundle> bundle;
  std::string error;
  std::map<std::size_t, std::vector<data::ColdStartScenario>> scenarios;  // by fold count
  std::map<std::size_t, std::string> scenario_errors;
};

struct Task {
  std::size_t row;
  std::size_t slot;
  std::uint64_t seed;
  std::size_t fold;
};

}  // namespace

GridResult run_ablation_grid(const ExperimentConfig& config, const GridOptions& options) {
  if (config.grid.empty()) throw ArgumentError("ablation grid is empty");
  const auto grid_start = Clock::now();

  // Datasets and splits are built up front, single-threaded.
  std::optional<data::DatasetBundle> shared;
  std::string shared_error;
  if (!config.synth) {
    try {
      shared = data::load_dataset_dir(config.data_dir);
    } catch (const Error& e) {
      shared_error = e.what();
    }
  }
  std::map<std::uint64_t, SeedData> seeds;
  for (const auto& c : config.grid) {
    for (std::uint64_t s : c.seeds) {
      SeedData& sd = seeds[s];
      if (!sd.bundle && sd.error.empty()) {
        if (config.synth) {
          try {
            data::SynthSpec spec = *config.synth;
            spec.seed = derive_seed(config.synth->seed, s);
            sd.bundle = data::synth_generate(spec).bundle;
          } catch (const Error& e) {
            sd.error = e.what();
          }
        } else if (shared) {
          sd.bundle = *shared;
        } else {
          sd.error = shared_error;
        }
      }
      if (sd.bundle && !sd.scenarios.count(c.folds) && !sd.scenario_errors.count(c.folds)) {
        try {
          sd.scenarios[c.folds] = data::cold_start_folds(sd.bundle->dataset, config.cold_users,
                                                         config.cold_items, c.folds, derive_seed(s, 1));
        } catch (const Error& e) {
          sd.scenario_errors[c.folds] = e.what();
        }
      }
    }
  }

  GridResult result;
  result.rows.resize(config.grid.size());
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < config.grid.size(); ++r) {
    const auto& c = config.grid[r];
    result.rows[r].label = c.label;
    result.rows[r].k = c.k;
    result.rows[r].cells.resize(c.seeds.size() * c.folds);
    for (std::size_t si = 0; si < c.seeds.size(); ++si) {
      for (std::size_t f = 0; f < c.folds; ++f) tasks.push_back({r, si * c.folds + f, c.seeds[si], f});
    }
  }
  std::vector<double> cell_seconds(tasks.size(), 0.0);

  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      const AblationConfig& c = config.grid[task.row];
      const SeedData& sd = seeds.at(task.seed);
      const auto start = Clock::now();
      CellResult cell;
      try {
        if (!sd.bundle) throw Error("dataset: " + sd.error);
        if (auto e = sd.scenario_errors.find(c.folds); e != sd.scenario_errors.end()) {
          throw Error("split: " + e->second);
        }
        cell = run_cell(c, *sd.bundle, sd.scenarios.at(c.folds)[task.fold], task.seed, task.fold);
      } catch (const std::exception& e) {
        cell = CellResult{};
        cell.seed = task.seed;
        cell.fold = task.fold;
        cell.failed = true;
        cell.error = e.what();
      }
      cell_seconds[t] = seconds_since(start);
      result.rows[task.row].cells[task.slot] = std::move(cell);
      if (options.verbose) {
        const CellResult& done = result.rows[task.row].cells[task.slot];
        std::lock_guard<std::mutex> lock(log_mutex);
        if (done.failed) {
          fmt::print(stderr, "{} seed {} fold {}: FAILED {}\n", c.label, task.seed, task.fold, done.error);
        } else {
          fmt::print(stderr, "{} seed {} fold {}: mse {:.4f} p@{} {:.4f} ndcg {:.4f} ({:.2f}s)\n",
                     c.label, task.seed, task.fold, done.mse, c.k, done.precision, done.ndcg,
                     cell_seconds[t]);
        }
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, tasks.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.timing.jobs = jobs;
  result.timing.row_seconds.assign(config.grid.size(), 0.0);
  for (std::size_t t = 0; t < tasks.size(); ++t) result.timing.row_seconds[tasks[t].row] += cell_seconds[t];
  for (auto& row : result.rows) {
    std::vector<double> mse, precision, ndcg;
    for (const auto& cell : row.cells) {
      if (cell.failed) {
        if (!row.failed) row.error = cell.error;
        row.failed = true;
        continue;
      }
      mse.push_back(cell.mse);
      precision.push_back(cell.precision);
      ndcg.push_back(cell.ndcg);
    }
    if (!row.failed) {
      row.mse = summarize(mse);
      row.precision = summarize(precision);
      row.ndcg = summarize(ndcg);
    }
  }
  result.timing.total_seconds = seconds_since(grid_start);
  return result;
}

namespace {

std::string two_decimals(double x) { return fmt::format("{:.2f}", x); }

void require_rows(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw ArgumentError("report needs at least one row");
}

std::vector<std::string> row_values(const ReportRow& row) {
  if (row.failed) return {"failed", "failed", "failed"};
  return {two_decimals(row.mse.mean), two_decimals(row.precision.mean), two_decimals(row.ndcg.mean)};
}

Json summary_json(const Summary& s) { return Json{{"mean", s.mean}, {"std", s.std}}; }

Summary summary_from(ObjectReader& parent, const std::string& key) {
  ObjectReader r(parent.raw(key), parent.context() + "." + key);
  Summary s{r.number("mean"), r.number("std")};
  r.finish();
  return s;
}

}  // namespace

std::string report_csv(const std::vector<ReportRow>& rows) {
  require_rows(rows);
  std::string out = "Models,MSE,Precision@K,NDCG\n";
  for (const auto& row : rows) {
    const auto v = row_values(row);
    out += data::csv_record({row.label, v[0], v[1], v[2]}) + "\n";
  }
  return out;
}

std::string report_markdown(const std::vector<ReportRow>& rows) {
  require_rows(rows);
  std::string out = "| Models | MSE | Precision@K | NDCG |\n|---|---|---|---|\n";
  for (const auto& row : rows) {
    const auto v = row_values(row);
    out += fmt::format("| {} | {} | {} | {} |\n", row.label, v[0], v[1], v[2]);
  }
  return out;
}

Json report_to_json(const std::vector<ReportRow>& rows) {
  require_rows(rows);
  Json out = Json::array();
  for (const auto& row : rows) {
    Json cells = Json::array();
    for (const auto& c : row.cells) {
      cells.push_back({{"seed", c.seed},
                       {"fold", c.fold},
                       {"failed", c.failed},
                       {"error", c.error},
                       {"mse", c.mse},
                       {"precision_at_k", c.precision},
                       {"ndcg_at_k", c.ndcg},
                       {"users_evaluated", c.users_evaluated},
                       {"pseudo_kept", c.pseudo_kept}});
    }
    out.push_back({{"label", row.label},
                   {"k", row.k},
                   {"failed", row.failed},
                   {"error", row.error},
                   {"mse", summary_json(row.mse)},
                   {"precision_at_k", summary_json(row.precision)},
                   {"ndcg_at_k", summary_json(row.ndcg)},
                   {"cells", cells}});
  }
  return Json{{"aggregation", "mean and sample std over folds x seeds"}, {"rows", out}};
}

std::vector<ReportRow> report_from_json(const Json& json) {
  ObjectReader top(json, "report");
  top.text("aggregation", "");
  const Json& rows = top.raw("rows");
  top.finish();
  if (!rows.is_array()) throw ConfigError("report.rows must be an array");
  std::vector<ReportRow> out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    ObjectReader r(rows[k], fmt::format("report.rows[{}]", k));
    ReportRow row;
    row.label = r.text("label");
    row.k = r.count("k");
    row.failed = r.flag("failed", false);
    row.error = r.text("error", "");
    row.mse = summary_from(r, "mse");
    row.precision = summary_from(r, "precision_at_k");
    row.ndcg = summary_from(r, "ndcg_at_k");
    const Json& cells = r.raw("cells");
    r.finish();
    if (!cells.is_array()) throw ConfigError(r.context() + ".cells must be an array");
    for (std::size_t j = 0; j < cells.size(); ++j) {
      ObjectReader c(cells[j], fmt::format("{}.cells[{}]", r.context(), j));
      CellResult cell;
      cell.seed = c.seed("seed", 0);
      cell.fold = c.count("fold");
      cell.failed = c.flag("failed", false);
      cell.error = c.text("error", "");
      cell.mse = c.number("mse");
      cell.precision = c.number("precision_at_k");
      cell.ndcg = c.number("ndcg_at_k");
      cell.users_evaluated = c.count("users_evaluated", 0);
      cell.pseudo_kept = c.count("pseudo_kept", 0);
      c.finish();
      row.cells.push_back(std::move(cell));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Json timing_to_json(const std::vector<ReportRow>& rows, const GridTiming& timing) {
  Json per_row = Json::array();
  for (std::size_t k = 0; k < rows.size() && k < timing.row_seconds.size(); ++k) {
    per_row.push_back({{"label", rows[k].label}, {"seconds", timing.row_seconds[k]}});
  }
  return Json{{"total_seconds", timing.total_seconds}, {"jobs", timing.jobs}, {"rows", per_row}};
}

void write_reports(const GridResult& result, const OutputPaths& given) {
  OutputPaths paths = given;
  complete_output_paths(paths);
  auto ensure_parent = [](const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  };
  for (const auto* p : {&paths.csv, &paths.markdown, &paths.json, &paths.timing}) {
    if (!p->empty()) ensure_parent(*p);
  }
  write_text_file(paths.csv, report_csv(result.rows));
  if (!paths.markdown.empty()) write_text_file(paths.markdown, report_markdown(result.rows));
  write_text_file(paths.json, report_to_json(result.rows).dump(2) + "\n");
  write_text_file(paths.timing, timing_to_json(result.rows, result.timing).dump(2) + "\n");
}

}  // namespace coldrec::experiments
