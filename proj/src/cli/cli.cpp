#include "coldrec/cli/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "coldrec/data/csv.hpp"
#include "coldrec/data/split.hpp"
#include "coldrec/data/synth.hpp"
#include "coldrec/diagnostics/gradcheck_suite.hpp"
#include "coldrec/embeddings/encoders.hpp"
#include "coldrec/experiments/ablation.hpp"
#include "coldrec/experiments/harness.hpp"
#include "coldrec/recsys/checkpoint.hpp"
#include "coldrec/recsys/config.hpp"

namespace coldrec::cli {

namespace fs = std::filesystem;
using embeddings::EntityKind;

std::string synopsis() {
  return "usage: coldrec [--seed N] <command> [flags]\n"
         "\n"
         "commands:\n"
         "  synth            --spec spec.json --out dir/\n"
         "  train            --data dir/ --config cfg.json --model-out m.json\n"
         "                   [--cold-users F --cold-items F]\n"
         "  evaluate         --model m.json --data dir/ [--k 5] [--out metrics.json]\n"
         "  ablate           --config grid.json [--out report.csv] [--markdown report.md] [--jobs N]\n"
         "  gradcheck        --module {numerics|vae|recsys|fusion|all}\n"
         "  encode-fallback  [--text corpus.csv] [--images dir/] --out embeddings.jsonl\n"
         "                   [--vocab 32] [--grid 8]\n"
         "\n"
         "The seed comes from --seed, else COLDREC_SEED, else the config file, else 42.\n";
}

namespace {

struct SeedChoice {
  std::uint64_t value = 42;
  bool explicit_choice = false;  // from the flag or the environment
};

SeedChoice resolve_seed(const CLI::Option* flag, std::uint64_t flag_value) {
  if (flag->count() > 0) return {flag_value, true};
  if (const char* env = std::getenv("COLDREC_SEED"); env != nullptr && *env != '\0') {
    std::uint64_t v = 0;
    const char* end = env + std::char_traits<char>::length(env);
    auto [ptr, ec] = std::from_chars(env, end, v);
    if (ec != std::errc() || ptr != end) throw UsageError(fmt::format("COLDREC_SEED '{}' is not an integer", env));
    return {v, true};
  }
  return {};
}

// --- synth ---

int cmd_synth(const std::string& spec_path, const std::string& out_dir, SeedChoice seed,
              std::ostream& out) {
  data::SynthSpec spec;
  if (!spec_path.empty()) {
    const Json j = parse_json_file(spec_path);
    spec = data::synth_spec_from_json(j);
    if (!seed.explicit_choice && !j.contains("seed")) spec.seed = seed.value;
  } else {
    spec.seed = seed.value;
  }
  if (seed.explicit_choice) spec.seed = seed.value;
  const auto result = data::synth_generate(spec);
  data::write_synth_dir(result, spec, out_dir);
  out << fmt::format("wrote {} users, {} items, {} interactions to {}\n",
                     result.bundle.dataset.users.size(), result.bundle.dataset.items.size(),
                     result.bundle.dataset.interactions.size(), out_dir);
  return kExitOk;
}

// --- train / evaluate ---

struct SplitRecord {
  bool present = false;
  double cold_users = 0.0;
  double cold_items = 0.0;
  std::uint64_t seed = 0;
};

std::vector<std::size_t> all_rows(const data::Dataset& d) {
  std::vector<std::size_t> rows(d.interactions.size());
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
  return rows;
}

int cmd_train(const std::string& data_dir, const std::string& config_path,
              const std::string& model_out, const CLI::Option* cold_users_opt, double cold_users,
              double cold_items, SeedChoice seed, bool verbose, std::ostream& out,
              std::ostream& err) {
  const data::DatasetBundle bundle = data::load_dataset_dir(data_dir);
  const data::Dataset& d = bundle.dataset;
  const recsys::FitConfig config = recsys::fit_config_from_json(parse_json_file(config_path));

  SplitRecord split;
  std::vector<std::size_t> train_rows = all_rows(d);
  if (cold_users_opt->count() > 0 || cold_items > 0.0) {
    split = {true, cold_users, cold_items, derive_seed(seed.value, 1)};
    train_rows = data::build_cold_start_scenario(d, cold_users, cold_items, split.seed).train;
  }
  const auto train = experiments::train_data_for(d, train_rows, config.spec.feedback);
  std::optional<recsys::FeatureSet> features;
  if (config.spec.kind == recsys::ModelKind::kMultimodal) {
    features = experiments::feature_set_for(bundle, config.spec.side_features);
  }
  auto fit = recsys::fit_model(config, train, features ? &*features : nullptr,
                               experiments::cold_sets_for(train), derive_seed(seed.value, 2));
  if (verbose) {
    for (std::size_t e = 0; e < fit.loss_trace.size(); ++e) {
      err << fmt::format("epoch {}: loss {:.6f}\n", e + 1, fit.loss_trace[e]);
    }
  }
  Json checkpoint = recsys::checkpoint_to_json(*fit.scorer, d.users, d.items);
  checkpoint["training"] = {{"config", recsys::to_json(config)},
                            {"seed", seed.value},
                            {"train_interactions", train_rows.size()}};
  if (split.present) {
    checkpoint["training"]["split"] = {{"cold_users", split.cold_users},
                                       {"cold_items", split.cold_items},
                                       {"seed", split.seed}};
  }
  const auto parent = fs::path(model_out).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_text_file(model_out, checkpoint.dump(1) + "\n");
  out << fmt::format("trained {} on {} interactions; final loss {:.6f}; wrote {}\n",
                     to_string(config.spec.kind), train_rows.size(),
                     fit.loss_trace.empty() ? 0.0 : fit.loss_trace.back(), model_out);
  return kExitOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_dir, std::size_t k,
                 const std::string& out_path, std::ostream& out) {
  const Json json = parse_json_file(model_path);
  const recsys::CheckpointHeader header = recsys::read_checkpoint_header(json);
  const data::DatasetBundle bundle = data::load_dataset_dir(data_dir);
  const data::Dataset& d = bundle.dataset;
  if (!(header.users == d.users) || !(header.items == d.items)) {
    throw SchemaError("the dataset's user and item ids differ from the model's");
  }
  std::optional<recsys::FeatureSet> features;
  if (header.spec.kind == recsys::ModelKind::kMultimodal) {
    features = experiments::feature_set_for(bundle, header.spec.side_features);
  }
  const recsys::LoadedModel model = recsys::checkpoint_from_json(json, features ? &*features : nullptr);

  std::vector<std::size_t> train_rows, test_rows = all_rows(d);
  if (json.contains("training") && json["training"].contains("split")) {
    const Json& s = json["training"]["split"];
    const auto scenario = data::build_cold_start_scenario(
        d, s.at("cold_users").get<double>(), s.at("cold_items").get<double>(),
        s.at("seed").get<std::uint64_t>());
    train_rows = scenario.train;
    test_rows = scenario.test;
  }
  const bool rates = header.spec.feedback == Feedback::kExplicit;
  const auto report = experiments::evaluate_split(*model.scorer, rates ? model.scorer.get() : nullptr,
                                                  d, train_rows, test_rows, k);
  Json result{{"k", k},
              {"test_interactions", test_rows.size()},
              {"users_evaluated", report.users_evaluated},
              {"users_excluded", report.users_excluded},
              {"precision_at_k", report.precision_at_k},
              {"ndcg_at_k", report.ndcg_at_k}};
  out << fmt::format("precision@{} {:.4f}\nndcg@{} {:.4f}\n", k, report.precision_at_k, k,
                     report.ndcg_at_k);
  if (rates) {
    result["mse"] = report.mse;
    out << fmt::format("mse {:.4f}\n", report.mse);
  }
  out << fmt::format("users evaluated {}\n", report.users_evaluated);
  if (!out_path.empty()) write_text_file(out_path, result.dump(2) + "\n");
  return kExitOk;
}

// --- ablate ---

int cmd_ablate(const std::string& config_path, const std::string& csv, const std::string& markdown,
               std::size_t jobs, SeedChoice seed, bool verbose, std::ostream& out) {
  experiments::ExperimentConfig config = experiments::load_experiment_config(config_path);
  if (seed.explicit_choice && config.synth) config.synth->seed = seed.value;
  if (!csv.empty()) {
    config.output.csv = csv;
    config.output.json.clear();
    config.output.timing.clear();
  }
  if (!markdown.empty()) config.output.markdown = markdown;
  experiments::complete_output_paths(config.output);
  const auto result = experiments::run_ablation_grid(config, {jobs, verbose});
  experiments::write_reports(result, config.output);
  out << experiments::report_markdown(result.rows);
  out << fmt::format("wrote {} and {} in {:.1f}s\n", config.output.csv, config.output.json,
                     result.timing.total_seconds);
  for (const auto& row : result.rows) {
    if (row.failed) {
      out << fmt::format("row '{}' failed: {}\n", row.label, row.error);
    }
  }
  return kExitOk;
}

// --- gradcheck ---

int cmd_gradcheck(const std::string& module, std::ostream& out) {
  const auto cases = diagnostics::run_gradcheck_suite(module);
  std::map<std::string, double> worst;
  bool ok = true;
  for (const auto& c : cases) {
    out << fmt::format("{:<9} {:<28} max_rel_err {:.3e}  coords {:>4}  {}\n", c.module, c.name,
                       c.report.max_relative_error, c.report.coordinates,
                       c.report.passed ? "ok" : "FAIL");
    worst[c.module] = std::max(worst[c.module], c.report.max_relative_error);
    ok = ok && c.report.max_relative_error < diagnostics::kSuiteTolerance;
  }
  for (const auto& m : diagnostics::gradcheck_modules()) {
    if (worst.count(m)) out << fmt::format("module {:<9} max relative error {:.3e}\n", m, worst[m]);
  }
  out << (ok ? "gradcheck passed\n" : "gradcheck FAILED\n");
  return ok ? kExitOk : kExitDomainError;
}

// --- encode-fallback ---

std::vector<embeddings::TextDocument> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path, 0);
  std::string line;
  if (!std::getline(in, line)) throw LoadError("empty corpus file", 1);
  const auto header = data::split_csv_line(line, 1);
  if (header != std::vector<std::string>{"entity_id", "kind", "text"}) {
    throw LoadError("corpus header must be entity_id,kind,text", 1);
  }
  std::vector<embeddings::TextDocument> docs;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    const auto f = data::split_csv_line(line, n);
    if (f.size() != 3) throw LoadError(fmt::format("expected 3 fields, found {}", f.size()), n);
    try {
      docs.push_back({f[0], embeddings::entity_kind_from_string(f[1]), f[2]});
    } catch (const ConfigError&) {
      throw LoadError("kind must be user or item, found '" + f[1] + "'", n);
    }
  }
  return docs;
}

// <dir>/user/<id>.pgm and <dir>/item/<id>.pgm; files directly in <dir> are items.
std::vector<embeddings::ModalityEmbedding> encode_images(const std::string& dir, std::size_t grid) {
  if (!fs::is_directory(dir)) throw LoadError("not a directory: " + dir, 0);
  std::vector<std::pair<fs::path, EntityKind>> files;
  auto scan = [&](const fs::path& p, EntityKind kind) {
    if (!fs::is_directory(p)) return;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.emplace_back(entry.path(), kind);
    }
  };
  scan(dir, EntityKind::kItem);
  scan(fs::path(dir) / "item", EntityKind::kItem);
  scan(fs::path(dir) / "user", EntityKind::kUser);
  std::sort(files.begin(), files.end());
  std::vector<embeddings::ModalityEmbedding> out;
  for (const auto& [path, kind] : files) {
    out.push_back({path.stem().string(), kind, embeddings::Modality::kImage,
                   embeddings::pixel_encode(embeddings::read_pgm(path.string()), grid)});
  }
  return out;
}

int cmd_encode(const std::string& text, const std::string& images, const std::string& out_path,
               std::size_t vocab, std::size_t grid, std::ostream& out) {
  if (text.empty() && images.empty()) throw UsageError("encode-fallback needs --text and/or --images");
  embeddings::EmbeddingStore store;
  std::size_t n_text = 0, n_image = 0;
  if (!text.empty()) {
    for (auto& e : embeddings::tfidf_encode(read_corpus(text), vocab)) {
      store.insert(std::move(e));
      ++n_text;
    }
  }
  if (!images.empty()) {
    for (auto& e : encode_images(images, grid)) {
      store.insert(std::move(e));
      ++n_image;
    }
  }
  const auto parent = fs::path(out_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  embeddings::write_embedding_file(store, out_path);
  out << fmt::format("wrote {} text and {} image embeddings to {}\n", n_text, n_image, out_path);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"coldrec"};
  app.require_subcommand(1, 1);
  app.set_help_flag("-h,--help");
  std::uint64_t seed_value = 42;
  auto* seed_opt = app.add_option("--seed", seed_value, "random seed");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "log progress to stderr");

  std::string synth_spec, synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", synth_spec)->check(CLI::ExistingFile);
  synth->add_option("--out", synth_out)->required();

  std::string train_data, train_config, model_out;
  double cold_users = 0.0, cold_items = 0.0;
  auto* train = app.add_subcommand("train", "train one model");
  train->add_option("--data", train_data)->required()->check(CLI::ExistingDirectory);
  train->add_option("--config", train_config)->required()->check(CLI::ExistingFile);
  train->add_option("--model-out", model_out)->required();
  auto* cold_users_opt = train->add_option("--cold-users", cold_users)->check(CLI::Range(0.0, 0.9));
  train->add_option("--cold-items", cold_items)->check(CLI::Range(0.0, 0.9));

  std::string eval_model, eval_data, eval_out;
  std::size_t k = 5;
  auto* evaluate = app.add_subcommand("evaluate", "score a trained model");
  evaluate->add_option("--model", eval_model)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--data", eval_data)->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--k", k)->check(CLI::PositiveNumber);
  evaluate->add_option("--out", eval_out);

  std::string ablate_config, ablate_out, ablate_md;
  std::size_t jobs = 1;
  auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
  ablate->add_option("--config", ablate_config)->required()->check(CLI::ExistingFile);
  ablate->add_option("--out", ablate_out);
  ablate->add_option("--markdown", ablate_md);
  ablate->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  std::string module = "all";
  auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients");
  gradcheck->add_option("--module", module)
      ->check(CLI::IsMember({"numerics", "vae", "recsys", "fusion", "all"}));

  std::string enc_text, enc_images, enc_out;
  std::size_t vocab = 32, grid = embeddings::kPixelGrid;
  auto* encode = app.add_subcommand("encode-fallback", "TF-IDF and pixel embeddings");
  encode->add_option("--text", enc_text)->check(CLI::ExistingFile);
  encode->add_option("--images", enc_images)->check(CLI::ExistingDirectory);
  encode->add_option("--out", enc_out)->required();
  encode->add_option("--vocab", vocab)->check(CLI::PositiveNumber);
  encode->add_option("--grid", grid)->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << synopsis();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << synopsis();
    return kExitUsage;
  }

  try {
    const SeedChoice seed = resolve_seed(seed_opt, seed_value);
    if (synth->parsed()) return cmd_synth(synth_spec, synth_out, seed, out);
    if (train->parsed()) {
      return cmd_train(train_data, train_config, model_out, cold_users_opt, cold_users, cold_items,
                       seed, verbose, out, err);
    }
    if (evaluate->parsed()) return cmd_evaluate(eval_model, eval_data, k, eval_out, out);
    if (ablate->parsed()) return cmd_ablate(ablate_config, ablate_out, ablate_md, jobs, seed, verbose, out);
    if (gradcheck->parsed()) return cmd_gradcheck(module, out);
    if (encode->parsed()) return cmd_encode(enc_text, enc_images, enc_out, vocab, grid, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << synopsis();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomainError;
  }
  err << synopsis();
  return kExitUsage;
}

}  // namespace coldrec::cli
