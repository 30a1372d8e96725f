// Acceptance checks. Usage: coldrec_acceptance [criterion ...]
// With no arguments every criterion runs. Prints one PASS/FAIL line per
// criterion and exits 1 if any failed.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "coldrec/data/split.hpp"
#include "coldrec/data/synth.hpp"
#include "coldrec/diagnostics/gradcheck_suite.hpp"
#include "coldrec/experiments/ablation.hpp"
#include "coldrec/experiments/harness.hpp"
#include "coldrec/fusion/fusion.hpp"
#include "coldrec/metrics/metrics.hpp"
#include "coldrec/recsys/neumf.hpp"
#include "coldrec/recsys/pipeline.hpp"
#include "coldrec/vae/vae.hpp"
#include "metrics_oracle.hpp"

#ifndef COLDREC_CONFIG_DIR
#define COLDREC_CONFIG_DIR "configs"
#endif

namespace {

using namespace coldrec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Vector random_vector(std::size_t n, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = standard_normal(rng);
  return v;
}

experiments::ExperimentConfig desk_config() {
  return experiments::load_experiment_config(std::string(COLDREC_CONFIG_DIR) + "/desk_grid.json");
}

const experiments::AblationConfig& row(const experiments::ExperimentConfig& config,
                                       const std::string& label) {
  for (const auto& c : config.grid) {
    if (c.label == label) return c;
  }
  throw LookupError("desk grid has no row '" + label + "'");
}

data::DatasetBundle benchmark_data(const experiments::ExperimentConfig& config, std::uint64_t seed) {
  data::SynthSpec spec = *config.synth;
  spec.seed = derive_seed(config.synth->seed, seed);
  return data::synth_generate(spec).bundle;
}

// --- 1 -------------------------------------------------------------------

Outcome metric_oracle() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto inst = testing::random_instance(5000 + s);
    const auto fast = metrics::evaluate(inst.input, inst.predicted, inst.actual);
    const auto slow = testing::oracle_metrics(inst.input, inst.predicted, inst.actual);
    worst = std::max({worst, std::abs(fast.mse - slow.mse),
                      std::abs(fast.precision_at_k - slow.precision_at_k),
                      std::abs(fast.ndcg_at_k - slow.ndcg_at_k)});
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-12 && elapsed < 5.0,
          fmt::format("200 instances, max abs diff {:.3g}, {:.2f} s", worst, elapsed)};
}

// --- 2 -------------------------------------------------------------------

Outcome hand_values() {
  using metrics::EvalInput;
  using metrics::UserRanking;
  const double m = metrics::mse(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 5});
  const double p = metrics::precision_at_k(
      EvalInput{5, {UserRanking{0, {1, 3, 5, 7}, {1, 2, 3, 4, 5}}}});
  const double n = metrics::ndcg_at_k(EvalInput{3, {UserRanking{0, {10, 30}, {10, 20, 30}}}});
  const double n_expected = 1.5 / (1.0 + 1.0 / std::log2(3.0));
  const bool ok = std::abs(m - 5.0 / 3.0) < 1e-6 && std::abs(p - 0.6) < 1e-6 &&
                  std::abs(n - n_expected) < 1e-6 && std::abs(n - 0.9199) < 5e-4;
  return {ok, fmt::format("mse {:.6f}, precision {:.6f}, ndcg {:.6f} (1.5 / {:.6f})", m, p, n,
                          1.0 + 1.0 / std::log2(3.0))};
}

// --- 3 -------------------------------------------------------------------

Outcome gradients() {
  const auto start = Clock::now();
  const auto cases = diagnostics::run_gradcheck_suite("all");
  const double elapsed = seconds_since(start);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& c : cases) {
    if (c.report.max_relative_error >= worst) {
      worst = c.report.max_relative_error;
      worst_name = c.module + "/" + c.name;
    }
  }
  return {worst < diagnostics::kSuiteTolerance && elapsed < 30.0,
          fmt::format("{} cases, max rel error {:.3g} ({}), {:.2f} s", cases.size(), worst,
                      worst_name, elapsed)};
}

// --- 4 -------------------------------------------------------------------

Outcome vae_closed_forms() {
  const Vector x{0.5, -1.0};
  bool ok = vae::elbo_loss(x, x, Vector(6, 0.0), Vector(6, 0.0), 1.0).kl == 0.0;
  double worst_kl = 0.0;
  for (std::size_t d = 1; d <= 32; ++d) {
    const double kl = vae::elbo_loss(x, x, Vector(d, 1.0), Vector(d, 0.0), 1.0).kl;
    worst_kl = std::max(worst_kl, std::abs(kl - 0.5 * static_cast<double>(d)));
  }
  ok = ok && worst_kl <= 1e-12;

  Rng rng(77);
  const auto params = vae::make_vae(12, 4, 16, rng);
  std::size_t checked = 0, broken = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto s = vae::sample_latent(params, random_vector(12, rng), rng);
    for (std::size_t j = 0; j < s.z.size(); ++j, ++checked) {
      if (s.z[j] != s.mu[j] + std::exp(s.logvar[j] / 2.0) * s.eps[j]) ++broken;
    }
  }
  ok = ok && broken == 0;
  return {ok, fmt::format("kl(0,0) exact, kl(1,0) max dev {:.3g} over d=1..32, reparameterization "
                          "{}/{} coordinates exact",
                          worst_kl, checked - broken, checked)};
}

// --- 5 -------------------------------------------------------------------

Outcome structural_reductions() {
  Rng rng(91);
  double gmf_dev = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    recsys::NeuMFParams p;
    p.P = init_params(6, 8, rng, InitScheme::kXavierUniform);
    p.Q = init_params(9, 8, rng, InitScheme::kXavierUniform);
    p.head = recsys::make_neumf_head(8, {16, 8}, Activation::kIdentity, rng);
    p.head.h = random_vector(8, rng);
    p.head.mlp.back().weight.fill(0.0);
    for (std::size_t u = 0; u < 6; ++u) {
      for (std::size_t i = 0; i < 9; ++i) {
        double g = 0.0;
        for (std::size_t k = 0; k < 8; ++k) g += p.head.h[k] * p.P(u, k) * p.Q(i, k);
        gmf_dev = std::max(gmf_dev, std::abs(recsys::neumf_predict(p, u, i) - sigmoid(g)));
      }
    }
  }

  using embeddings::Modality;
  fusion::FusionConfig cfg;
  cfg.mode = fusion::FusionMode::kIntermediate;
  cfg.combine = fusion::CombineMode::kConcat;
  cfg.projection_dim = 7;
  auto fp = fusion::make_intermediate_fusion({Modality::kText, Modality::kImage}, {7, 7}, cfg, rng);
  for (auto& layer : fp.projections) {
    layer = DenseLayer{Matrix::identity(7), Vector(7, 0.0), Activation::kIdentity};
  }
  double fusion_dev = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<fusion::ModalityEmbedding> in = {
        {"i", embeddings::EntityKind::kItem, Modality::kText, random_vector(7, rng)},
        {"i", embeddings::EntityKind::kItem, Modality::kImage, random_vector(7, rng)}};
    const auto a = fusion::fuse_intermediate(in, fp, cfg).values;
    const auto b = fusion::fuse_early(in).values;
    if (a.size() != b.size()) return {false, "fused dimensions differ"};
    for (std::size_t k = 0; k < a.size(); ++k) fusion_dev = std::max(fusion_dev, std::abs(a[k] - b[k]));
  }

  std::size_t rank_mismatch = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 40);
    Vector scores(n), transformed(n);
    for (double& s : scores) s = std::round(standard_normal(rng) * 4.0) / 4.0;
    for (std::size_t j = 0; j < n; ++j) transformed[j] = std::atan(3.0 * scores[j]) + 10.0;
    std::vector<std::size_t> candidates(n);
    for (std::size_t j = 0; j < n; ++j) candidates[j] = j;
    const std::size_t k = uniform_index(rng, n + 1);
    if (recsys::top_k_by_score(scores, candidates, k) !=
        recsys::top_k_by_score(transformed, candidates, k)) {
      ++rank_mismatch;
    }
  }
  const bool ok = gmf_dev <= 1e-12 && fusion_dev <= 1e-12 && rank_mismatch == 0;
  return {ok, fmt::format("gmf dev {:.3g}, intermediate vs early dev {:.3g}, rank mismatches {}/200",
                          gmf_dev, fusion_dev, rank_mismatch)};
}

// --- 6 -------------------------------------------------------------------

struct RankScores {
  double precision = 0.0;
  double ndcg = 0.0;
};

// Mean over folds of the ranking metrics, using the same seeds as a grid cell.
RankScores rank_scores(const experiments::AblationConfig& c, const data::DatasetBundle& bundle,
                       const std::vector<data::ColdStartScenario>& scenarios, std::uint64_t seed) {
  const auto features = experiments::feature_set_for(bundle, c.fit.spec.side_features);
  RankScores out;
  for (std::size_t f = 0; f < scenarios.size(); ++f) {
    const std::uint64_t cell_seed = derive_seed(derive_seed(seed, 2), f);
    const auto train = experiments::train_data_for(bundle.dataset, scenarios[f].train,
                                                   Feedback::kImplicit);
    recsys::FitConfig fit = c.fit;
    fit.spec.feedback = Feedback::kImplicit;
    const auto ranker = recsys::fit_model(fit, train, &features, experiments::cold_sets_for(train),
                                          derive_seed(cell_seed, 1));
    const auto report = experiments::evaluate_split(*ranker.scorer, nullptr, bundle.dataset,
                                                    scenarios[f].train, scenarios[f].test, c.k);
    out.precision += report.precision_at_k / static_cast<double>(scenarios.size());
    out.ndcg += report.ndcg_at_k / static_cast<double>(scenarios.size());
  }
  return out;
}

Outcome fusion_vae_trend() {
  const auto config = desk_config();
  const auto& with_vae = row(config, "Multimodal-intermediate+VAE");
  const auto& early = row(config, "Multimodal-early");
  const auto& no_vae = row(config, "Multimodal-intermediate");
  std::size_t wins = 0;
  RankScores sum_v, sum_e, sum_n;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto bundle = benchmark_data(config, s);
    const auto scenarios = data::cold_start_folds(bundle.dataset, config.cold_users,
                                                  config.cold_items, 3, derive_seed(s, 1));
    const auto v = rank_scores(with_vae, bundle, scenarios, s);
    const auto e = rank_scores(early, bundle, scenarios, s);
    const auto n = rank_scores(no_vae, bundle, scenarios, s);
    const bool win = v.precision >= e.precision && v.ndcg >= e.ndcg && v.precision >= n.precision &&
                     v.ndcg >= n.ndcg;
    wins += win;
    std::cout << fmt::format(
        "  seed {:2d}: intermediate+VAE {:.3f}/{:.3f}  early {:.3f}/{:.3f}  intermediate "
        "{:.3f}/{:.3f}  {}\n",
        s, v.precision, v.ndcg, e.precision, e.ndcg, n.precision, n.ndcg, win ? "win" : "loss");
    for (auto [acc, x] : {std::pair{&sum_v, v}, std::pair{&sum_e, e}, std::pair{&sum_n, n}}) {
      acc->precision += x.precision / 10.0;
      acc->ndcg += x.ndcg / 10.0;
    }
  }
  return {wins >= 8,
          fmt::format("{}/10 seeds; mean P@5/NDCG@5 intermediate+VAE {:.3f}/{:.3f}, early "
                      "{:.3f}/{:.3f}, intermediate {:.3f}/{:.3f}",
                      wins, sum_v.precision, sum_v.ndcg, sum_e.precision, sum_e.ndcg,
                      sum_n.precision, sum_n.ndcg)};
}

// --- 7 -------------------------------------------------------------------

double warm_mse(const experiments::AblationConfig& c, const data::DatasetBundle& bundle,
                const std::vector<data::ColdStartScenario>& scenarios, std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t f = 0; f < scenarios.size(); ++f) {
    const std::uint64_t cell_seed = derive_seed(derive_seed(seed, 2), f);
    const auto train = experiments::train_data_for(bundle.dataset, scenarios[f].train,
                                                   Feedback::kExplicit);
    recsys::FitConfig fit = c.fit;
    fit.spec.feedback = Feedback::kExplicit;
    const auto rater = recsys::fit_model(fit, train, nullptr, experiments::cold_sets_for(train),
                                         derive_seed(cell_seed, 2));
    const auto report = experiments::evaluate_split(*rater.scorer, rater.scorer.get(),
                                                    bundle.dataset, scenarios[f].train,
                                                    scenarios[f].test, c.k);
    total += report.mse / static_cast<double>(scenarios.size());
  }
  return total;
}

Outcome neumf_trend() {
  const auto config = desk_config();
  const auto& mf = row(config, "MF");
  const auto& neumf = row(config, "NeuMF");
  std::size_t wins = 0;
  double mean_mf = 0.0, mean_neumf = 0.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto bundle = benchmark_data(config, s);
    const auto scenarios = data::cold_start_folds(bundle.dataset, 0.0, 0.0, 3, derive_seed(s, 1));
    const double a = warm_mse(mf, bundle, scenarios, s);
    const double b = warm_mse(neumf, bundle, scenarios, s);
    wins += b < a;
    mean_mf += a / 10.0;
    mean_neumf += b / 10.0;
    std::cout << fmt::format("  seed {:2d}: MF {:.4f}  NeuMF {:.4f}\n", s, a, b);
  }
  return {wins >= 8, fmt::format("{}/10 seeds; mean MSE MF {:.4f}, NeuMF {:.4f}", wins, mean_mf,
                                 mean_neumf)};
}

// --- 8 -------------------------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

experiments::OutputPaths outputs_in(const fs::path& dir) {
  experiments::OutputPaths paths;
  paths.csv = (dir / "report.csv").string();
  paths.markdown = (dir / "report.md").string();
  experiments::complete_output_paths(paths);
  return paths;
}

Outcome determinism_and_budget() {
  const fs::path root = fs::temp_directory_path() / fmt::format("coldrec_acceptance_{}", getpid());
  fs::create_directories(root);

  auto small = desk_config();
  std::vector<experiments::AblationConfig> rows;
  for (const char* label : {"MF", "Multimodal-early+VAE", "Multimodal-intermediate+VAE"}) {
    auto c = row(small, label);
    c.seeds = {1};
    rows.push_back(c);
  }
  small.grid = rows;
  bool identical = true;
  for (const char* run : {"a", "b"}) {
    const auto result = experiments::run_ablation_grid(small);
    experiments::write_reports(result, outputs_in(root / run));
  }
  for (const char* name : {"report.csv", "report.md", "report.json"}) {
    identical = identical && slurp(root / "a" / name) == slurp(root / "b" / name);
  }

  const auto full = desk_config();
  const auto start = Clock::now();
  const auto result = experiments::run_ablation_grid(full);
  const double elapsed = seconds_since(start);
  experiments::write_reports(result, outputs_in(root / "full"));
  std::cout << slurp(root / "full" / "report.csv");
  bool any_failed = false;
  for (const auto& r : result.rows) any_failed = any_failed || r.failed;
  fs::remove_all(root);

  return {identical && !any_failed && elapsed < 300.0,
          fmt::format("repeat run byte-identical: {}; desk grid {} rows x {} cells in {:.1f} s "
                      "single-threaded",
                      identical ? "yes" : "no", full.grid.size(), full.grid[0].seeds.size() * full.grid[0].folds,
                      elapsed)};
}

// --- 9 -------------------------------------------------------------------

Outcome zero_weight_pseudo() {
  const auto config = desk_config();
  const auto bundle = benchmark_data(config, 1);
  const auto scenarios = data::cold_start_folds(bundle.dataset, config.cold_users, config.cold_items,
                                                3, derive_seed(1, 1));
  const auto features = experiments::feature_set_for(bundle, false);
  const auto train = experiments::train_data_for(bundle.dataset, scenarios[0].train,
                                                 Feedback::kImplicit);
  const auto cold = experiments::cold_sets_for(train);

  recsys::FitConfig base = row(config, "Multimodal-intermediate+VAE").fit;
  base.spec.feedback = Feedback::kImplicit;
  recsys::FitConfig zero = base;
  zero.vae.lambda = 0.0;
  zero.vae.tau = 0.0;
  recsys::FitConfig none = base;
  none.vae.pseudo_per_cold = 0;

  const auto a = recsys::fit_model(zero, train, &features, cold, 99);
  const auto b = recsys::fit_model(none, train, &features, cold, 99);
  auto* ma = dynamic_cast<recsys::Model*>(a.scorer.get());
  auto* mb = dynamic_cast<recsys::Model*>(b.scorer.get());
  if (!ma || !mb) return {false, "fitted scorer is not a single model"};
  std::size_t values = 0, differing = 0;
  const auto ba = ma->blocks();
  const auto bb = mb->blocks();
  bool same_layout = ba.size() == bb.size();
  for (std::size_t k = 0; same_layout && k < ba.size(); ++k) {
    same_layout = ba[k].values.size() == bb[k].values.size();
    for (std::size_t j = 0; same_layout && j < ba[k].values.size(); ++j, ++values) {
      differing += ba[k].values[j] != bb[k].values[j];
    }
  }
  const bool ok = same_layout && differing == 0 && a.loss_trace == b.loss_trace &&
                  a.pseudo_kept > 0;
  return {ok, fmt::format("{} zero-weight pseudo-samples; {} of {} parameters differ; loss traces {}",
                          a.pseudo_kept, differing, values,
                          a.loss_trace == b.loss_trace ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"metric oracle equivalence", metric_oracle}},
      {2, {"metric hand values", hand_values}},
      {3, {"gradient verification", gradients}},
      {4, {"VAE closed forms", vae_closed_forms}},
      {5, {"structural reductions", structural_reductions}},
      {6, {"intermediate fusion + VAE ranking trend", fusion_vae_trend}},
      {7, {"NeuMF vs MF rating trend", neumf_trend}},
      {8, {"determinism and grid budget", determinism_and_budget}},
      {9, {"zero-weight pseudo-samples", zero_weight_pseudo}},
  };
  std::set<int> selected;
  for (int a = 1; a < argc; ++a) {
    const int n = std::atoi(argv[a]);
    if (!criteria.count(n)) {
      std::cerr << "usage: coldrec_acceptance [1-9 ...]\n";
      return 2;
    }
    selected.insert(n);
  }
  if (selected.empty()) {
    for (const auto& [n, _] : criteria) selected.insert(n);
  }

  bool all = true;
  for (int n : selected) {
    const auto& [name, check] = criteria.at(n);
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << fmt::format("criterion {} {}: {} ({})\n", n, o.pass ? "PASS" : "FAIL", name,
                             o.detail)
              << std::flush;
  }
  return all ? 0 : 1;
}
