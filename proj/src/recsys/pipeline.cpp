#include "coldrec/recsys/pipeline.hpp"

#include <algorithm>

namespace coldrec::recsys {

namespace {

struct SingleFit {
  std::unique_ptr<Model> model;
  std::vector<double> loss_trace;
  std::vector<double> vae_trace;
  std::size_t pseudo_candidates = 0;
  std::size_t pseudo_kept = 0;
  std::size_t skipped = 0;
};

std::vector<std::size_t> warm_entities(const TrainData& data, EntityKind kind) {
  std::vector<char> seen(kind == EntityKind::kUser ? data.users : data.items, 0);
  for (const auto& p : data.pairs) seen[kind == EntityKind::kUser ? p.user : p.item] = 1;
  std::vector<std::size_t> out;
  for (std::size_t e = 0; e < seen.size(); ++e) {
    if (seen[e]) out.push_back(e);
  }
  return out;
}

// Fits and installs the VAE for one side, then draws that side's pseudo-samples.
std::vector<vae::PseudoSample> vae_stage(MultimodalModel& model, const TrainData& data,
                                         const FitConfig& config,
                                         const std::vector<std::size_t>& cold, EntityKind kind,
                                         std::uint64_t seed, SingleFit& fit) {
  const auto warm = warm_entities(data, kind);
  if (warm.empty()) return {};
  std::vector<Vector> fused;
  fused.reserve(warm.size());
  for (std::size_t e : warm) fused.push_back(model.fused(kind, e));

  Rng init(derive_seed(seed, 1));
  vae::VaeParams params = vae::make_vae(model.fused_dim(kind), config.spec.vae_latent_dim,
                                        config.spec.vae_hidden_dim, init);
  vae::VaeTrainConfig vc;
  vc.epochs = config.vae.epochs;
  vc.batch_size = config.vae.batch_size;
  vc.beta = config.vae.beta;
  vc.optimizer.learning_rate = config.vae.learning_rate;
  auto trained = vae::train_vae(std::move(params), fused, vc, derive_seed(seed, 2));
  fit.vae_trace.insert(fit.vae_trace.end(), trained.loss_trace.begin(), trained.loss_trace.end());
  model.set_vae(kind, trained.params);

  if (cold.empty() || config.vae.pseudo_per_cold == 0) return {};
  vae::PseudoSampleConfig pc;
  pc.count = config.vae.pseudo_per_cold * cold.size();
  pc.tau = config.vae.tau;
  pc.lambda = config.vae.lambda;
  pc.feedback = config.spec.feedback;
  const bool users = kind == EntityKind::kUser;
  pc.source = users ? vae::PseudoSource::kColdUser : vae::PseudoSource::kColdItem;
  pc.partner_count = users ? data.items : data.users;
  for (std::size_t e : cold) pc.anchors.push_back(model.fused(kind, e));

  auto labeler = [&](const vae::PseudoSample& s) {
    TrainingExample ex;
    if (users) {
      ex.user = cold[s.anchor];
      ex.item = s.partner;
      ex.user_features = s.features;
    } else {
      ex.item = cold[s.anchor];
      ex.user = s.partner;
      ex.item_features = s.features;
    }
    return model.predict(ex);
  };
  auto samples = vae::generate_pseudo_samples(*model.vae(kind), labeler, pc, derive_seed(seed, 3));
  fit.pseudo_candidates += pc.count;
  fit.pseudo_kept += samples.size();
  return samples;
}

SingleFit fit_single(const FitConfig& config, const TrainData& data, const FeatureSet* features,
                     const ColdSets& cold, std::uint64_t seed) {
  SingleFit fit;
  fit.model = make_model(config.spec, data.users, data.items, features, derive_seed(seed, 10));
  TrainConfig tc = config.train;
  tc.seed = derive_seed(seed, 11);
  Trainer trainer(*fit.model, data, tc);

  if (!config.vae.enabled) {
    fit.loss_trace = trainer.run(tc.epochs);
    fit.skipped = trainer.skipped_negative_users();
    return fit;
  }
  auto* mm = dynamic_cast<MultimodalModel*>(fit.model.get());
  if (mm == nullptr) throw ConfigError("the VAE stage needs a multimodal model");

  const std::size_t warmup = (tc.epochs + 1) / 2;
  fit.loss_trace = trainer.run(warmup);
  std::vector<vae::PseudoSample> user_samples =
      vae_stage(*mm, data, config, cold.users, EntityKind::kUser, derive_seed(seed, 20), fit);
  std::vector<vae::PseudoSample> item_samples =
      vae_stage(*mm, data, config, cold.items, EntityKind::kItem, derive_seed(seed, 21), fit);

  std::vector<TrainingExample> pseudo;
  pseudo.reserve(user_samples.size() + item_samples.size());
  for (const auto& s : user_samples) {
    pseudo.push_back(TrainingExample{cold.users[s.anchor], s.partner, s.pseudo_label, s.weight,
                                     s.features, {}});
  }
  for (const auto& s : item_samples) {
    pseudo.push_back(TrainingExample{s.partner, cold.items[s.anchor], s.pseudo_label, s.weight,
                                     {}, s.features});
  }
  const auto rest = trainer.run(tc.epochs - warmup, pseudo);
  fit.loss_trace.insert(fit.loss_trace.end(), rest.begin(), rest.end());
  fit.skipped = trainer.skipped_negative_users();
  return fit;
}

}  // namespace

FitResult fit_model(const FitConfig& config, const TrainData& data, const FeatureSet* features,
                    const ColdSets& cold, std::uint64_t seed) {
  FitResult result;
  if (config.spec.kind == ModelKind::kMultimodal &&
      config.spec.fusion.mode == fusion::FusionMode::kLate) {
    if (features == nullptr) throw ConfigError("late fusion needs content features");
    std::vector<std::unique_ptr<Model>> members;
    const auto& modalities = features->users.modalities;
    for (std::size_t m = 0; m < modalities.size(); ++m) {
      if (std::find(features->items.modalities.begin(), features->items.modalities.end(),
                    modalities[m]) == features->items.modalities.end()) {
        continue;
      }
      FitConfig sub = config;
      sub.spec.fusion.mode = fusion::FusionMode::kEarly;
      FeatureSet single{select_modality(features->users, modalities[m]),
                        select_modality(features->items, modalities[m])};
      SingleFit fit = fit_single(sub, data, &single, cold, derive_seed(seed, 100 + m));
      result.loss_trace.insert(result.loss_trace.end(), fit.loss_trace.begin(),
                               fit.loss_trace.end());
      result.vae_trace.insert(result.vae_trace.end(), fit.vae_trace.begin(), fit.vae_trace.end());
      result.pseudo_candidates += fit.pseudo_candidates;
      result.pseudo_kept += fit.pseudo_kept;
      result.skipped_negative_users = std::max(result.skipped_negative_users, fit.skipped);
      members.push_back(std::move(fit.model));
    }
    result.scorer = std::make_unique<LateFusionScorer>(std::move(members),
                                                       config.spec.fusion.late_combine_weights);
  } else {
    SingleFit fit = fit_single(config, data, features, cold, seed);
    result.loss_trace = std::move(fit.loss_trace);
    result.vae_trace = std::move(fit.vae_trace);
    result.pseudo_candidates = fit.pseudo_candidates;
    result.pseudo_kept = fit.pseudo_kept;
    result.skipped_negative_users = fit.skipped;
    result.scorer = std::move(fit.model);
  }
  result.scorer->prepare();
  return result;
}

}  // namespace coldrec::recsys
