#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "coldrec/recsys/model.hpp"
#include "coldrec/recsys/train.hpp"

namespace coldrec::recsys {

struct VaeStageConfig {
  bool enabled = false;
  double beta = 1.0;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double tau = 0.2;
  double lambda = 0.5;
  std::size_t pseudo_per_cold = 5;
};

struct FitConfig {
  ModelSpec spec;
  TrainConfig train;
  VaeStageConfig vae;
};

// Entities whose interactions were all held out.
struct ColdSets {
  std::vector<std::size_t> users;
  std::vector<std::size_t> items;
};

struct FitResult {
  std::unique_ptr<Scorer> scorer;  // prepared, ready to score
  std::vector<double> loss_trace;
  std::vector<double> vae_trace;   // concatenated per-side VAE traces
  std::size_t pseudo_candidates = 0;
  std::size_t pseudo_kept = 0;
  std::size_t skipped_negative_users = 0;
};

// Trains one configuration end to end.
//
// Without the VAE stage this is train_model for train.epochs. With it, the
// model trains for ceil(epochs / 2) epochs, a VAE per side is fitted to the
// fused vectors of warm entities and frozen into the main path, pseudo-samples
// are drawn around each cold entity's posterior and labelled by the current
// model, and training continues for the remaining epochs with them mixed in.
//
// Late fusion fits one single-modality early-fusion model per content
// modality and averages their outputs.
FitResult fit_model(const FitConfig& config, const TrainData& data, const FeatureSet* features,
                    const ColdSets& cold, std::uint64_t seed);

}  // namespace coldrec::recsys
