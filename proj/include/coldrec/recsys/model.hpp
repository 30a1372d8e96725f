#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coldrec/feedback.hpp"
#include "coldrec/fusion/fusion.hpp"
#include "coldrec/recsys/features.hpp"
#include "coldrec/recsys/neumf.hpp"
#include "coldrec/vae/vae.hpp"

namespace coldrec::recsys {

enum class ModelKind { kMf, kNeumf, kMultimodal };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

struct ModelSpec {
  ModelKind kind = ModelKind::kNeumf;
  Feedback feedback = Feedback::kImplicit;
  std::size_t embedding_dim = 16;
  std::vector<std::size_t> hidden = {128, 64};
  Activation gmf_activation = Activation::kIdentity;
  // Multimodal only. Late fusion is assembled from single-modality early
  // models by the caller, so a model itself is early or intermediate.
  fusion::FusionConfig fusion;
  bool side_features = false;
  std::size_t vae_latent_dim = 8;
  std::size_t vae_hidden_dim = 32;
};

// One training signal. `user_features` / `item_features`, when non-empty,
// replace that side's content vector at the point where the VAE output would
// enter (used by pseudo-samples); the entity index still selects side features.
struct TrainingExample {
  std::size_t user = 0;
  std::size_t item = 0;
  double label = 0.0;
  double weight = 1.0;
  std::span<const double> user_features;
  std::span<const double> item_features;
};

// A named view of one parameter block, for checkpoints.
struct NamedBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<double> values;
};

// Anything that can score (user, item) pairs after training.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t user_count() const = 0;
  virtual std::size_t item_count() const = 0;
  // Caches whatever scoring needs; call after parameters change.
  virtual void prepare() = 0;
  // A probability for implicit feedback, a normalised rating for explicit.
  virtual double score(std::size_t user, std::size_t item) const = 0;
  virtual Vector score_items(std::size_t user, std::span<const std::size_t> items) const;
};

class Model : public Scorer {
 public:
  Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  virtual const ModelSpec& spec() const = 0;
  // Trainable parameters paired with their gradient buffers.
  virtual const ParamList& slots() const = 0;
  // Forward pass on one example, keeping what backward needs; returns the logit.
  virtual double forward(const TrainingExample& example) = 0;
  // Accumulates gradients for the last forward, given d loss / d logit.
  virtual void backward(double dlogit) = 0;
  // Prediction for an example without touching the training cache.
  virtual double predict(const TrainingExample& example) const = 0;
  // All state, including frozen parts, in a fixed order.
  virtual std::vector<NamedBlock> blocks() = 0;

  // MF on explicit ratings regresses the raw score; everything else goes
  // through the logistic.
  bool linear_output() const;
  double output(double logit) const;
};

class MFModel final : public Model {
 public:
  MFModel(ModelSpec spec, std::size_t users, std::size_t items, std::uint64_t seed);

  std::size_t user_count() const override { return params_.P.rows(); }
  std::size_t item_count() const override { return params_.Q.rows(); }
  void prepare() override {}
  double score(std::size_t user, std::size_t item) const override;
  const ModelSpec& spec() const override { return spec_; }
  const ParamList& slots() const override { return slots_; }
  double forward(const TrainingExample& example) override;
  void backward(double dlogit) override;
  double predict(const TrainingExample& example) const override;
  std::vector<NamedBlock> blocks() override;

  const MFParams& params() const { return params_; }
  MFParams& mutable_params() { return params_; }

 private:
  ModelSpec spec_;
  MFParams params_;
  Matrix grad_p_, grad_q_;
  double grad_bias_ = 0.0;
  ParamList slots_;
  std::size_t last_user_ = 0, last_item_ = 0;
};

class NeuMFModel final : public Model {
 public:
  NeuMFModel(ModelSpec spec, std::size_t users, std::size_t items, std::uint64_t seed);

  std::size_t user_count() const override { return params_.P.rows(); }
  std::size_t item_count() const override { return params_.Q.rows(); }
  void prepare() override {}
  double score(std::size_t user, std::size_t item) const override;
  const ModelSpec& spec() const override { return spec_; }
  const ParamList& slots() const override { return slots_; }
  double forward(const TrainingExample& example) override;
  void backward(double dlogit) override;
  double predict(const TrainingExample& example) const override;
  std::vector<NamedBlock> blocks() override;

  const NeuMFParams& params() const { return params_; }
  NeuMFParams& mutable_params() { return params_; }

 private:
  ModelSpec spec_;
  NeuMFParams params_;
  Matrix grad_p_, grad_q_;
  NeuMFHead grad_head_;
  ParamList slots_;
  HeadCache cache_;
  std::size_t last_user_ = 0, last_item_ = 0;
};

// Content-only NeuMF: each side is fused modality content -> [frozen VAE
// reconstruction] -> [side-feature restore layer] -> linear tower to d, then
// the NeuMF head. No per-id embeddings, so cold entities are scored from
// content alone.
class MultimodalModel final : public Model {
 public:
  MultimodalModel(ModelSpec spec, FeatureSet features, std::uint64_t seed);

  std::size_t user_count() const override { return features_.users.size(); }
  std::size_t item_count() const override { return features_.items.size(); }
  void prepare() override;
  double score(std::size_t user, std::size_t item) const override;
  Vector score_items(std::size_t user, std::span<const std::size_t> items) const override;
  const ModelSpec& spec() const override { return spec_; }
  const ParamList& slots() const override { return slots_; }
  double forward(const TrainingExample& example) override;
  void backward(double dlogit) override;
  double predict(const TrainingExample& example) const override;
  std::vector<NamedBlock> blocks() override;

  // Fused content vector before the VAE, under the current parameters.
  Vector fused(EntityKind kind, std::size_t entity) const;
  std::size_t fused_dim(EntityKind kind) const;
  // Installs a frozen VAE in that side's main path.
  void set_vae(EntityKind kind, vae::VaeParams params);
  const std::optional<vae::VaeParams>& vae(EntityKind kind) const;
  // Recomputes cached fixed inputs after block values were overwritten.
  void refresh();

  const NeuMFHead& head() const { return head_; }
  const FeatureSet& features() const { return features_; }

 private:
  struct Tower {
    const EntityFeatures* features = nullptr;
    fusion::IntermediateFusionParams fusion, fusion_grads;
    DenseLayer restore, restore_grads;
    DenseLayer proj, proj_grads;
    std::optional<vae::VaeParams> vae;
    std::vector<Vector> fixed;  // early fusion inputs (VAE-reconstructed when on)
    std::vector<Vector> reps;   // prepared representations

    std::vector<const Vector*> inputs;
    fusion::IntermediateCache fusion_cache;
    vae::ReconstructCache vae_cache;
    DenseCache restore_cache, proj_cache;
    bool overridden = false;
  };

  void init_tower(Tower& tower, const EntityFeatures& features, Rng& rng);
  void refresh_tower(Tower& tower);
  Vector pre_vae(const Tower& tower, std::size_t entity) const;
  Vector tower_apply(const Tower& tower, std::size_t entity,
                     std::span<const double> override_features) const;
  Vector tower_forward(Tower& tower, std::size_t entity,
                       std::span<const double> override_features);
  void tower_backward(Tower& tower, std::span<const double> upstream);
  void tower_blocks(Tower& tower, const std::string& prefix, std::vector<NamedBlock>& out);
  Tower& tower(EntityKind kind) { return kind == EntityKind::kUser ? users_ : items_; }
  const Tower& tower(EntityKind kind) const {
    return kind == EntityKind::kUser ? users_ : items_;
  }

  ModelSpec spec_;
  FeatureSet features_;
  Tower users_, items_;
  NeuMFHead head_, head_grads_;
  ParamList slots_;
  HeadCache head_cache_;
  Vector user_rep_, item_rep_;
};

// Weighted mean of per-modality model outputs.
class LateFusionScorer final : public Scorer {
 public:
  LateFusionScorer(std::vector<std::unique_ptr<Model>> members, Vector weights);

  std::size_t user_count() const override;
  std::size_t item_count() const override;
  void prepare() override;
  double score(std::size_t user, std::size_t item) const override;
  Vector score_items(std::size_t user, std::span<const std::size_t> items) const override;

  const std::vector<std::unique_ptr<Model>>& members() const { return members_; }
  const Vector& weights() const { return weights_; }

 private:
  std::vector<std::unique_ptr<Model>> members_;
  Vector weights_;
};

// MF / NeuMF use `users` and `items`; the multimodal model takes its entity
// counts from `features`.
std::unique_ptr<Model> make_model(const ModelSpec& spec, std::size_t users, std::size_t items,
                                  const FeatureSet* features, std::uint64_t seed);

}  // namespace coldrec::recsys
