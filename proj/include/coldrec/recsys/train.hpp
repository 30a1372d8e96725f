#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coldrec/numerics/optimizer.hpp"
#include "coldrec/recsys/model.hpp"

namespace coldrec::recsys {

struct LabeledPair {
  std::size_t user = 0;
  std::size_t item = 0;
  double label = 1.0;  // normalised rating, or 1 for an implicit event
};

// Training interactions plus per-user observed items for negative sampling.
struct TrainData {
  std::size_t users = 0;
  std::size_t items = 0;
  std::vector<LabeledPair> pairs;
  std::vector<std::vector<std::size_t>> observed;  // sorted item indices per user

  bool is_observed(std::size_t user, std::size_t item) const;
};

TrainData make_train_data(std::size_t users, std::size_t items, std::vector<LabeledPair> pairs);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 16;
  std::size_t negatives = 4;  // per positive, implicit feedback only
  OptimizerConfig optimizer;
  std::uint64_t seed = 42;
};

struct ExampleLoss {
  double loss = 0.0;
  double dlogit = 0.0;  // unweighted
};

// Implicit: binary cross-entropy on the logit. Explicit: squared error on the
// model output (the sigmoid, or the raw logit for linear-output models).
ExampleLoss example_loss(Feedback feedback, bool linear_output, double logit, double label);

// Minibatch trainer that keeps optimizer and sampling state across calls, so
// training can be split into stages.
class Trainer {
 public:
  Trainer(Model& model, const TrainData& data, TrainConfig config);

  // Runs `epochs` more epochs and returns their mean per-example loss (real
  // examples only). `pseudo` examples are spread evenly over the batches of
  // every epoch; zero-weight ones are skipped outright.
  std::vector<double> run(std::size_t epochs, std::span<const TrainingExample> pseudo = {});

  std::size_t epochs_done() const { return epochs_done_; }
  // Users for whom no negative could be drawn because every item is observed.
  std::size_t skipped_negative_users() const { return skipped_users_.size(); }

 private:
  void build_epoch_examples();

  Model& model_;
  const TrainData& data_;
  TrainConfig config_;
  AdamState state_;
  Rng rng_;
  Rng pseudo_rng_;
  std::vector<TrainingExample> epoch_examples_;
  std::vector<std::size_t> skipped_users_;
  std::size_t epochs_done_ = 0;
};

struct TrainResult {
  std::vector<double> loss_trace;
  std::size_t skipped_negative_users = 0;
};

TrainResult train_model(Model& model, const TrainData& data,
                        std::span<const TrainingExample> pseudo, const TrainConfig& config);

// Top-K of `candidates` by score, descending; ties go to the smaller index
// (entity indices follow ascending id order). Throws ArgumentError if
// K > |candidates|.
std::vector<std::size_t> top_k_by_score(std::span<const double> scores,
                                        std::span<const std::size_t> candidates, std::size_t k);

std::vector<std::size_t> rank_top_k(const Scorer& scorer, std::size_t user,
                                    std::span<const std::size_t> candidates, std::size_t k);

}  // namespace coldrec::recsys
