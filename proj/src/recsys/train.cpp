#include "coldrec/recsys/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coldrec::recsys {

bool TrainData::is_observed(std::size_t user, std::size_t item) const {
  const auto& row = observed.at(user);
  return std::binary_search(row.begin(), row.end(), item);
}

TrainData make_train_data(std::size_t users, std::size_t items, std::vector<LabeledPair> pairs) {
  TrainData data;
  data.users = users;
  data.items = items;
  data.observed.resize(users);
  for (const auto& p : pairs) {
    if (p.user >= users || p.item >= items) {
      throw LookupError("training pair (" + std::to_string(p.user) + ", " +
                        std::to_string(p.item) + ") outside " + std::to_string(users) + "x" +
                        std::to_string(items));
    }
    data.observed[p.user].push_back(p.item);
  }
  for (auto& row : data.observed) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  data.pairs = std::move(pairs);
  return data;
}

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

ExampleLoss example_loss(Feedback feedback, bool linear_output, double logit, double label) {
  if (feedback == Feedback::kImplicit) {
    const double s = std::clamp(logit, -kExpClamp, kExpClamp);
    return ExampleLoss{softplus(s) - label * s, sigmoid(logit) - label};
  }
  if (linear_output) {
    const double d = logit - label;
    return ExampleLoss{d * d, 2.0 * d};
  }
  const double y = sigmoid(logit);
  const double d = y - label;
  return ExampleLoss{d * d, 2.0 * d * activation_derivative(Activation::kSigmoid, logit, y)};
}

Trainer::Trainer(Model& model, const TrainData& data, TrainConfig config)
    : model_(model),
      data_(data),
      config_(config),
      rng_(derive_seed(config.seed, 1)),
      pseudo_rng_(derive_seed(config.seed, 2)) {
  if (data_.pairs.empty()) throw ArgumentError("train_model: empty training set");
  if (config_.batch_size == 0) throw ArgumentError("train_model: batch_size must be positive");
  if (data_.users != model_.user_count() || data_.items != model_.item_count()) {
    throw ShapeError("train_model: data is " + std::to_string(data_.users) + "x" +
                     std::to_string(data_.items) + " but the model is " +
                     std::to_string(model_.user_count()) + "x" +
                     std::to_string(model_.item_count()));
  }
  state_.config = config_.optimizer;
}

void Trainer::build_epoch_examples() {
  epoch_examples_.clear();
  const bool implicit = model_.spec().feedback == Feedback::kImplicit;
  for (const auto& p : data_.pairs) {
    epoch_examples_.push_back(TrainingExample{p.user, p.item, implicit ? 1.0 : p.label, 1.0, {}, {}});
    if (!implicit || config_.negatives == 0) continue;
    if (data_.observed[p.user].size() >= data_.items) {
      if (std::find(skipped_users_.begin(), skipped_users_.end(), p.user) == skipped_users_.end()) {
        skipped_users_.push_back(p.user);
      }
      continue;
    }
    for (std::size_t n = 0; n < config_.negatives; ++n) {
      std::size_t item = uniform_index(rng_, data_.items);
      while (data_.is_observed(p.user, item)) item = uniform_index(rng_, data_.items);
      epoch_examples_.push_back(TrainingExample{p.user, item, 0.0, 1.0, {}, {}});
    }
  }
  std::shuffle(epoch_examples_.begin(), epoch_examples_.end(), rng_);
}

std::vector<double> Trainer::run(std::size_t epochs, std::span<const TrainingExample> pseudo) {
  const ParamList& slots = model_.slots();
  const Feedback feedback = model_.spec().feedback;
  const bool linear = model_.linear_output();
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < pseudo.size(); ++k) {
    if (pseudo[k].weight != 0.0) active.push_back(k);
  }
  std::vector<double> trace;
  for (std::size_t e = 0; e < epochs; ++e) {
    build_epoch_examples();
    std::shuffle(active.begin(), active.end(), pseudo_rng_);
    const std::size_t n = epoch_examples_.size();
    const std::size_t batches = (n + config_.batch_size - 1) / config_.batch_size;
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t start = b * config_.batch_size;
      const std::size_t end = std::min(n, start + config_.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero_grads(slots);
      for (std::size_t k = start; k < end; ++k) {
        const TrainingExample& ex = epoch_examples_[k];
        const double logit = model_.forward(ex);
        const ExampleLoss l = example_loss(feedback, linear, logit, ex.label);
        epoch_loss += ex.weight * l.loss;
        model_.backward(scale * ex.weight * l.dlogit);
      }
      const std::size_t p0 = b * active.size() / batches;
      const std::size_t p1 = (b + 1) * active.size() / batches;
      for (std::size_t k = p0; k < p1; ++k) {
        const TrainingExample& ex = pseudo[active[k]];
        const double logit = model_.forward(ex);
        const ExampleLoss l = example_loss(feedback, linear, logit, ex.label);
        model_.backward(scale * ex.weight * l.dlogit);
      }
      optimizer_step(slots, state_);
    }
    trace.push_back(epoch_loss / static_cast<double>(n));
    ++epochs_done_;
  }
  return trace;
}

TrainResult train_model(Model& model, const TrainData& data,
                        std::span<const TrainingExample> pseudo, const TrainConfig& config) {
  Trainer trainer(model, data, config);
  TrainResult result;
  result.loss_trace = trainer.run(config.epochs, pseudo);
  result.skipped_negative_users = trainer.skipped_negative_users();
  return result;
}

std::vector<std::size_t> top_k_by_score(std::span<const double> scores,
                                        std::span<const std::size_t> candidates, std::size_t k) {
  if (scores.size() != candidates.size()) {
    throw ShapeError("top_k: " + length_string(scores.size()) + " scores for " +
                     length_string(candidates.size()) + " candidates");
  }
  if (k > candidates.size()) {
    throw ArgumentError("top_k: K=" + std::to_string(k) + " exceeds " +
                        std::to_string(candidates.size()) + " candidates");
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return candidates[a] < candidates[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  std::vector<std::size_t> out(k);
  for (std::size_t j = 0; j < k; ++j) out[j] = candidates[order[j]];
  return out;
}

std::vector<std::size_t> rank_top_k(const Scorer& scorer, std::size_t user,
                                    std::span<const std::size_t> candidates, std::size_t k) {
  if (k > candidates.size()) {
    throw ArgumentError("rank_top_k: K=" + std::to_string(k) + " exceeds " +
                        std::to_string(candidates.size()) + " candidates");
  }
  const Vector scores = scorer.score_items(user, candidates);
  return top_k_by_score(scores, candidates, k);
}

}  // namespace coldrec::recsys
