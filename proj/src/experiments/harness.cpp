#include "coldrec/experiments/harness.hpp"

#include <algorithm>

namespace coldrec::experiments {

using embeddings::EntityKind;
using embeddings::Modality;

recsys::FeatureSet feature_set_for(const data::DatasetBundle& bundle, bool with_side) {
  const data::Dataset& d = bundle.dataset;
  if (with_side && !d.has_side_features()) {
    throw ConfigError("side features requested but the dataset has none");
  }
  embeddings::EmbeddingStore store;
  for (const auto& [key, e] : bundle.embeddings) {
    if (e.modality != Modality::kSide) store.insert(e);
  }
  if (with_side) {
    for (std::size_t u = 0; u < d.users.size(); ++u) {
      store.insert({d.users.id(u), EntityKind::kUser, Modality::kSide, d.user_side[u]});
    }
    for (std::size_t i = 0; i < d.items.size(); ++i) {
      store.insert({d.items.id(i), EntityKind::kItem, Modality::kSide, d.item_side[i]});
    }
  }
  return recsys::FeatureSet{
      recsys::build_entity_features(store, EntityKind::kUser, d.users.ids(),
                                    store.modalities(EntityKind::kUser), with_side),
      recsys::build_entity_features(store, EntityKind::kItem, d.items.ids(),
                                    store.modalities(EntityKind::kItem), with_side)};
}

recsys::TrainData train_data_for(const data::Dataset& d, std::span<const std::size_t> rows,
                                 Feedback feedback) {
  std::vector<recsys::LabeledPair> pairs;
  pairs.reserve(rows.size());
  for (std::size_t k : rows) {
    const auto& x = d.interactions.at(k);
    pairs.push_back({x.user, x.item, feedback == Feedback::kImplicit ? 1.0 : x.normalized});
  }
  return recsys::make_train_data(d.users.size(), d.items.size(), std::move(pairs));
}

recsys::ColdSets cold_sets_for(const recsys::TrainData& train) {
  std::vector<char> user_seen(train.users, 0), item_seen(train.items, 0);
  for (const auto& p : train.pairs) {
    user_seen[p.user] = 1;
    item_seen[p.item] = 1;
  }
  recsys::ColdSets c;
  for (std::size_t u = 0; u < train.users; ++u) {
    if (!user_seen[u]) c.users.push_back(u);
  }
  for (std::size_t i = 0; i < train.items; ++i) {
    if (!item_seen[i]) c.items.push_back(i);
  }
  return c;
}

metrics::MetricReport evaluate_split(const recsys::Scorer& ranker, const recsys::Scorer* rater,
                                     const data::Dataset& d,
                                     std::span<const std::size_t> train_rows,
                                     std::span<const std::size_t> test_rows, std::size_t k) {
  std::vector<std::vector<std::size_t>> train_items(d.users.size()), test_items(d.users.size());
  for (std::size_t r : train_rows) train_items[d.interactions.at(r).user].push_back(d.interactions[r].item);
  for (std::size_t r : test_rows) test_items[d.interactions.at(r).user].push_back(d.interactions[r].item);

  metrics::EvalInput input;
  input.k = k;
  std::vector<char> excluded(d.items.size(), 0);
  for (std::size_t u = 0; u < d.users.size(); ++u) {
    if (test_items[u].empty()) continue;
    for (std::size_t i : train_items[u]) excluded[i] = 1;
    std::vector<std::size_t> candidates;
    candidates.reserve(d.items.size());
    for (std::size_t i = 0; i < d.items.size(); ++i) {
      if (!excluded[i]) candidates.push_back(i);
    }
    for (std::size_t i : train_items[u]) excluded[i] = 0;
    if (candidates.size() < k) continue;
    std::sort(test_items[u].begin(), test_items[u].end());
    input.users.push_back({u, test_items[u], recsys::rank_top_k(ranker, u, candidates, k)});
  }
  if (input.users.empty()) throw metrics::UndefinedMetricError("no test user has enough candidates");

  std::vector<double> predicted, actual;
  if (rater != nullptr) {
    for (std::size_t r : test_rows) {
      const auto& x = d.interactions[r];
      const double score = std::clamp(rater->score(x.user, x.item), 0.0, 1.0);
      predicted.push_back(d.manifest.scale.denormalize(score));
      actual.push_back(x.rating);
    }
  }
  return metrics::evaluate(input, predicted, actual);
}

}  // namespace coldrec::experiments
