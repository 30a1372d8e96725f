#pragma once

#include <span>
#include <vector>

#include "coldrec/data/dataset.hpp"
#include "coldrec/metrics/metrics.hpp"
#include "coldrec/recsys/pipeline.hpp"

namespace coldrec::experiments {

// Content features for every user and item in the dataset. Text and image
// come from the embedding store; side features, when asked for, come from
// the dataset's side columns.
recsys::FeatureSet feature_set_for(const data::DatasetBundle& bundle, bool with_side);

// Training pairs from the given interaction rows. Implicit labels are 1,
// explicit labels are the normalised ratings.
recsys::TrainData train_data_for(const data::Dataset& dataset, std::span<const std::size_t> rows,
                                 Feedback feedback);

// Users and items with no training interaction.
recsys::ColdSets cold_sets_for(const recsys::TrainData& train);

// Ranks, for every user with a test interaction, all items outside that
// user's training positives and scores the top K against the user's test
// items. `rater` (may be null) predicts each test rating for MSE on the
// manifest scale. Users with fewer than K candidates are skipped.
metrics::MetricReport evaluate_split(const recsys::Scorer& ranker, const recsys::Scorer* rater,
                                     const data::Dataset& dataset,
                                     std::span<const std::size_t> train_rows,
                                     std::span<const std::size_t> test_rows, std::size_t k);

}  // namespace coldrec::experiments
