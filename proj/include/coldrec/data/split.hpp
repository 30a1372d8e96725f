#pragma once

#include <cstdint>
#include <vector>

#include "coldrec/data/dataset.hpp"

namespace coldrec::data {

struct FoldAssignment {
  std::size_t folds = 0;
  std::vector<std::size_t> fold_of;  // per interaction

  std::vector<std::size_t> sizes() const;
  // Interaction indices in fold f / outside fold f, ascending.
  std::vector<std::size_t> members(std::size_t f) const;
  std::vector<std::size_t> complement(std::size_t f) const;
};

// Shuffles 0..n-1 with `seed` and deals them round robin, so fold sizes differ
// by at most one and the larger folds come first. ArgumentError unless
// 2 <= folds <= n.
FoldAssignment kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed);
FoldAssignment kfold_split(const Dataset& dataset, std::size_t folds, std::uint64_t seed);

struct ColdEntities {
  std::vector<std::size_t> users;  // ascending
  std::vector<std::size_t> items;
};

// floor(fraction * count) users and items, drawn from those with at least one
// interaction. ArgumentError for a fraction outside [0, 0.9] or when too few
// entities have interactions.
ColdEntities select_cold_entities(const Dataset& dataset, double user_fraction,
                                  double item_fraction, std::uint64_t seed);

struct ColdStartScenario {
  ColdEntities cold;
  std::vector<std::size_t> train;  // interaction indices, ascending
  std::vector<std::size_t> test;
};

// Every interaction touching a cold entity goes to test; the rest are split
// 80/20 (train gets round(0.8 n)) after a seeded shuffle.
ColdStartScenario build_cold_start_scenario(const Dataset& dataset, double user_fraction,
                                            double item_fraction, std::uint64_t seed);

// Cross-validated variant: one scenario per fold, sharing the cold entities.
// Warm interactions are dealt into `folds` folds; fold f plus all cold
// interactions form the test side.
std::vector<ColdStartScenario> cold_start_folds(const Dataset& dataset, double user_fraction,
                                                double item_fraction, std::size_t folds,
                                                std::uint64_t seed);

}  // namespace coldrec::data
