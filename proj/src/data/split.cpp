#include "coldrec/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "coldrec/numerics/params.hpp"

namespace coldrec::data {

std::vector<std::size_t> FoldAssignment::sizes() const {
  std::vector<std::size_t> s(folds, 0);
  for (std::size_t f : fold_of) ++s[f];
  return s;
}

std::vector<std::size_t> FoldAssignment::members(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < fold_of.size(); ++k) {
    if (fold_of[k] == f) out.push_back(k);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::complement(std::size_t f) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < fold_of.size(); ++k) {
    if (fold_of[k] != f) out.push_back(k);
  }
  return out;
}

namespace {

// Fisher-Yates with our own index draw, so the order does not depend on the
// standard library's shuffle.
void seeded_shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) std::swap(v[k - 1], v[uniform_index(rng, k)]);
}

std::vector<std::size_t> draw(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  seeded_shuffle(all, rng);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

std::size_t cold_count(double fraction, std::size_t n, const char* what) {
  if (!(fraction >= 0.0 && fraction <= 0.9)) {
    throw ArgumentError(std::string("cold ") + what + " fraction must lie in [0, 0.9]");
  }
  // The small epsilon keeps 0.3 * 200 at 60 despite 0.3 being slightly low.
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

}  // namespace

FoldAssignment kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("kfold: need at least 2 folds");
  if (folds > n) {
    throw ArgumentError("kfold: " + std::to_string(folds) + " folds for " + std::to_string(n) +
                        " interactions");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  seeded_shuffle(order, rng);
  FoldAssignment a;
  a.folds = folds;
  a.fold_of.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) a.fold_of[order[k]] = k % folds;
  return a;
}

FoldAssignment kfold_split(const Dataset& dataset, std::size_t folds, std::uint64_t seed) {
  return kfold_split(dataset.interactions.size(), folds, seed);
}

ColdEntities select_cold_entities(const Dataset& d, double user_fraction, double item_fraction,
                                  std::uint64_t seed) {
  Rng rng(seed);
  auto pick = [&](double fraction, const std::vector<std::size_t>& degree, const char* what) {
    const std::size_t count = cold_count(fraction, degree.size(), what);
    std::vector<std::size_t> active;
    for (std::size_t e = 0; e < degree.size(); ++e) {
      if (degree[e] > 0) active.push_back(e);
    }
    if (count > active.size()) {
      throw ArgumentError(fmt::format("cold-start: {} cold {}s requested but only {} have interactions",
                                      count, what, active.size()));
    }
    std::vector<std::size_t> picked;
    for (std::size_t k : draw(active.size(), count, rng)) picked.push_back(active[k]);
    return picked;
  };
  ColdEntities c;
  c.users = pick(user_fraction, d.user_degrees(), "user");
  c.items = pick(item_fraction, d.item_degrees(), "item");
  return c;
}

namespace {

std::vector<char> touches_cold(const Dataset& d, const ColdEntities& c) {
  std::vector<char> cold_user(d.users.size(), 0), cold_item(d.items.size(), 0);
  for (std::size_t u : c.users) cold_user[u] = 1;
  for (std::size_t i : c.items) cold_item[i] = 1;
  std::vector<char> out(d.interactions.size(), 0);
  for (std::size_t k = 0; k < d.interactions.size(); ++k) {
    out[k] = cold_user[d.interactions[k].user] || cold_item[d.interactions[k].item];
  }
  return out;
}

}  // namespace

ColdStartScenario build_cold_start_scenario(const Dataset& d, double user_fraction,
                                            double item_fraction, std::uint64_t seed) {
  ColdStartScenario s;
  s.cold = select_cold_entities(d, user_fraction, item_fraction, derive_seed(seed, 1));
  const auto cold = touches_cold(d, s.cold);
  std::vector<std::size_t> warm;
  for (std::size_t k = 0; k < cold.size(); ++k) {
    if (cold[k]) {
      s.test.push_back(k);
    } else {
      warm.push_back(k);
    }
  }
  Rng rng(derive_seed(seed, 2));
  seeded_shuffle(warm, rng);
  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(warm.size())));
  s.train.assign(warm.begin(), warm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.insert(s.test.end(), warm.begin() + static_cast<std::ptrdiff_t>(n_train), warm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

std::vector<ColdStartScenario> cold_start_folds(const Dataset& d, double user_fraction,
                                                double item_fraction, std::size_t folds,
                                                std::uint64_t seed) {
  const ColdEntities c = select_cold_entities(d, user_fraction, item_fraction, derive_seed(seed, 1));
  const auto cold = touches_cold(d, c);
  std::vector<std::size_t> warm, cold_rows;
  for (std::size_t k = 0; k < cold.size(); ++k) (cold[k] ? cold_rows : warm).push_back(k);
  const FoldAssignment a = kfold_split(warm.size(), folds, derive_seed(seed, 2));
  std::vector<ColdStartScenario> out(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    out[f].cold = c;
    out[f].test = cold_rows;
  }
  for (std::size_t k = 0; k < warm.size(); ++k) {
    for (std::size_t f = 0; f < folds; ++f) {
      (a.fold_of[k] == f ? out[f].test : out[f].train).push_back(warm[k]);
    }
  }
  for (auto& s : out) std::sort(s.test.begin(), s.test.end());
  return out;
}

}  // namespace coldrec::data
