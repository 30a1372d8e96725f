#pragma once

#include <cstdint>
#include <vector>

#include "coldrec/metrics/metrics.hpp"

namespace coldrec::testing {

// Brute-force recomputation of the metrics by enumeration. Shares nothing
// with the library implementation beyond the input and report types.
metrics::MetricReport oracle_metrics(const metrics::EvalInput& input,
                                     const std::vector<double>& predicted,
                                     const std::vector<double>& actual);

struct RandomInstance {
  metrics::EvalInput input;
  std::vector<double> predicted;
  std::vector<double> actual;
};

// Users <= max_users, items <= max_items, K <= max_k; at least one user has a
// relevant item, and some users may have none.
RandomInstance random_instance(std::uint64_t seed, std::size_t max_users = 20,
                               std::size_t max_items = 50, std::size_t max_k = 10);

}  // namespace coldrec::testing
