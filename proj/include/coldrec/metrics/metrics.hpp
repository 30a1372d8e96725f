#pragma once

#include <span>
#include <string>
#include <vector>

#include "coldrec/error.hpp"

namespace coldrec::metrics {

// No user has a relevant item, so a ranking metric has nothing to average.
class UndefinedMetricError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// (1/n) Σ (predicted - actual)². ArgumentError on unequal or zero lengths.
double mse(std::span<const double> predicted, std::span<const double> actual);

struct UserRanking {
  std::size_t user = 0;
  std::vector<std::size_t> relevant;  // held-out positives; order irrelevant
  std::vector<std::size_t> ranked;    // top-K, best first
};

struct EvalInput {
  std::size_t k = 5;
  std::vector<UserRanking> users;
};

struct UserMetrics {
  std::size_t user = 0;
  std::size_t relevant = 0;
  std::size_t hits = 0;
  double precision = 0.0;
  double ndcg = 0.0;
};

struct MetricReport {
  std::size_t n = 0;  // rating pairs behind mse
  double mse = 0.0;
  double precision_at_k = 0.0;
  double ndcg_at_k = 0.0;
  std::size_t k = 0;
  std::size_t users_evaluated = 0;
  std::size_t users_excluded = 0;  // empty relevant set
  std::vector<UserMetrics> per_user;  // evaluated users, input order
};

// Σ_u |R_u ∩ top-K| / K over users with nonempty R_u, divided by their count.
// The denominator is K even when |R_u| < K.
double precision_at_k(const EvalInput& input);
// Binary-relevance DCG with discount 1 / log2(pos + 1), normalised by the
// DCG of min(K, |R_u|) hits at the top; averaged like precision_at_k.
double ndcg_at_k(const EvalInput& input);

// Both ranking metrics with the per-user breakdown, plus mse over the rating
// pairs (left at 0 with n = 0 when no pairs are given).
MetricReport evaluate(const EvalInput& input, std::span<const double> predicted,
                      std::span<const double> actual);

// `model,mse,precision,ndcg` to two decimals.
std::string csv_row(const std::string& model, const MetricReport& report);

}  // namespace coldrec::metrics
