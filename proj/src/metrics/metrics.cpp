#include "coldrec/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

namespace coldrec::metrics {

double mse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw ArgumentError("mse: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(actual.size()) + " ratings");
  }
  if (predicted.empty()) throw ArgumentError("mse: no rating pairs");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

namespace {

void validate(const EvalInput& input) {
  if (input.k == 0) throw ArgumentError("ranking metrics need K >= 1");
  for (const auto& u : input.users) {
    if (u.ranked.size() != input.k) {
      throw ArgumentError("user " + std::to_string(u.user) + " has " +
                          std::to_string(u.ranked.size()) + " ranked items, expected K=" +
                          std::to_string(input.k));
    }
    std::vector<std::size_t> sorted = u.ranked;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ArgumentError("user " + std::to_string(u.user) + " has a repeated ranked item");
    }
  }
}

std::vector<double> discounts(std::size_t k) {
  std::vector<double> d(k);
  for (std::size_t pos = 1; pos <= k; ++pos) d[pos - 1] = 1.0 / std::log2(double(pos) + 1.0);
  return d;
}

std::vector<UserMetrics> per_user(const EvalInput& input, std::size_t& excluded) {
  validate(input);
  const std::vector<double> disc = discounts(input.k);
  std::vector<UserMetrics> out;
  excluded = 0;
  for (const auto& u : input.users) {
    const std::unordered_set<std::size_t> rel(u.relevant.begin(), u.relevant.end());
    if (rel.empty()) {
      ++excluded;
      continue;
    }
    UserMetrics m;
    m.user = u.user;
    m.relevant = rel.size();
    double dcg = 0.0;
    for (std::size_t pos = 0; pos < input.k; ++pos) {
      if (rel.contains(u.ranked[pos])) {
        ++m.hits;
        dcg += disc[pos];
      }
    }
    double idcg = 0.0;
    for (std::size_t pos = 0; pos < std::min(input.k, rel.size()); ++pos) idcg += disc[pos];
    m.precision = static_cast<double>(m.hits) / static_cast<double>(input.k);
    m.ndcg = dcg / idcg;
    out.push_back(m);
  }
  if (out.empty()) throw UndefinedMetricError("no user has a held-out relevant item");
  return out;
}

double mean_of(const std::vector<UserMetrics>& users, double UserMetrics::*field) {
  double sum = 0.0;
  for (const auto& u : users) sum += u.*field;
  return sum / static_cast<double>(users.size());
}

}  // namespace

double precision_at_k(const EvalInput& input) {
  std::size_t excluded = 0;
  return mean_of(per_user(input, excluded), &UserMetrics::precision);
}

double ndcg_at_k(const EvalInput& input) {
  std::size_t excluded = 0;
  return mean_of(per_user(input, excluded), &UserMetrics::ndcg);
}

MetricReport evaluate(const EvalInput& input, std::span<const double> predicted,
                      std::span<const double> actual) {
  MetricReport r;
  r.k = input.k;
  r.per_user = per_user(input, r.users_excluded);
  r.users_evaluated = r.per_user.size();
  r.precision_at_k = mean_of(r.per_user, &UserMetrics::precision);
  r.ndcg_at_k = mean_of(r.per_user, &UserMetrics::ndcg);
  if (!predicted.empty() || !actual.empty()) {
    r.mse = mse(predicted, actual);
    r.n = predicted.size();
  }
  return r;
}

std::string csv_row(const std::string& model, const MetricReport& report) {
  return fmt::format("{},{:.2f},{:.2f},{:.2f}", model, report.mse, report.precision_at_k,
                     report.ndcg_at_k);
}

}  // namespace coldrec::metrics
