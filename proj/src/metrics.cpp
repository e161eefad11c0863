#include "sslaw/metrics.hpp"

#include <cmath>

#include "sslaw/error.hpp"

namespace sslaw {

namespace {

void check_pairs(const EvalPairs& pairs) {
  if (pairs.predicted.size() != pairs.observed.size()) {
    fail(ErrorKind::kValidation, "predicted and observed lengths differ");
  }
  for (std::size_t i = 0; i < pairs.observed.size(); ++i) {
    if (!std::isfinite(pairs.predicted[i]) || !std::isfinite(pairs.observed[i])) {
      fail(ErrorKind::kValidation, "non-finite value in evaluation pairs");
    }
  }
}

EvalPairs concatenate(std::span<const EvalPairs> groups) {
  if (groups.empty()) fail(ErrorKind::kValidation, "pooled R^2 needs at least one group");
  EvalPairs all;
  for (const auto& g : groups) {
    check_pairs(g);
    all.predicted.insert(all.predicted.end(), g.predicted.begin(), g.predicted.end());
    all.observed.insert(all.observed.end(), g.observed.begin(), g.observed.end());
  }
  return all;
}

}  // namespace

double r_squared(const EvalPairs& pairs) {
  check_pairs(pairs);
  const std::size_t n = pairs.observed.size();
  if (n < 2) fail(ErrorKind::kValidation, "R^2 needs at least two observations");

  double sum = 0.0;
  for (double o : pairs.observed) sum += o;
  const double mean = sum / static_cast<double>(n);

  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dev = pairs.observed[i] - mean;
    const double res = pairs.predicted[i] - pairs.observed[i];
    ss_tot += dev * dev;
    ss_res += res * res;
  }
  if (ss_tot == 0.0) fail(ErrorKind::kNumerical, "undefined variance: all observed values are equal");
  return 1.0 - ss_res / ss_tot;
}

double pooled_r_squared(std::span<const EvalPairs> groups) { return r_squared(concatenate(groups)); }

std::optional<double> try_r_squared(const EvalPairs& pairs) {
  try {
    return r_squared(pairs);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kValidation && pairs.observed.size() >= 2) throw;
    return std::nullopt;
  }
}

std::optional<double> try_pooled_r_squared(std::span<const EvalPairs> groups) {
  return try_r_squared(concatenate(groups));
}

LevelSummary summarize_levels(std::span<const std::pair<double, double>> scores) {
  if (scores.empty()) fail(ErrorKind::kValidation, "summarize_levels: no scores");
  double sum = 0.0;
  for (const auto& [level, score] : scores) sum += score;
  const double mean = sum / static_cast<double>(scores.size());
  double var = 0.0;
  for (const auto& [level, score] : scores) var += (score - mean) * (score - mean);
  return {mean, std::sqrt(var / static_cast<double>(scores.size()))};
}

}  // namespace sslaw
