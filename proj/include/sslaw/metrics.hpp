#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sslaw {

struct EvalPairs {
  std::vector<double> predicted;
  std::vector<double> observed;
  std::optional<std::string> group_label;
};

/// 1 - SS_res / SS_tot, SS_tot about the mean of `observed`. May be
/// negative. Throws kNumerical ("undefined variance") when SS_tot = 0.
double r_squared(const EvalPairs& pairs);

/// r_squared of the single concatenation of all groups (one global mean).
double pooled_r_squared(std::span<const EvalPairs> groups);

/// r_squared, or nullopt when the variance is undefined. Report code uses
/// this so "n/a" cells never turn into NaN arithmetic.
std::optional<double> try_r_squared(const EvalPairs& pairs);
std::optional<double> try_pooled_r_squared(std::span<const EvalPairs> groups);

struct LevelSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

LevelSummary summarize_levels(std::span<const std::pair<double, double>> scores);

}  // namespace sslaw
