#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslaw/dataset.hpp"
#include "sslaw/fitter.hpp"
#include "sslaw/laws.hpp"

namespace sslaw {

enum class SplitMode { kToken, kModel, kJoint };
enum class FitMode { kPerLevel, kJointX };

std::string_view to_string(SplitMode mode);
std::string_view to_string(FitMode mode);
SplitMode split_mode_from_string(std::string_view name);
FitMode fit_mode_from_string(std::string_view name);

struct SplitSpec {
  SplitMode mode = SplitMode::kToken;
  std::optional<int> j;  // token checkpoints kept per model
  std::optional<int> k;  // smallest models kept
  // Joint mode only: test on every held-out-model point instead of only those
  // beyond the training token horizon.
  bool joint_all_heldout = false;

  void validate() const;
  std::string label() const;  // "j=12", "k=5", "k=5,j=12"
};

/// Train/test rows in input order. In joint mode some rows belong to
/// neither side (small models past the horizon, held-out models inside it);
/// they are returned in `excluded` so the three sets partition the input.
struct Split {
  ObservationSet train;
  ObservationSet test;
  ObservationSet excluded;
};

Split make_split(const ObservationSet& set, const SplitSpec& spec);

struct LevelScore {
  std::string level;
  std::optional<double> r2;  // nullopt when the level's test variance is undefined
};

struct ExtrapReport {
  LawId law_id = LawId::kShannonFull;
  SplitSpec split;
  FitMode fit_mode = FitMode::kPerLevel;
  std::vector<std::string> fit_levels;  // one entry per fit; "*" for a joint fit
  std::vector<FitResult> fits;
  std::optional<double> pooled_r2;
  std::vector<LevelScore> per_level_r2;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t excluded_count = 0;
  std::vector<double> test_predicted;  // concatenated by ascending level, then input order
  std::vector<double> test_observed;
};

/// Default fit mode: one fit across levels with X as covariate for X-aware
/// laws, one fit per level otherwise.
FitMode default_fit_mode(const LawSpec& law);

ExtrapReport run_extrapolation(const ObservationSet& set, const LawSpec& law, const SplitSpec& spec,
                               const FitConfig& config, std::optional<FitMode> fit_mode = std::nullopt);

/// Pooled R^2 of predicting each test point by the mean training loss of its
/// level. Baseline for extrapolation scores.
std::optional<double> mean_predictor_pooled_r2(const ObservationSet& set, const SplitSpec& spec);

struct SweepCell {
  LawId law_id;
  SplitSpec split;
  std::optional<ExtrapReport> report;
  std::string error;  // set when the cell failed
};

struct SweepTable {
  std::vector<LawId> laws;
  std::vector<SplitSpec> splits;
  std::vector<SweepCell> cells;  // row-major: law, then split

  const SweepCell& at(std::size_t law_index, std::size_t split_index) const {
    return cells[law_index * splits.size() + split_index];
  }
};

SweepTable progressive_sweep(const ObservationSet& set, const std::vector<LawSpec>& laws,
                             const std::vector<SplitSpec>& specs, const FitConfig& config,
                             std::optional<FitMode> fit_mode = std::nullopt);

nlohmann::json to_json(const SplitSpec& spec);
nlohmann::json to_json(const ExtrapReport& report);
nlohmann::json to_json(const SweepTable& table);

/// Aligned text table: one row per law, one column per split, best cell per
/// column marked with '*'.
std::string render_sweep_table(const SweepTable& table);

}  // namespace sslaw
