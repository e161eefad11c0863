#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslaw/dataset.hpp"
#include "sslaw/laws.hpp"
#include "sslaw/parallel.hpp"

namespace sslaw {

enum class ObjectiveSpace { kLoss, kLogLoss };

std::string_view to_string(ObjectiveSpace space);
ObjectiveSpace objective_space_from_string(std::string_view name);

struct FitConfig {
  int starts = 16;                            // deterministic starts (filled randomly if too few combos)
  std::vector<double> init_values{1.0, 0.1};  // coordinate-wise start values
  int random_starts = 0;                      // extra log-uniform starts in [1e-3, 1e2]
  std::uint64_t seed = 0;
  int max_iters = 10000;
  double tol_rel_sse = 1e-12;
  double tol_grad = 1e-10;
  ObjectiveSpace objective_space = ObjectiveSpace::kLoss;
  std::optional<XOrientation> x_orientation;  // overrides the law's default
  double fd_step = 6e-6;                      // central-difference step in ln(theta)
  ExecPolicy exec = ExecPolicy::kParallel;    // scheduling of the multistart loop

  void validate() const;
};

struct FitResult {
  LawId law_id = LawId::kShannonFull;
  XOrientation x_orientation = XOrientation::kNone;
  ParamVector params{LawId::kShannonFull, {}};
  Normalization normalization;
  double sse = 0.0;
  std::optional<double> r2_train;  // nullopt when the training losses have zero variance
  std::size_t n_obs = 0;
  bool converged = false;
  int iterations_used = 0;
  int start_index_won = 0;
  std::uint64_t seed = 0;
  ObjectiveSpace objective_space = ObjectiveSpace::kLoss;

  /// The law spec with this fit's orientation applied.
  LawSpec law() const;

  bool operator==(const FitResult&) const = default;
};

struct LocalSolveResult {
  std::vector<double> params;       // positive, raw coordinates
  double sse = 0.0;
  int iterations = 0;               // trial steps, accepted or rejected
  bool converged = false;
  std::vector<double> sse_history;  // starting SSE followed by every accepted SSE
};

struct StartOutcome {
  std::vector<double> start;               // raw coordinates
  std::optional<LocalSolveResult> result;  // empty when the start was not evaluable
  std::string failure;
};

struct FitDetail {
  FitResult result;
  std::vector<StartOutcome> starts;
};

/// The law with the config's orientation override applied.
LawSpec resolve_law(const LawSpec& law, const FitConfig& config);

/// Start vectors in raw coordinates: lexicographic combinations of
/// `init_values` (first parameter slowest) up to `starts`, random
/// log-uniform fill for any shortfall, then `random_starts` more.
std::vector<std::vector<double>> start_points(const LawSpec& law, const FitConfig& config);

/// predicted - observed per observation, in loss or log-loss space.
std::vector<double> residuals(const LawSpec& law, std::span<const double> params, const ObservationSet& data,
                              ObjectiveSpace space);

/// Levenberg-Marquardt in u = ln(theta) from `start_log`. Each accepted step
/// lowers SSE; steps that leave the law's domain count as rejected.
LocalSolveResult local_solve(const LawSpec& law, const ObservationSet& data, std::span<const double> start_log,
                             const FitConfig& config);

FitResult fit(const LawSpec& law, const ObservationSet& data, const FitConfig& config);
FitDetail fit_detailed(const LawSpec& law, const ObservationSet& data, const FitConfig& config);

/// Predicts a raw observation by replaying the fit's normalization.
double predict_observation(const FitResult& fit, const Observation& obs);

nlohmann::json to_json(const FitResult& fit);
FitResult fit_result_from_json(const nlohmann::json& doc);

}  // namespace sslaw
