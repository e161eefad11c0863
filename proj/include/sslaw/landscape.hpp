#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslaw/dataset.hpp"
#include "sslaw/fitter.hpp"
#include "sslaw/laws.hpp"
#include "sslaw/parallel.hpp"

namespace sslaw {

enum class Spacing { kLog, kLinear };

std::string_view to_string(Spacing spacing);
Spacing spacing_from_string(std::string_view name);

/// Rectangle in raw (N, D) units.
struct GridSpec {
  double n_min = 0.0;
  double n_max = 0.0;
  double d_min = 0.0;
  double d_max = 0.0;
  int n_steps = 2;
  int d_steps = 2;
  Spacing spacing = Spacing::kLog;

  void validate() const;
};

/// Law values on the lattice, row-major over N then D. A cell the law cannot
/// evaluate holds nullopt.
struct LossGrid {
  GridSpec spec;
  std::vector<double> n_axis;
  std::vector<double> d_axis;
  std::vector<std::optional<double>> values;
  LawId law_id = LawId::kShannonFull;
  std::vector<double> params;
  Normalization normalization;
  std::optional<double> x;

  const std::optional<double>& at(std::size_t i, std::size_t j) const { return values[i * d_axis.size() + j]; }
};

/// Endpoints are reproduced exactly; interior log samples are geometric.
std::vector<double> axis_samples(double lo, double hi, int steps, Spacing spacing);

/// Evaluates the law (parameters expressed against `normalization`) at every
/// lattice point. Throws kDomain only when no cell is evaluable.
LossGrid grid_eval(const LawSpec& law, std::span<const double> params, const Normalization& normalization,
                   const GridSpec& spec, std::optional<double> x = std::nullopt,
                   ExecPolicy exec = ExecPolicy::kParallel);
LossGrid grid_eval(const FitResult& fit, const GridSpec& spec, std::optional<double> x = std::nullopt,
                   ExecPolicy exec = ExecPolicy::kParallel);

enum class SliceShape { kDecreasing, kUShaped, kIncreasing };
std::string_view to_string(SliceShape shape);

/// Non-increasing slices are decreasing and non-decreasing ones increasing
/// (a constant slice counts as decreasing). Anything else is classified by
/// where its first minimum sits: interior means u_shaped.
SliceShape classify_slice(std::span<const double> values);

struct BasinReport {
  bool has_interior_minimum = false;
  bool boundary_min = false;  // some cell attaining the minimum lies on an edge
  double argmin_n = 0.0;
  double argmin_d = 0.0;
  std::size_t argmin_i = 0;
  std::size_t argmin_j = 0;
  double min_value = 0.0;
  SliceShape monotonic_n = SliceShape::kDecreasing;  // majority over fixed-d slices along N
  SliceShape monotonic_d = SliceShape::kDecreasing;  // majority over fixed-n slices along D
  std::size_t partial_slices = 0;                    // slices with non-evaluable cells
};

BasinReport detect_basin(const LossGrid& grid);

struct AxisOptimum {
  double arg = 0.0;
  double value = 0.0;
  SliceShape classification = SliceShape::kDecreasing;
  bool partial = false;
};

/// Holds `fixed_axis` at `fixed_value` (raw units) and scans the other axis
/// over [lo, hi] on a log lattice, then refines the best cell by golden
/// section in log space.
AxisOptimum optimal_along_axis(const LawSpec& law, std::span<const double> params, const Normalization& normalization,
                               Axis fixed_axis, double fixed_value, double lo, double hi, int resolution,
                               std::optional<double> x = std::nullopt);

enum class NAxisVerdict { kBandwidthDominates, kNoiseDominates, kTie };
enum class DAxisVerdict { kSignalDominates, kNoiseDominates, kTie };
std::string_view to_string(NAxisVerdict v);
std::string_view to_string(DAxisVerdict v);

struct ExponentReport {
  double alpha = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double delta = 0.0;
  NAxisVerdict n_axis = NAxisVerdict::kTie;
  DAxisVerdict d_axis = DAxisVerdict::kTie;
};

ExponentReport exponent_report(const FitResult& fit);
ExponentReport exponent_report(LawId law, std::span<const double> params);

std::string grid_to_csv(const LossGrid& grid);
nlohmann::json to_json(const BasinReport& report);
nlohmann::json to_json(const ExponentReport& report);

}  // namespace sslaw
