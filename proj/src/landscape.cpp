#include "sslaw/landscape.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "sslaw/error.hpp"

namespace sslaw {

std::string_view to_string(Spacing spacing) { return spacing == Spacing::kLog ? "log" : "linear"; }

Spacing spacing_from_string(std::string_view name) {
  if (name == "log") return Spacing::kLog;
  if (name == "linear") return Spacing::kLinear;
  fail(ErrorKind::kValidation, "unknown spacing '" + std::string(name) + "'");
}

void GridSpec::validate() const {
  for (double v : {n_min, n_max, d_min, d_max}) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::kValidation, "grid bounds must be positive and finite");
  }
  if (!(n_min < n_max) || !(d_min < d_max)) fail(ErrorKind::kValidation, "grid requires min < max on both axes");
  if (n_steps < 2 || d_steps < 2) fail(ErrorKind::kValidation, "grid requires at least 2 steps per axis");
}

std::vector<double> axis_samples(double lo, double hi, int steps, Spacing spacing) {
  std::vector<double> out(static_cast<std::size_t>(steps));
  const double span = static_cast<double>(steps - 1);
  for (int i = 0; i < steps; ++i) {
    const double t = static_cast<double>(i) / span;
    out[static_cast<std::size_t>(i)] =
        spacing == Spacing::kLog ? std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))) : lo + t * (hi - lo);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

LossGrid grid_eval(const LawSpec& law, std::span<const double> params, const Normalization& normalization,
                   const GridSpec& spec, std::optional<double> x, ExecPolicy exec) {
  spec.validate();
  validate_params(law, params);
  if (law.needs_x && !x) fail(ErrorKind::kValidation, "law " + law.name + " needs an x value for grid evaluation");

  LossGrid grid;
  grid.spec = spec;
  grid.n_axis = axis_samples(spec.n_min, spec.n_max, spec.n_steps, spec.spacing);
  grid.d_axis = axis_samples(spec.d_min, spec.d_max, spec.d_steps, spec.spacing);
  grid.values.assign(grid.n_axis.size() * grid.d_axis.size(), std::nullopt);
  grid.law_id = law.id;
  grid.params.assign(params.begin(), params.end());
  grid.normalization = normalization;
  grid.x = law.needs_x ? x : std::nullopt;

  const auto rows = static_cast<std::ptrdiff_t>(grid.n_axis.size());
  const std::size_t cols = grid.d_axis.size();
  const auto eval_row = [&](std::size_t i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto pt = detail::make_point(grid.n_axis[i] / normalization.n_scale, grid.d_axis[j] / normalization.d_scale,
                                         grid.x);
      const double v = detail::loss_or_nan(law, grid.params.data(), pt);
      if (!std::isnan(v)) grid.values[i * cols + j] = v;
    }
  };
  if (exec == ExecPolicy::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) eval_row(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < rows; ++i) eval_row(static_cast<std::size_t>(i));
  }

  if (std::none_of(grid.values.begin(), grid.values.end(), [](const auto& v) { return v.has_value(); })) {
    fail(ErrorKind::kDomain, "law " + law.name + " is not evaluable anywhere on the grid");
  }
  return grid;
}

LossGrid grid_eval(const FitResult& fit, const GridSpec& spec, std::optional<double> x, ExecPolicy exec) {
  return grid_eval(fit.law(), fit.params.values, fit.normalization, spec, x, exec);
}

std::string_view to_string(SliceShape shape) {
  switch (shape) {
    case SliceShape::kDecreasing: return "decreasing";
    case SliceShape::kUShaped: return "u_shaped";
    case SliceShape::kIncreasing: return "increasing";
  }
  return "decreasing";
}

SliceShape classify_slice(std::span<const double> values) {
  if (values.empty()) fail(ErrorKind::kValidation, "cannot classify an empty slice");
  bool non_increasing = true;
  bool non_decreasing = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[i - 1]) non_increasing = false;
    if (values[i] < values[i - 1]) non_decreasing = false;
  }
  if (non_increasing) return SliceShape::kDecreasing;
  if (non_decreasing) return SliceShape::kIncreasing;
  const auto first_min = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  if (first_min == 0) return SliceShape::kIncreasing;
  if (first_min + 1 == values.size()) return SliceShape::kDecreasing;
  return SliceShape::kUShaped;
}

namespace {

// Majority class; exact count ties go to u_shaped when it is among the
// leaders, otherwise to decreasing.
SliceShape majority(const std::array<std::size_t, 3>& counts) {
  const std::size_t top = *std::max_element(counts.begin(), counts.end());
  if (counts[static_cast<std::size_t>(SliceShape::kUShaped)] == top) return SliceShape::kUShaped;
  if (counts[static_cast<std::size_t>(SliceShape::kDecreasing)] == top) return SliceShape::kDecreasing;
  return SliceShape::kIncreasing;
}

}  // namespace

BasinReport detect_basin(const LossGrid& grid) {
  const std::size_t rows = grid.n_axis.size();
  const std::size_t cols = grid.d_axis.size();
  if (rows < 3 || cols < 3) fail(ErrorKind::kValidation, "basin detection needs at least 3 samples per axis");

  BasinReport report;
  std::optional<double> best;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto& v = grid.at(i, j);
      if (v && (!best || *v < *best)) {
        best = *v;
        report.argmin_i = i;
        report.argmin_j = j;
      }
    }
  }
  if (!best) fail(ErrorKind::kDomain, "grid has no evaluable cells");
  report.min_value = *best;
  report.argmin_n = grid.n_axis[report.argmin_i];
  report.argmin_d = grid.d_axis[report.argmin_j];

  // Plateau rule: any boundary cell tying the minimum makes the basin open.
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const bool edge = i == 0 || j == 0 || i + 1 == rows || j + 1 == cols;
      const auto& v = grid.at(i, j);
      if (edge && v && *v == *best) report.boundary_min = true;
    }
  }
  report.has_interior_minimum = !report.boundary_min;

  std::array<std::size_t, 3> n_counts{}, d_counts{};
  std::vector<double> slice;
  for (std::size_t j = 0; j < cols; ++j) {
    slice.clear();
    for (std::size_t i = 0; i < rows; ++i) {
      if (grid.at(i, j)) slice.push_back(*grid.at(i, j));
    }
    if (slice.size() < rows) ++report.partial_slices;
    if (!slice.empty()) ++n_counts[static_cast<std::size_t>(classify_slice(slice))];
  }
  for (std::size_t i = 0; i < rows; ++i) {
    slice.clear();
    for (std::size_t j = 0; j < cols; ++j) {
      if (grid.at(i, j)) slice.push_back(*grid.at(i, j));
    }
    if (slice.size() < cols) ++report.partial_slices;
    if (!slice.empty()) ++d_counts[static_cast<std::size_t>(classify_slice(slice))];
  }
  report.monotonic_n = majority(n_counts);
  report.monotonic_d = majority(d_counts);
  return report;
}

AxisOptimum optimal_along_axis(const LawSpec& law, std::span<const double> params, const Normalization& normalization,
                               Axis fixed_axis, double fixed_value, double lo, double hi, int resolution,
                               std::optional<double> x) {
  validate_params(law, params);
  if (resolution < 3) fail(ErrorKind::kValidation, "resolution must be at least 3");
  if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi)) fail(ErrorKind::kValidation, "search range must satisfy 0 < lo < hi");
  if (!(fixed_value > 0.0)) fail(ErrorKind::kValidation, "fixed value must be positive");
  if (law.needs_x && !x) fail(ErrorKind::kValidation, "law " + law.name + " needs an x value");

  const auto value_at = [&](double log_var) {
    const double var = std::exp(log_var);
    const double n = fixed_axis == Axis::kN ? fixed_value : var;
    const double d = fixed_axis == Axis::kN ? var : fixed_value;
    const auto pt = detail::make_point(n / normalization.n_scale, d / normalization.d_scale, law.needs_x ? x : std::nullopt);
    const double v = detail::loss_or_nan(law, params.data(), pt);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  const auto lattice = axis_samples(lo, hi, resolution, Spacing::kLog);
  std::vector<double> logs(lattice.size());
  std::transform(lattice.begin(), lattice.end(), logs.begin(), [](double v) { return std::log(v); });
  std::vector<double> values(lattice.size());
  std::vector<double> evaluable;
  AxisOptimum out;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    values[i] = value_at(logs[i]);
    if (std::isinf(values[i])) {
      out.partial = true;
      continue;
    }
    evaluable.push_back(values[i]);
    if (!best || values[i] < values[*best]) best = i;
  }
  if (!best) fail(ErrorKind::kDomain, "slice is not evaluable anywhere in the search range");
  out.classification = classify_slice(evaluable);
  out.arg = lattice[*best];
  out.value = values[*best];

  // Golden section over the neighbouring lattice cells.
  double a = logs[*best == 0 ? 0 : *best - 1];
  double b = logs[std::min(*best + 1, logs.size() - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = value_at(c);
  double fd = value_at(d);
  for (int iter = 0; iter < 200 && (b - a) > 1e-12 * std::max(1.0, std::abs(a)); ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = value_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = value_at(d);
    }
  }
  const double refined_log = fc < fd ? c : d;
  const double refined = std::min(fc, fd);
  if (refined < out.value) {
    out.value = refined;
    out.arg = std::exp(refined_log);
  }
  return out;
}

std::string_view to_string(NAxisVerdict v) {
  switch (v) {
    case NAxisVerdict::kBandwidthDominates: return "bandwidth_dominates";
    case NAxisVerdict::kNoiseDominates: return "noise_dominates";
    case NAxisVerdict::kTie: return "tie";
  }
  return "tie";
}

std::string_view to_string(DAxisVerdict v) {
  switch (v) {
    case DAxisVerdict::kSignalDominates: return "signal_dominates";
    case DAxisVerdict::kNoiseDominates: return "noise_dominates";
    case DAxisVerdict::kTie: return "tie";
  }
  return "tie";
}

ExponentReport exponent_report(LawId law_id, std::span<const double> params) {
  const LawSpec& law = law_spec(law_id);
  if (!law.is_shannon()) fail(ErrorKind::kValidation, "exponent report needs a Shannon law, got " + law.name);
  validate_params(law, params);
  ExponentReport r;
  r.alpha = params[law.param_index("alpha")];
  r.beta = params[law.param_index("beta")];
  r.gamma = params[law.param_index("gamma")];
  r.delta = params[law.param_index("delta")];
  r.n_axis = r.alpha > r.gamma   ? NAxisVerdict::kBandwidthDominates
             : r.gamma > r.alpha ? NAxisVerdict::kNoiseDominates
                                 : NAxisVerdict::kTie;
  r.d_axis = r.beta > r.delta   ? DAxisVerdict::kSignalDominates
             : r.delta > r.beta ? DAxisVerdict::kNoiseDominates
                                : DAxisVerdict::kTie;
  return r;
}

ExponentReport exponent_report(const FitResult& fit) { return exponent_report(fit.law_id, fit.params.values); }

std::string grid_to_csv(const LossGrid& grid) {
  std::ostringstream out;
  out << "n,d,loss\n";
  for (std::size_t i = 0; i < grid.n_axis.size(); ++i) {
    for (std::size_t j = 0; j < grid.d_axis.size(); ++j) {
      out << format_number(grid.n_axis[i]) << ',' << format_number(grid.d_axis[j]) << ',';
      if (const auto& v = grid.at(i, j)) out << format_number(*v);
      out << '\n';
    }
  }
  return out.str();
}

nlohmann::json to_json(const BasinReport& r) {
  return {{"has_interior_minimum", r.has_interior_minimum},
          {"boundary_min", r.boundary_min},
          {"argmin", {{"n", r.argmin_n}, {"d", r.argmin_d}, {"i", r.argmin_i}, {"j", r.argmin_j}}},
          {"min_value", r.min_value},
          {"monotonic_n", std::string(to_string(r.monotonic_n))},
          {"monotonic_d", std::string(to_string(r.monotonic_d))},
          {"partial_slices", r.partial_slices}};
}

nlohmann::json to_json(const ExponentReport& r) {
  return {{"alpha", r.alpha},
          {"gamma", r.gamma},
          {"beta", r.beta},
          {"delta", r.delta},
          {"n_axis_verdict", std::string(to_string(r.n_axis))},
          {"d_axis_verdict", std::string(to_string(r.d_axis))}};
}

}  // namespace sslaw
