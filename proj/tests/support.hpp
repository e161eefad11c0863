#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "sslaw/dataset.hpp"
#include "sslaw/laws.hpp"

namespace sslaw::fixtures {

struct Design {
  int models = 6;
  int checkpoints = 16;
  std::vector<double> levels;  // empty: no x_level column
  double n_lo = 1.6e8;
  double n_hi = 1.2e10;
  double d_lo = 2e10;
  double d_hi = 3.07e11;
};

inline double log_lerp(double lo, double hi, int i, int count) {
  if (count == 1) return lo;
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
}

/// Exact observations of `law`. `params` holds one vector per level, or a
/// single vector shared by every level.
inline ObservationSet synthetic_set(const LawSpec& law, const std::vector<std::vector<double>>& params,
                                    const Design& design, Normalization norm = {}) {
  std::vector<Observation> rows;
  const std::vector<std::optional<double>> levels = [&] {
    std::vector<std::optional<double>> out;
    for (double l : design.levels) out.emplace_back(l);
    if (out.empty()) out.emplace_back(std::nullopt);
    return out;
  }();
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& theta = params.size() == 1 ? params.front() : params.at(l);
    for (int i = 0; i < design.models; ++i) {
      const double n = log_lerp(design.n_lo, design.n_hi, i, design.models);
      for (int j = 0; j < design.checkpoints; ++j) {
        Observation o;
        o.model_id = "m" + std::to_string(i);
        o.n_params = n;
        o.d_tokens = log_lerp(design.d_lo, design.d_hi, j, design.checkpoints);
        o.x_level = levels[l];
        o.loss = predict_loss(law, theta, n / norm.n_scale, o.d_tokens / norm.d_scale, law.needs_x ? o.x_level : std::nullopt);
        rows.push_back(std::move(o));
      }
    }
  }
  return ObservationSet(std::move(rows), norm);
}

inline double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

/// Random positive parameters: exponents uniform in [0.1, 0.9], other
/// coefficients log-uniform in [0.2, 5]; the precision law's gamma is
/// uniform in [1, 4] so its exp(-x/gamma) factor stays visible over x in
/// [1, 4].
inline std::vector<double> random_params(const LawSpec& law, std::mt19937_64& gen) {
  std::vector<double> out;
  for (const auto& name : law.param_names) {
    const bool exponent = name.rfind("alpha", 0) == 0 || name.rfind("beta", 0) == 0 || name.rfind("gamma", 0) == 0 ||
                          name.rfind("delta", 0) == 0;
    double v = exponent ? 0.1 + 0.8 * uniform01(gen) : std::exp(std::log(0.2) + uniform01(gen) * std::log(25.0));
    if (law.id == LawId::kPrecision && name == "gamma") v = 1.0 + 3.0 * uniform01(gen);
    out.push_back(v);
  }
  return out;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sslaw_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

/// Writes `set` as CSV with an x_level column when any row has one.
inline void write_csv(const std::filesystem::path& path, const ObservationSet& set) {
  std::ofstream out(path);
  const bool with_x = set.has_x();
  out << "model_id,n_params,d_tokens," << (with_x ? "x_level," : "") << "loss\n";
  for (const auto& o : set.observations()) {
    out << o.model_id << ',' << format_number(o.n_params) << ',' << format_number(o.d_tokens) << ',';
    if (with_x) out << format_number(*o.x_level) << ',';
    out << format_number(o.loss) << '\n';
  }
}

}  // namespace sslaw::fixtures
