#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sslaw/parallel.hpp"

namespace sslaw {

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

std::string_view to_string(DType dtype);

/// Flat weights. Values are held in double either way; an f32 vector only
/// ever contains values representable as float.
struct WeightVector {
  std::vector<double> values;
  DType dtype = DType::kF64;

  std::size_t count() const { return values.size(); }
  /// Non-empty, finite, and float-representable when dtype is f32.
  void validate() const;

  bool operator==(const WeightVector&) const = default;
};

enum class PowerMode { kGlobal, kPerSegment };

std::string_view to_string(PowerMode mode);
PowerMode power_mode_from_string(std::string_view name);

struct PerturbOptions {
  PowerMode power_mode = PowerMode::kGlobal;
  std::vector<std::size_t> segment_lengths;  // kPerSegment only; must sum to the count
  ExecPolicy exec = ExecPolicy::kParallel;
};

struct SegmentReport {
  std::size_t offset = 0;
  std::size_t count = 0;
  double signal_power = 0.0;
  double sigma2 = 0.0;
};

struct PerturbReport {
  double target_snr_db = 0.0;
  double signal_power = 0.0;  // whole-vector power, whatever the mode
  double sigma2 = 0.0;        // noise_sigma2(signal_power, target_snr_db)
  // nullopt when the perturbed vector equals the input (noise rounded away).
  std::optional<double> empirical_snr_db;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  DType dtype = DType::kF64;
  PowerMode power_mode = PowerMode::kGlobal;
  std::vector<SegmentReport> segments;  // populated in per-segment mode
};

struct PerturbOutcome {
  WeightVector perturbed;
  PerturbReport report;
};

/// Mean squared value. The sum runs over fixed-size blocks combined in index
/// order, so the serial and parallel paths agree bit for bit.
double signal_power(std::span<const double> values, ExecPolicy exec = ExecPolicy::kParallel);
double signal_power(const WeightVector& w, ExecPolicy exec = ExecPolicy::kParallel);

double noise_sigma2(double p_w, double snr_db);

/// Standard normal draw for element `index` under `seed`: two SplitMix64
/// outputs keyed on (seed, index) feed the cosine branch of Box-Muller. Pure
/// function of its arguments, so any traversal order gives the same noise.
double gaussian_draw(std::uint64_t seed, std::uint64_t index);

PerturbOutcome inject(const WeightVector& w, double snr_db, std::uint64_t seed, const PerturbOptions& options = {});

/// 10 log10(P_w / P_diff). Throws when the vectors are identical.
double measure_snr(const WeightVector& original, const WeightVector& perturbed,
                   ExecPolicy exec = ExecPolicy::kParallel);

nlohmann::json to_json(const PerturbReport& report);

// Binary WVEC files and the one-value-per-line text form.
std::string encode_wvec(const WeightVector& w);
WeightVector decode_wvec(std::string_view bytes);
WeightVector read_wvec(const std::string& path);
void write_wvec(const std::string& path, const WeightVector& w);

std::string encode_text_vector(const WeightVector& w);
WeightVector decode_text_vector(std::string_view text, DType dtype);

}  // namespace sslaw
