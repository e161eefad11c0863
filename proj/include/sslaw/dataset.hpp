#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sslaw {

/// One measured loss point. `n_params` and `d_tokens` are raw counts.
struct Observation {
  std::string model_id;
  double n_params = 0.0;
  double d_tokens = 0.0;
  std::optional<double> x_level;  // SNR in dB, learning rate or bit width
  double loss = 0.0;
  std::optional<std::string> source_tag;

  bool operator==(const Observation&) const = default;
};

/// Divisors applied to raw N and D before any law sees them.
struct Normalization {
  double n_scale = 1e9;
  double d_scale = 1e9;

  bool operator==(const Normalization&) const = default;
};

enum class LevelKey { kXLevel, kSourceTag };
enum class DataFormat { kCsv, kJson };
enum class Axis { kN, kD };

std::string_view to_string(LevelKey key);
LevelKey level_key_from_string(std::string_view name);

/// Immutable, validated collection of observations in load order.
///
/// Construction enforces the per-row invariants (positive N, D and loss,
/// finite x) and rejects duplicate (model_id, d_tokens, x_level, source_tag)
/// keys. Error messages name the 1-based row.
class ObservationSet {
 public:
  ObservationSet() = default;
  ObservationSet(std::vector<Observation> observations, Normalization normalization = {},
                 LevelKey level_key = LevelKey::kXLevel);

  std::span<const Observation> observations() const { return observations_; }
  const Observation& operator[](std::size_t i) const { return observations_[i]; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }

  const Normalization& normalization() const { return normalization_; }
  LevelKey level_key() const { return level_key_; }

  /// True when every observation carries an x_level.
  bool has_x() const;

  double normalized_n(std::size_t i) const { return observations_[i].n_params / normalization_.n_scale; }
  double normalized_d(std::size_t i) const { return observations_[i].d_tokens / normalization_.d_scale; }

  /// Same normalization and level key, different rows.
  ObservationSet with_observations(std::vector<Observation> observations) const;
  ObservationSet with_normalization(Normalization normalization) const;

  bool operator==(const ObservationSet&) const = default;

 private:
  std::vector<Observation> observations_;
  Normalization normalization_;
  LevelKey level_key_ = LevelKey::kXLevel;
};

struct LevelGroup {
  std::string label;             // "40" or the source tag
  std::optional<double> value;   // numeric level for x_level grouping
  ObservationSet set;
};

ObservationSet load_observations(const std::filesystem::path& path, DataFormat format,
                                 LevelKey level_key = LevelKey::kXLevel);

/// Parses CSV text. Exposed for tests and for stdin-style callers.
ObservationSet parse_observations_csv(std::string_view text, LevelKey level_key = LevelKey::kXLevel);
ObservationSet parse_observations_json(std::string_view text, LevelKey level_key = LevelKey::kXLevel);

/// Format from the file extension; `.json` is JSON, anything else CSV.
DataFormat format_from_path(const std::filesystem::path& path);

/// Partition by level, ascending (numeric for x_level, lexicographic for tags).
std::vector<LevelGroup> group_by_level(const ObservationSet& set);

std::vector<double> distinct_axis_values(const ObservationSet& set, Axis axis);

/// Canonical label of an observation's level; "" when the level is absent.
std::string level_label(const Observation& obs, LevelKey key);

/// Shortest decimal text that round-trips `value`.
std::string format_number(double value);

}  // namespace sslaw
