#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "sslaw/dataset.hpp"

namespace sslaw {

enum class LawId {
  kShannonFull,
  kShannonSimplified,
  kShannonExtended,
  kOpenAI,
  kChinchilla,
  kQiD,
  kPrecision,
  kSymmetric,
  kAsymmetric,
  kShannonSizeOnlyAblation,
};

/// Whether a larger X shrinks (mitigating) or grows (amplifying) the
/// degradation term of an X-aware law.
enum class XOrientation { kNone, kMitigating, kAmplifying };

struct LawSpec {
  LawId id;
  std::string name;          // registry id, e.g. "shannon_full"
  std::string display_name;  // row label used in text tables
  std::vector<std::string> param_names;
  bool needs_x = false;
  XOrientation x_orientation = XOrientation::kNone;

  std::size_t param_count() const { return param_names.size(); }
  bool is_shannon() const;
  std::size_t param_index(std::string_view name) const;
};

struct ParamVector {
  LawId law;
  std::vector<double> values;

  bool operator==(const ParamVector&) const = default;
};

/// All ten law forms in stable order.
const std::vector<LawSpec>& law_registry();
const LawSpec& law_spec(LawId id);
const LawSpec& law_spec(std::string_view name);
std::string_view to_string(LawId id);
std::string_view to_string(XOrientation orientation);
XOrientation x_orientation_from_string(std::string_view name);

/// Copy of `law` with its X orientation replaced. Only X-aware laws accept
/// a non-none orientation.
LawSpec with_orientation(const LawSpec& law, XOrientation orientation);

/// Throws kValidation unless `values` has the law's arity and is strictly
/// positive and finite.
void validate_params(const LawSpec& law, std::span<const double> values);

/// a*n^alpha * log2(1 + SNR) for the Shannon family. n and d are
/// normalized. Throws kDomain on non-positive inputs, missing x, or an SNR
/// that is non-positive or overflows.
double capacity(const LawSpec& law, std::span<const double> params, double n, double d,
                std::optional<double> x = std::nullopt);

/// Loss predicted by any registered law; Shannon variants return 1/capacity.
/// Never returns a non-finite value: those cases throw kDomain.
double predict_loss(const LawSpec& law, std::span<const double> params, double n, double d,
                    std::optional<double> x = std::nullopt);

/// Central finite differences of predict_loss with respect to ln(theta_j),
/// one row per observation in set order. Inputs are normalized with the
/// set's normalization.
Eigen::MatrixXd jacobian_fd(const LawSpec& law, std::span<const double> params, const ObservationSet& set,
                            double step_rel);

namespace detail {

/// Pre-logged evaluation point used by the hot loops. `x` is NaN when absent.
struct EvalPoint {
  double log_n;
  double log_d;
  double x;
};

EvalPoint make_point(double n, double d, std::optional<double> x);

/// Non-throwing evaluation; NaN marks every domain failure. Preconditions on
/// arity and orientation are the caller's responsibility.
double loss_or_nan(const LawSpec& law, const double* params, const EvalPoint& p) noexcept;

}  // namespace detail

}  // namespace sslaw
