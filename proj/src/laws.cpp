#include "sslaw/laws.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sslaw/error.hpp"

namespace sslaw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

LawSpec make_spec(LawId id, std::string name, std::string display, std::vector<std::string> params,
                  bool needs_x) {
  return LawSpec{id,       std::move(name), std::move(display), std::move(params),
                 needs_x, needs_x ? XOrientation::kMitigating : XOrientation::kNone};
}

std::vector<LawSpec> build_registry() {
  const std::vector<std::string> shannon9 = {"a", "b", "c", "d", "e", "alpha", "beta", "gamma", "delta"};
  const std::vector<std::string> perturb9 = {"a", "b", "c", "d", "alpha", "beta", "alpha_p", "beta_p", "gamma"};
  return {
      make_spec(LawId::kShannonFull, "shannon_full", "Shannon (9p)", shannon9, false),
      make_spec(LawId::kShannonSimplified, "shannon_simplified", "Shannon-Simpl (6p)",
                {"a", "c", "alpha", "beta", "gamma", "delta"}, false),
      make_spec(LawId::kShannonExtended, "shannon_extended", "Shannon-X (9p)", shannon9, true),
      make_spec(LawId::kOpenAI, "openai", "OpenAI", {"a", "b", "alpha", "beta"}, false),
      make_spec(LawId::kChinchilla, "chinchilla", "Chinchilla", {"a", "b", "c", "alpha", "beta"}, false),
      make_spec(LawId::kQiD, "qid", "QiD Law", perturb9, true),
      make_spec(LawId::kPrecision, "precision", "Law of Precision", perturb9, true),
      make_spec(LawId::kSymmetric, "symmetric", "Symmetric Law", {"a", "b", "c", "alpha", "beta"}, false),
      make_spec(LawId::kAsymmetric, "asymmetric", "Asymmetric Law",
                {"a", "b", "c", "alpha", "beta", "alpha_p", "beta_p"}, false),
      make_spec(LawId::kShannonSizeOnlyAblation, "shannon_sizeonly_ablation", "Shannon size-only cN^g (9p)",
                shannon9, false),
  };
}

// Numerator, denominator and bandwidth of the Shannon family. Parameter
// layout: full/extended/ablation use {a,b,c,d,e,alpha,beta,gamma,delta},
// simplified uses {a,c,alpha,beta,gamma,delta} with b = d = 1 and e = 0.
struct ShannonTerms {
  double bandwidth;
  double snr;
};

ShannonTerms shannon_terms(const LawSpec& law, const double* p, const detail::EvalPoint& pt) noexcept {
  if (law.id == LawId::kShannonSimplified) {
    const double a = p[0], c = p[1], alpha = p[2], beta = p[3], gamma = p[4], delta = p[5];
    const double signal = std::exp(beta * pt.log_d);
    const double noise = c * std::exp(gamma * (pt.log_d + pt.log_n)) + std::exp(delta * pt.log_d);
    return {a * std::exp(alpha * pt.log_n), signal / noise};
  }
  const double a = p[0], b = p[1], c = p[2], dcoef = p[3], e = p[4];
  const double alpha = p[5], beta = p[6], gamma = p[7], delta = p[8];
  double signal = b * std::exp(beta * pt.log_d);
  if (law.id == LawId::kShannonExtended) {
    signal = law.x_orientation == XOrientation::kAmplifying ? signal / pt.x : signal * pt.x;
  }
  const double model_log = law.id == LawId::kShannonSizeOnlyAblation ? pt.log_n : pt.log_d + pt.log_n;
  const double noise = c * std::exp(gamma * model_log) + dcoef * std::exp(delta * pt.log_d) + e;
  return {a * std::exp(alpha * pt.log_n), signal / noise};
}

double chinchilla_core(const double* p, const detail::EvalPoint& pt) noexcept {
  // {a, b, c, alpha, beta}
  return p[0] * std::exp(-p[3] * pt.log_n) + p[1] * std::exp(-p[4] * pt.log_d) + p[2];
}

double perturbation_law(const LawSpec& law, const double* p, const detail::EvalPoint& pt) noexcept {
  const double a = p[0], b = p[1], c = p[2], dcoef = p[3];
  const double alpha = p[4], beta = p[5], alpha_p = p[6], beta_p = p[7], gamma = p[8];
  const double base = a * std::exp(-alpha * pt.log_n) + b * std::exp(-beta * pt.log_d) + c;
  const bool amplifying = law.x_orientation == XOrientation::kAmplifying;
  if (law.id == LawId::kQiD) {
    if (!(pt.x > 0.0)) return kNaN;
    const double x_term = std::exp((amplifying ? gamma : -gamma) * std::log(pt.x));
    return base + dcoef * std::exp(alpha_p * pt.log_n + beta_p * pt.log_d) * x_term;
  }
  const double x_term = amplifying ? std::exp(gamma * pt.x) : std::exp(-pt.x / gamma);
  return base + dcoef * std::exp(beta_p * pt.log_d - alpha_p * pt.log_n) * x_term;
}

}  // namespace

bool LawSpec::is_shannon() const {
  return id == LawId::kShannonFull || id == LawId::kShannonSimplified || id == LawId::kShannonExtended ||
         id == LawId::kShannonSizeOnlyAblation;
}

std::size_t LawSpec::param_index(std::string_view pname) const {
  const auto it = std::find(param_names.begin(), param_names.end(), pname);
  if (it == param_names.end()) {
    fail(ErrorKind::kValidation, "law " + name + " has no parameter '" + std::string(pname) + "'");
  }
  return static_cast<std::size_t>(it - param_names.begin());
}

const std::vector<LawSpec>& law_registry() {
  static const std::vector<LawSpec> registry = build_registry();
  return registry;
}

const LawSpec& law_spec(LawId id) {
  for (const auto& spec : law_registry()) {
    if (spec.id == id) return spec;
  }
  fail(ErrorKind::kValidation, "unregistered law id");
}

const LawSpec& law_spec(std::string_view name) {
  for (const auto& spec : law_registry()) {
    if (spec.name == name) return spec;
  }
  fail(ErrorKind::kValidation, "unknown law '" + std::string(name) + "'");
}

std::string_view to_string(LawId id) { return law_spec(id).name; }

std::string_view to_string(XOrientation orientation) {
  switch (orientation) {
    case XOrientation::kNone: return "none";
    case XOrientation::kMitigating: return "mitigating";
    case XOrientation::kAmplifying: return "amplifying";
  }
  return "none";
}

XOrientation x_orientation_from_string(std::string_view name) {
  if (name == "none") return XOrientation::kNone;
  if (name == "mitigating") return XOrientation::kMitigating;
  if (name == "amplifying") return XOrientation::kAmplifying;
  fail(ErrorKind::kValidation,
       "unknown x orientation '" + std::string(name) + "' (expected mitigating or amplifying)");
}

LawSpec with_orientation(const LawSpec& law, XOrientation orientation) {
  if (law.needs_x == (orientation == XOrientation::kNone)) {
    fail(ErrorKind::kValidation, "law " + law.name + (law.needs_x ? " requires a mitigating or amplifying X orientation"
                                                                   : " does not take an X orientation"));
  }
  LawSpec copy = law;
  copy.x_orientation = orientation;
  return copy;
}

void validate_params(const LawSpec& law, std::span<const double> values) {
  if (values.size() != law.param_count()) {
    fail(ErrorKind::kValidation, "law " + law.name + " expects " + std::to_string(law.param_count()) +
                                     " parameters, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      fail(ErrorKind::kValidation, "parameter " + law.param_names[i] + " of " + law.name +
                                       " must be positive and finite, got " + format_number(values[i]));
    }
  }
}

namespace detail {

EvalPoint make_point(double n, double d, std::optional<double> x) {
  return {std::log(n), std::log(d), x ? *x : kNaN};
}

double loss_or_nan(const LawSpec& law, const double* p, const EvalPoint& pt) noexcept {
  double loss = kNaN;
  switch (law.id) {
    case LawId::kShannonFull:
    case LawId::kShannonSimplified:
    case LawId::kShannonExtended:
    case LawId::kShannonSizeOnlyAblation: {
      const auto terms = shannon_terms(law, p, pt);
      if (!(terms.snr > 0.0) || !std::isfinite(terms.snr)) return kNaN;
      const double cap = terms.bandwidth * std::log1p(terms.snr) / std::numbers::ln2;
      if (!(cap > 0.0) || !std::isfinite(cap)) return kNaN;
      loss = 1.0 / cap;
      break;
    }
    case LawId::kOpenAI: {
      const double a = p[0], b = p[1], alpha = p[2], beta = p[3];
      const double inner = std::exp((alpha / beta) * (std::log(a) - pt.log_n)) + b * std::exp(-pt.log_d);
      loss = std::exp(beta * std::log(inner));
      break;
    }
    case LawId::kChinchilla:
      loss = chinchilla_core(p, pt);
      break;
    case LawId::kQiD:
    case LawId::kPrecision:
      loss = perturbation_law(law, p, pt);
      break;
    case LawId::kSymmetric: {
      const double a = p[0], b = p[1], c = p[2], alpha = p[3], beta = p[4];
      const double ratio = alpha * pt.log_n - beta * pt.log_d;
      loss = a * std::exp(ratio) + b * std::exp(-ratio) + c;
      break;
    }
    case LawId::kAsymmetric: {
      const double a = p[0], b = p[1], c = p[2], alpha = p[3], beta = p[4], alpha_p = p[5], beta_p = p[6];
      loss = a * std::exp(alpha * pt.log_n - beta * pt.log_d) + b * std::exp(beta_p * pt.log_d - alpha_p * pt.log_n) + c;
      break;
    }
  }
  if (!(loss > 0.0) || !std::isfinite(loss)) return kNaN;
  return loss;
}

}  // namespace detail

namespace {

void check_inputs(const LawSpec& law, std::span<const double> params, double n, double d,
                  std::optional<double> x) {
  validate_params(law, params);
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::kDomain, "n must be positive and finite");
  if (!(d > 0.0) || !std::isfinite(d)) fail(ErrorKind::kDomain, "d must be positive and finite");
  if (law.needs_x) {
    if (!x) fail(ErrorKind::kDomain, "law " + law.name + " requires x");
    if (!std::isfinite(*x)) fail(ErrorKind::kDomain, "x must be finite");
    if (law.x_orientation == XOrientation::kNone) {
      fail(ErrorKind::kValidation, "law " + law.name + " requires an X orientation");
    }
  }
}

}  // namespace

double capacity(const LawSpec& law, std::span<const double> params, double n, double d, std::optional<double> x) {
  if (!law.is_shannon()) fail(ErrorKind::kValidation, "capacity is defined only for Shannon laws, not " + law.name);
  check_inputs(law, params, n, d, x);
  const auto pt = detail::make_point(n, d, law.needs_x ? x : std::nullopt);
  const auto terms = shannon_terms(law, params.data(), pt);
  if (std::isinf(terms.snr)) fail(ErrorKind::kDomain, "SNR overflows to infinity");
  if (!(terms.snr > 0.0) || !std::isfinite(terms.snr)) fail(ErrorKind::kDomain, "SNR is not positive");
  const double cap = terms.bandwidth * std::log1p(terms.snr) / std::numbers::ln2;
  if (!std::isfinite(cap)) fail(ErrorKind::kDomain, "capacity overflows");
  if (!(cap > 0.0)) fail(ErrorKind::kDomain, "capacity is zero");
  return cap;
}

double predict_loss(const LawSpec& law, std::span<const double> params, double n, double d,
                    std::optional<double> x) {
  if (law.is_shannon()) {
    const double cap = capacity(law, params, n, d, x);
    const double loss = 1.0 / cap;
    if (!std::isfinite(loss)) fail(ErrorKind::kDomain, "capacity underflow gives infinite loss");
    return loss;
  }
  check_inputs(law, params, n, d, x);
  const double loss = detail::loss_or_nan(law, params.data(), detail::make_point(n, d, law.needs_x ? x : std::nullopt));
  if (std::isnan(loss)) {
    fail(ErrorKind::kDomain, "law " + law.name + " is not evaluable at n=" + format_number(n) +
                                 ", d=" + format_number(d));
  }
  return loss;
}

Eigen::MatrixXd jacobian_fd(const LawSpec& law, std::span<const double> params, const ObservationSet& set,
                            double step_rel) {
  if (!(step_rel > 0.0) || step_rel > 1e-2) fail(ErrorKind::kValidation, "step_rel must lie in (0, 1e-2]");
  validate_params(law, params);
  const std::size_t p = params.size();
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(set.size()), static_cast<Eigen::Index>(p));
  std::vector<double> plus(params.begin(), params.end());
  std::vector<double> minus(params.begin(), params.end());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto x = set[i].x_level;
    if (law.needs_x && !x) fail(ErrorKind::kValidation, "row " + std::to_string(i + 1) + ": missing x_level");
    // Validates evaluability at the base point.
    predict_loss(law, params, set.normalized_n(i), set.normalized_d(i), x);
    const auto pt = detail::make_point(set.normalized_n(i), set.normalized_d(i), law.needs_x ? x : std::nullopt);
    for (std::size_t j = 0; j < p; ++j) {
      plus[j] = params[j] * std::exp(step_rel);
      minus[j] = params[j] * std::exp(-step_rel);
      const double hi = detail::loss_or_nan(law, plus.data(), pt);
      const double lo = detail::loss_or_nan(law, minus.data(), pt);
      plus[j] = minus[j] = params[j];
      if (std::isnan(hi) || std::isnan(lo)) {
        fail(ErrorKind::kDomain, "row " + std::to_string(i + 1) + ": finite-difference stencil leaves the domain");
      }
      jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (hi - lo) / (2.0 * step_rel);
    }
  }
  return jac;
}

}  // namespace sslaw
