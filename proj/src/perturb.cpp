#include "sslaw/perturb.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "sslaw/error.hpp"

namespace sslaw {

std::string_view to_string(DType dtype) { return dtype == DType::kF32 ? "f32" : "f64"; }

std::string_view to_string(PowerMode mode) { return mode == PowerMode::kGlobal ? "global" : "per_segment"; }

PowerMode power_mode_from_string(std::string_view name) {
  if (name == "global") return PowerMode::kGlobal;
  if (name == "per_segment") return PowerMode::kPerSegment;
  fail(ErrorKind::kValidation, "unknown power mode '" + std::string(name) + "'");
}

void WeightVector::validate() const {
  if (values.empty()) fail(ErrorKind::kValidation, "weight vector is empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) fail(ErrorKind::kValidation, "weight " + std::to_string(i) + " is not finite");
    if (dtype == DType::kF32 && static_cast<double>(static_cast<float>(v)) != v) {
      fail(ErrorKind::kValidation, "weight " + std::to_string(i) + " is not representable as f32");
    }
  }
}

namespace {

constexpr std::size_t kBlock = 4096;

template <typename Term>
double blocked_sum(std::size_t n, Term term, ExecPolicy exec) {
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto run_block = [&](std::size_t b) {
    double s = 0.0;
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) s += term(i);
    partial[b] = s;
  };
  const auto count = static_cast<std::ptrdiff_t>(blocks);
  if (exec == ExecPolicy::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < count; ++b) run_block(static_cast<std::size_t>(b));
  } else {
    for (std::ptrdiff_t b = 0; b < count; ++b) run_block(static_cast<std::size_t>(b));
  }
  return std::accumulate(partial.begin(), partial.end(), 0.0);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

double signal_power(std::span<const double> values, ExecPolicy exec) {
  if (values.empty()) fail(ErrorKind::kValidation, "signal power of an empty vector");
  const double sum = blocked_sum(values.size(), [&](std::size_t i) { return values[i] * values[i]; }, exec);
  return sum / static_cast<double>(values.size());
}

double signal_power(const WeightVector& w, ExecPolicy exec) { return signal_power(std::span(w.values), exec); }

double noise_sigma2(double p_w, double snr_db) {
  if (!(p_w >= 0.0) || !std::isfinite(p_w)) fail(ErrorKind::kValidation, "signal power must be finite and >= 0");
  if (!std::isfinite(snr_db)) fail(ErrorKind::kValidation, "snr_db must be finite");
  return p_w / std::pow(10.0, snr_db / 10.0);
}

double gaussian_draw(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t key = splitmix64(seed);
  const std::uint64_t a = splitmix64(key ^ (2 * index));
  const std::uint64_t b = splitmix64(key ^ (2 * index + 1));
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;        // [0, 1)
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PerturbOutcome inject(const WeightVector& w, double snr_db, std::uint64_t seed, const PerturbOptions& options) {
  w.validate();
  if (!std::isfinite(snr_db)) fail(ErrorKind::kValidation, "snr_db must be finite");

  PerturbOutcome out;
  auto& rep = out.report;
  rep.target_snr_db = snr_db;
  rep.seed = seed;
  rep.count = w.count();
  rep.dtype = w.dtype;
  rep.power_mode = options.power_mode;
  rep.signal_power = signal_power(w, options.exec);
  if (rep.signal_power == 0.0) fail(ErrorKind::kValidation, "signal power is zero; SNR is undefined");
  rep.sigma2 = noise_sigma2(rep.signal_power, snr_db);

  // Per-element standard deviation, one entry per segment.
  std::vector<std::size_t> bounds{0};
  std::vector<double> sigma;
  if (options.power_mode == PowerMode::kGlobal) {
    bounds.push_back(w.count());
    sigma.push_back(std::sqrt(rep.sigma2));
  } else {
    if (options.segment_lengths.empty()) fail(ErrorKind::kValidation, "per-segment mode needs segment lengths");
    std::size_t offset = 0;
    for (std::size_t len : options.segment_lengths) {
      if (len == 0) fail(ErrorKind::kValidation, "segment lengths must be positive");
      if (len > w.count() - offset) fail(ErrorKind::kValidation, "segment lengths exceed the vector length");
      SegmentReport seg{offset, len, signal_power(std::span(w.values).subspan(offset, len), options.exec), 0.0};
      if (seg.signal_power == 0.0) {
        fail(ErrorKind::kValidation, "segment at offset " + std::to_string(offset) + " has zero signal power");
      }
      seg.sigma2 = noise_sigma2(seg.signal_power, snr_db);
      rep.segments.push_back(seg);
      sigma.push_back(std::sqrt(seg.sigma2));
      offset += len;
      bounds.push_back(offset);
    }
    if (offset != w.count()) fail(ErrorKind::kValidation, "segment lengths must sum to the vector length");
  }

  out.perturbed.dtype = w.dtype;
  out.perturbed.values.resize(w.count());
  const bool f32 = w.dtype == DType::kF32;
  for (std::size_t s = 0; s < sigma.size(); ++s) {
    const auto lo = static_cast<std::ptrdiff_t>(bounds[s]);
    const auto hi = static_cast<std::ptrdiff_t>(bounds[s + 1]);
    const double sd = sigma[s];
    const auto perturb_one = [&](std::ptrdiff_t i) {
      const auto k = static_cast<std::size_t>(i);
      const double v = w.values[k] + sd * gaussian_draw(seed, k);
      out.perturbed.values[k] = f32 ? static_cast<double>(static_cast<float>(v)) : v;
    };
    if (options.exec == ExecPolicy::kParallel) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t i = lo; i < hi; ++i) perturb_one(i);
    } else {
      for (std::ptrdiff_t i = lo; i < hi; ++i) perturb_one(i);
    }
  }

  if (out.perturbed.values != w.values) rep.empirical_snr_db = measure_snr(w, out.perturbed, options.exec);
  return out;
}

double measure_snr(const WeightVector& original, const WeightVector& perturbed, ExecPolicy exec) {
  if (original.count() != perturbed.count()) fail(ErrorKind::kValidation, "vectors differ in length");
  if (original.count() == 0) fail(ErrorKind::kValidation, "vectors are empty");
  const double p_w = signal_power(original, exec);
  if (p_w == 0.0) fail(ErrorKind::kValidation, "original vector has zero signal power");
  const auto& a = original.values;
  const auto& b = perturbed.values;
  const double diff = blocked_sum(a.size(), [&](std::size_t i) { return (b[i] - a[i]) * (b[i] - a[i]); }, exec) /
                      static_cast<double>(a.size());
  if (diff == 0.0) fail(ErrorKind::kDomain, "vectors are identical; SNR is infinite");
  if (!std::isfinite(diff)) fail(ErrorKind::kNumerical, "difference power is not finite");
  return 10.0 * std::log10(p_w / diff);
}

nlohmann::json to_json(const PerturbReport& r) {
  nlohmann::json j{{"target_snr_db", r.target_snr_db},
                   {"signal_power", r.signal_power},
                   {"sigma2", r.sigma2},
                   {"empirical_snr_db", r.empirical_snr_db ? nlohmann::json(*r.empirical_snr_db) : nlohmann::json()},
                   {"seed", r.seed},
                   {"count", r.count},
                   {"dtype", std::string(to_string(r.dtype))},
                   {"power_mode", std::string(to_string(r.power_mode))},
                   {"noise", "splitmix64 keyed (seed, index) + box-muller cosine"}};
  if (!r.segments.empty()) {
    auto& segs = j["segments"] = nlohmann::json::array();
    for (const auto& s : r.segments) {
      segs.push_back({{"offset", s.offset}, {"count", s.count}, {"signal_power", s.signal_power}, {"sigma2", s.sigma2}});
    }
  }
  return j;
}

}  // namespace sslaw
