#pragma once

#include <cmath>
#include <vector>

#include "sslaw/laws.hpp"

namespace sslaw::fixtures {

// Straight-line loss formulas written with pow and log1p, independent of the
// library's log-space evaluation. n and d are normalized.
inline double oracle_loss(const LawSpec& law, const std::vector<double>& p, double n, double d, double x = 1.0) {
  const bool amplifying = law.x_orientation == XOrientation::kAmplifying;
  switch (law.id) {
    case LawId::kShannonFull: {
      const double a = p[0], b = p[1], c = p[2], dc = p[3], e = p[4], al = p[5], be = p[6], ga = p[7], de = p[8];
      const double snr = b * std::pow(d, be) / (c * std::pow(d * n, ga) + dc * std::pow(d, de) + e);
      return 1.0 / (a * std::pow(n, al) * (std::log1p(snr) / std::log(2.0)));
    }
    case LawId::kShannonSimplified: {
      const double a = p[0], c = p[1], al = p[2], be = p[3], ga = p[4], de = p[5];
      const double snr = std::pow(d, be) / (c * std::pow(d * n, ga) + std::pow(d, de));
      return 1.0 / (a * std::pow(n, al) * (std::log1p(snr) / std::log(2.0)));
    }
    case LawId::kShannonExtended: {
      const double a = p[0], b = p[1], c = p[2], dc = p[3], e = p[4], al = p[5], be = p[6], ga = p[7], de = p[8];
      const double signal = amplifying ? b * std::pow(d, be) / x : b * std::pow(d, be) * x;
      const double snr = signal / (c * std::pow(d * n, ga) + dc * std::pow(d, de) + e);
      return 1.0 / (a * std::pow(n, al) * (std::log1p(snr) / std::log(2.0)));
    }
    case LawId::kShannonSizeOnlyAblation: {
      const double a = p[0], b = p[1], c = p[2], dc = p[3], e = p[4], al = p[5], be = p[6], ga = p[7], de = p[8];
      const double snr = b * std::pow(d, be) / (c * std::pow(n, ga) + dc * std::pow(d, de) + e);
      return 1.0 / (a * std::pow(n, al) * (std::log1p(snr) / std::log(2.0)));
    }
    case LawId::kOpenAI: {
      const double a = p[0], b = p[1], al = p[2], be = p[3];
      return std::pow(std::pow(a / n, al / be) + b / d, be);
    }
    case LawId::kChinchilla:
      return p[0] / std::pow(n, p[3]) + p[1] / std::pow(d, p[4]) + p[2];
    case LawId::kQiD: {
      const double base = p[0] / std::pow(n, p[4]) + p[1] / std::pow(d, p[5]) + p[2];
      const double xt = amplifying ? std::pow(x, p[8]) : std::pow(x, -p[8]);
      return base + p[3] * std::pow(n, p[6]) * std::pow(d, p[7]) * xt;
    }
    case LawId::kPrecision: {
      const double base = p[0] / std::pow(n, p[4]) + p[1] / std::pow(d, p[5]) + p[2];
      const double xt = amplifying ? std::exp(p[8] * x) : std::exp(-x / p[8]);
      return base + p[3] * (std::pow(d, p[7]) / std::pow(n, p[6])) * xt;
    }
    case LawId::kSymmetric: {
      const double a = p[0], b = p[1], c = p[2], al = p[3], be = p[4];
      return a * std::pow(n, al) / std::pow(d, be) + b * std::pow(d, be) / std::pow(n, al) + c;
    }
    case LawId::kAsymmetric: {
      const double a = p[0], b = p[1], c = p[2], al = p[3], be = p[4], alp = p[5], bep = p[6];
      return a * std::pow(n, al) / std::pow(d, be) + b * std::pow(d, bep) / std::pow(n, alp) + c;
    }
  }
  return NAN;
}

}  // namespace sslaw::fixtures
