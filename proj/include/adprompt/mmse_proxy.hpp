#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "adprompt/errors.hpp"
#include "adprompt/label.hpp"

namespace adprompt {

// Deterministic mapping from (class label, MMSE score) to an AD proxy
// probability, built from two class-conditional sigmoids
//
//   AD: p = sigma((30 - m) / T_AD)
//   HC: p = sigma((30 - m) / T_HC) - 0.5
//
// with temperatures forced by the anchor conditions at m = 26:
// p(AD,26) = 0.60 and p(HC,26) = 0.40. No learned parameters anywhere.
// AD scores land in [0.50, 1), HC scores in [0, 0.50), both strictly
// decreasing in m.

struct MmseProxyParams {
  double t_ad;  // 4 / ln(3/2)
  double t_hc;  // 4 / ln(9)
};

// Clinical severity band of an MMSE score (CDR-aligned banding).
enum class MmseBand { NoImpairment, Questionable, Mild, Moderate, Severe };

inline std::string to_string(MmseBand band) {
  switch (band) {
    case MmseBand::NoImpairment: return "no impairment";
    case MmseBand::Questionable: return "questionable";
    case MmseBand::Mild: return "mild";
    case MmseBand::Moderate: return "moderate";
    case MmseBand::Severe: return "severe";
  }
  return "?";
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Inverts the anchor conditions sigma(4/T_AD) = 0.60 and
// sigma(4/T_HC) - 0.5 = 0.40 in closed form rather than hard-coding the
// decimals: T = 4 / ln(p / (1 - p)) with p = 0.60 resp. 0.90.
inline MmseProxyParams derive_temperatures() {
  return {4.0 / std::log(0.60 / 0.40), 4.0 / std::log(0.90 / 0.10)};
}

inline void check_mmse_range(int m) {
  if (m < 0 || m > 30) {
    throw DomainError("MMSE score " + std::to_string(m) + " outside 0..30");
  }
}

inline double proxy_probability(ClassLabel label, int mmse) {
  check_mmse_range(mmse);
  const MmseProxyParams params = derive_temperatures();
  const double z = 30.0 - static_cast<double>(mmse);
  if (label == ClassLabel::AD) return sigmoid(z / params.t_ad);
  return sigmoid(z / params.t_hc) - 0.5;
}

inline MmseBand mmse_band(int mmse) {
  check_mmse_range(mmse);
  if (mmse == 30) return MmseBand::NoImpairment;
  if (mmse >= 26) return MmseBand::Questionable;
  if (mmse >= 21) return MmseBand::Mild;
  if (mmse >= 11) return MmseBand::Moderate;
  return MmseBand::Severe;
}

// Two-decimal rendering used whenever a proxy probability enters a prompt or
// a proxy pool file. Rounding to two decimals can push a value across the
// 0.50 class boundary (HC at m <= 20 rounds up to 0.50), so the rendered
// string is clamped back to the label's side: HC never above "0.49", AD never
// below "0.50". Full precision is kept internally.
inline std::string format_proxy_probability(double value, ClassLabel label) {
  double rounded = std::round(value * 100.0) / 100.0;
  if (label == ClassLabel::HC && rounded >= 0.50) rounded = 0.49;
  if (label == ClassLabel::AD && rounded < 0.50) rounded = 0.50;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", rounded);
  return buf;
}

}  // namespace adprompt
