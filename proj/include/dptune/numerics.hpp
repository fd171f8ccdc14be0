#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

namespace dptune {

/// log(sum(exp(x_i))) without overflow. -inf entries contribute zero;
/// an empty span or all -inf yields -inf; any +inf entry yields +inf.
inline double log_sum_exp(std::span<const double> log_terms) {
  if (log_terms.empty()) return -std::numeric_limits<double>::infinity();
  const double max = *std::max_element(log_terms.begin(), log_terms.end());
  if (std::isinf(max)) return max;
  double sum = 0.0;
  for (const double t : log_terms) sum += std::exp(t - max);
  return max + std::log(sum);
}

/// log of the binomial coefficient C(n, k) for 0 <= k <= n.
inline double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Standard normal CDF.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// log of the standard normal pdf evaluated at z.
inline double log_normal_pdf(double z) {
  constexpr double kLogSqrt2Pi = 0.91893853320467274178;
  return -0.5 * z * z - kLogSqrt2Pi;
}

}  // namespace dptune
