#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace dprem {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLog2Pi = 1.8378770664093454836;

/// log Gamma(x) for x > 0. Reentrant (does not touch the global signgam).
double log_gamma(double x);

/// log of the rising factorial alpha (alpha+1) ... (alpha+count-1).
inline double log_rising(double alpha, double count) {
  return log_gamma(alpha + count) - log_gamma(alpha);
}

/// log(exp(a) + exp(b)) without overflow; either argument may be -inf.
inline double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// log(sum exp(v)); returns -inf for an empty span or when every entry is -inf.
double log_sum_exp(std::span<const double> v);

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Harmonic number H_n = sum_{i=1}^n 1/i.
double harmonic(std::size_t n);

/// Sample mean and the standard error of the mean from a batch of values.
struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};
MeanSe mean_and_se(std::span<const double> v);

/// Mean and standard error of a correlated series using non-overlapping batch means.
MeanSe batch_mean_se(std::span<const double> v, std::size_t batches);

}  // namespace dprem
