#include "drem/numerics.hpp"

#include <algorithm>
#include <math.h>
#include <stdexcept>
#include <vector>

namespace dprem {

double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) return kNegInf;
  const double mx = *std::max_element(v.begin(), v.end());
  if (mx == kNegInf) return kNegInf;
  if (mx == kInf) return kInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double harmonic(std::size_t n) {
  double h = 0.0;
  for (std::size_t i = n; i >= 1; --i) h += 1.0 / static_cast<double>(i);
  return h;
}

MeanSe mean_and_se(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean_and_se: empty input");
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

MeanSe batch_mean_se(std::span<const double> v, std::size_t batches) {
  if (batches < 2 || v.size() < batches) {
    throw std::invalid_argument("batch_mean_se: need at least one value per batch and two batches");
  }
  const std::size_t len = v.size() / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += v[i];
    means[b] = s / static_cast<double>(len);
  }
  const MeanSe bm = mean_and_se(means);
  return bm;
}

}  // namespace dprem
