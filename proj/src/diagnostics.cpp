#include "drem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drem/numerics.hpp"

namespace dprem {

namespace {

MeanSe window_stats(std::span<const double> w) {
  const std::size_t batches = std::min<std::size_t>(20, w.size() / 5);
  if (batches >= 2) return batch_mean_se(w, batches);
  return mean_and_se(w);
}

}  // namespace

GewekeResult geweke(std::span<const double> trace, double first, double last) {
  if (!(first > 0.0) || !(last > 0.0) || first + last > 1.0) {
    throw std::invalid_argument("geweke: window fractions must be positive and sum to at most 1");
  }
  const auto na = static_cast<std::size_t>(std::floor(first * static_cast<double>(trace.size())));
  const auto nb = static_cast<std::size_t>(std::floor(last * static_cast<double>(trace.size())));
  if (na < 10 || nb < 10) throw std::invalid_argument("geweke: trace too short for the comparison windows");
  const MeanSe a = window_stats(trace.first(na));
  const MeanSe b = window_stats(trace.last(nb));
  GewekeResult r;
  r.mean_first = a.mean;
  r.mean_last = b.mean;
  r.se_first = a.se;
  r.se_last = b.se;
  const double s = std::sqrt(a.se * a.se + b.se * b.se);
  if (s > 0.0 && std::isfinite(s)) {
    r.z = (a.mean - b.mean) / s;
    r.defined = true;
  } else {
    r.z = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

std::vector<double> cumulative_mean(std::span<const double> trace) {
  std::vector<double> out(trace.size());
  double s = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    s += trace[t];
    out[t] = s / static_cast<double>(t + 1);
  }
  return out;
}

}  // namespace dprem
