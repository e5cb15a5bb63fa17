#include <cmath>
#include <limits>

#include "drem/kernels.hpp"

namespace dprem::kernels {

namespace {

void residual(const double* y, const double* X, const double* beta, std::size_t n, std::size_t p, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i];
  for (std::size_t j = 0; j < p; ++j) {
    const double b = beta[j];
    const double* col = X + j * n;
    for (std::size_t i = 0; i < n; ++i) out[i] -= col[i] * b;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max(const double* a, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) m = a[i] > m ? a[i] : m;
  return m;
}

double exp_shift_sum(const double* in, double shift, std::size_t n, double* out) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - shift);
    s += out[i];
  }
  return s;
}

void join_log_weights(const double* base, const double* sums, const double* inv0, const double* inv1, double r,
                      double scale, std::size_t k, double* out) {
  for (std::size_t c = 0; c < k; ++c) {
    const double s1 = sums[c] + r;
    out[c] = base[c] + scale * (s1 * s1 * inv1[c] - sums[c] * sums[c] * inv0[c]);
  }
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{"scalar", residual, dot, max, exp_shift_sum, join_log_weights};
  return table;
}

}  // namespace dprem::kernels
