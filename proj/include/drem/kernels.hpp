#pragma once

#include <cstddef>
#include <string_view>

namespace dprem::kernels {

// Hot loops of the samplers, with a portable reference implementation and an
// AVX2/FMA variant picked once at runtime. All arrays are dense and unaligned.
struct KernelTable {
  const char* name;
  // out[i] = y[i] - sum_j X[i + j*n] * beta[j]   (X column-major, n x p)
  void (*residual)(const double* y, const double* X, const double* beta, std::size_t n, std::size_t p,
                   double* out);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // Largest entry; -inf for n == 0.
  double (*max)(const double* a, std::size_t n);
  // out[i] = exp(in[i] - shift); returns the sum of out. Entries below exp's
  // underflow threshold come back as exact zeros.
  double (*exp_shift_sum)(const double* in, double shift, std::size_t n, double* out);
  // Row-update log-weights for joining each occupied slot:
  // out[c] = base[c] + scale * ((sums[c] + r)^2 * inv1[c] - sums[c]^2 * inv0[c])
  void (*join_log_weights)(const double* base, const double* sums, const double* inv0, const double* inv1,
                           double r, double scale, std::size_t k, double* out);
};

enum class Backend { automatic, scalar, avx2 };

const KernelTable& scalar();
// nullptr when the binary was built without AVX2 support or the CPU lacks AVX2/FMA.
const KernelTable* avx2();

// Table used by the library. Initialized from DREM_SIMD (scalar|avx2|auto) on first use.
const KernelTable& active();
// Overrides the active table; throws ConfigError if the requested backend is unavailable.
void select(Backend backend);
Backend parse_backend(std::string_view name);

}  // namespace dprem::kernels
