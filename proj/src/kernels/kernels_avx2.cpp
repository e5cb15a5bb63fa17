// Compiled with -mavx2 -mfma. Only intrinsics live here: pulling in standard headers
// would let AVX2-encoded copies of inline library functions leak into other objects.
#include <immintrin.h>

#include <cstddef>

namespace dprem::kernels::avx2_impl {

namespace {

// Cephes-style exp: range reduction by ln 2 plus a (3,4) Pade approximant on
// [-ln2/2, ln2/2]. Inputs below -708.39 return exactly 0.
inline __m256d exp4(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.43);
  const __m256d lo = _mm256_set1_pd(-708.39);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634074)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212E-6), x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_set1_pd(1.26177193074810590878E-4);
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(3.02994407707441961300E-2));
  px = _mm256_fmadd_pd(px, xx, _mm256_set1_pd(9.99999999999999999910E-1));
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_set1_pd(3.00198505138664455042E-6);
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.52448340349684104192E-3));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.27265548208155028766E-1));
  qx = _mm256_fmadd_pd(qx, xx, _mm256_set1_pd(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  r = _mm256_fmadd_pd(r, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // 2^fx through the exponent field; fx is within [-1022, 1023] after clamping.
  const __m128i n32 = _mm256_cvtpd_epi32(fx);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  r = _mm256_mul_pd(r, _mm256_castsi256_pd(n64));
  return _mm256_andnot_pd(underflow, r);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double hmax(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

}  // namespace

void residual(const double* y, const double* X, const double* beta, std::size_t n, std::size_t p, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    for (std::size_t j = 0; j < p; ++j) {
      acc = _mm256_fnmadd_pd(_mm256_loadu_pd(X + j * n + i), _mm256_set1_pd(beta[j]), acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < n; ++i) {
    double acc = y[i];
    for (std::size_t j = 0; j < p; ++j) acc -= X[j * n + i] * beta[j];
    out[i] = acc;
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double max(const double* a, std::size_t n) {
  const double ninf = -__builtin_inf();
  __m256d m = _mm256_set1_pd(ninf);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) m = _mm256_max_pd(m, _mm256_loadu_pd(a + i));
  double r = hmax(m);
  for (; i < n; ++i) r = a[i] > r ? a[i] : r;
  return r;
}

double exp_shift_sum(const double* in, double shift, std::size_t n, double* out) {
  const __m256d sh = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d e = exp4(_mm256_sub_pd(_mm256_loadu_pd(in + i), sh));
    _mm256_storeu_pd(out + i, e);
    acc = _mm256_add_pd(acc, e);
  }
  double s = hsum(acc);
  if (i < n) {
    // Padded tail: run the same vector exp on a partially filled register.
    alignas(32) double buf[4] = {-__builtin_inf(), -__builtin_inf(), -__builtin_inf(), -__builtin_inf()};
    for (std::size_t t = 0; i + t < n; ++t) buf[t] = in[i + t];
    alignas(32) double res[4];
    _mm256_store_pd(res, exp4(_mm256_sub_pd(_mm256_load_pd(buf), sh)));
    for (std::size_t t = 0; i + t < n; ++t) {
      out[i + t] = res[t];
      s += res[t];
    }
  }
  return s;
}

void join_log_weights(const double* base, const double* sums, const double* inv0, const double* inv1, double r,
                      double scale, std::size_t k, double* out) {
  const __m256d rv = _mm256_set1_pd(r);
  const __m256d sv = _mm256_set1_pd(scale);
  std::size_t c = 0;
  for (; c + 4 <= k; c += 4) {
    const __m256d s0 = _mm256_loadu_pd(sums + c);
    const __m256d s1 = _mm256_add_pd(s0, rv);
    const __m256d a = _mm256_mul_pd(_mm256_mul_pd(s1, s1), _mm256_loadu_pd(inv1 + c));
    const __m256d b = _mm256_mul_pd(_mm256_mul_pd(s0, s0), _mm256_loadu_pd(inv0 + c));
    _mm256_storeu_pd(out + c, _mm256_fmadd_pd(sv, _mm256_sub_pd(a, b), _mm256_loadu_pd(base + c)));
  }
  for (; c < k; ++c) {
    const double s1 = sums[c] + r;
    out[c] = base[c] + scale * (s1 * s1 * inv1[c] - sums[c] * sums[c] * inv0[c]);
  }
}

}  // namespace dprem::kernels::avx2_impl
