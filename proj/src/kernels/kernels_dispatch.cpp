#include <atomic>
#include <cstdlib>
#include <string>

#include "drem/errors.hpp"
#include "drem/kernels.hpp"

#ifdef DREM_HAVE_AVX2
namespace dprem::kernels::avx2_impl {
void residual(const double* y, const double* X, const double* beta, std::size_t n, std::size_t p, double* out);
double dot(const double* a, const double* b, std::size_t n);
double max(const double* a, std::size_t n);
double exp_shift_sum(const double* in, double shift, std::size_t n, double* out);
void join_log_weights(const double* base, const double* sums, const double* inv0, const double* inv1, double r,
                      double scale, std::size_t k, double* out);
}  // namespace dprem::kernels::avx2_impl
#endif

namespace dprem::kernels {

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable& from_env() {
  const char* env = std::getenv("DREM_SIMD");
  const Backend want = env ? parse_backend(env) : Backend::automatic;
  if (want == Backend::scalar) return scalar();
  const KernelTable* fast = avx2();
  if (want == Backend::avx2 && !fast) throw ConfigError("DREM_SIMD=avx2 requested but AVX2/FMA is unavailable");
  return fast ? *fast : scalar();
}

}  // namespace

const KernelTable* avx2() {
#ifdef DREM_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{"avx2",
                                 avx2_impl::residual,
                                 avx2_impl::dot,
                                 avx2_impl::max,
                                 avx2_impl::exp_shift_sum,
                                 avx2_impl::join_log_weights};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

Backend parse_backend(std::string_view name) {
  if (name == "auto" || name.empty()) return Backend::automatic;
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  throw ConfigError("unknown SIMD backend '" + std::string(name) + "' (expected auto, scalar or avx2)");
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = &from_env();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void select(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      g_active.store(&scalar(), std::memory_order_release);
      return;
    case Backend::avx2: {
      const KernelTable* t = avx2();
      if (!t) throw ConfigError("AVX2/FMA kernels are unavailable on this build or CPU");
      g_active.store(t, std::memory_order_release);
      return;
    }
    case Backend::automatic: {
      const KernelTable* t = avx2();
      g_active.store(t ? t : &scalar(), std::memory_order_release);
      return;
    }
  }
}

}  // namespace dprem::kernels
