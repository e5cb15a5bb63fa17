#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "drem/errors.hpp"
#include "drem/kernels.hpp"
#include "drem/rng.hpp"

using namespace dprem;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng, double sd = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal(0.0, sd);
  return v;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("active backend honours DREM_SIMD") {
  const char* env = std::getenv("DREM_SIMD");
  const kernels::KernelTable& t = kernels::active();
  if (env && std::string(env) == "scalar") {
    CHECK(std::string(t.name) == "scalar");
  } else if (kernels::avx2()) {
    CHECK(std::string(t.name) == "avx2");
  }
  CHECK(kernels::parse_backend("auto") == kernels::Backend::automatic);
  CHECK_THROWS_AS(kernels::parse_backend("neon"), ConfigError);
}

TEST_CASE("avx2 kernels match the scalar reference") {
  const kernels::KernelTable* fast = kernels::avx2();
  if (!fast) {
    MESSAGE("AVX2 unavailable; equivalence checks skipped");
    return;
  }
  const kernels::KernelTable& ref = kernels::scalar();
  Rng rng(2024);
  // odd sizes exercise the padded tails
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 100u, 257u}) {
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    CHECK(close(fast->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), 1e-12));
    CHECK(fast->max(a.data(), n) == ref.max(a.data(), n));

    auto logs = random_vec(n, rng, 30.0);
    if (n > 2) logs[1] = -800.0;  // below the underflow threshold
    if (n > 3) logs[2] = -std::numeric_limits<double>::infinity();
    std::vector<double> o1(n), o2(n);
    const double s1 = fast->exp_shift_sum(logs.data(), 5.0, n, o1.data());
    const double s2 = ref.exp_shift_sum(logs.data(), 5.0, n, o2.data());
    CHECK(close(s1, s2, 1e-13));
    for (std::size_t i = 0; i < n; ++i) {
      REQUIRE(std::abs(o1[i] - o2[i]) <= 1e-14 * std::max(o2[i], 1e-300) + 1e-300);
    }

    const std::size_t p = 3;
    const auto X = random_vec(n * p, rng);
    const auto beta = random_vec(p, rng);
    std::vector<double> r1(n), r2(n);
    fast->residual(a.data(), X.data(), beta.data(), n, p, r1.data());
    ref.residual(a.data(), X.data(), beta.data(), n, p, r2.data());
    for (std::size_t i = 0; i < n; ++i) REQUIRE(close(r1[i], r2[i], 1e-13));

    std::vector<double> inv0(n), inv1(n);
    for (std::size_t i = 0; i < n; ++i) {
      inv0[i] = 1.0 / (1.0 + i);
      inv1[i] = 1.0 / (2.0 + i);
    }
    std::vector<double> w1(n), w2(n);
    fast->join_log_weights(a.data(), b.data(), inv0.data(), inv1.data(), 0.7, 0.3, n, w1.data());
    ref.join_log_weights(a.data(), b.data(), inv0.data(), inv1.data(), 0.7, 0.3, n, w2.data());
    for (std::size_t i = 0; i < n; ++i) REQUIRE(close(w1[i], w2[i], 1e-13));
  }
}

TEST_CASE("vector exp is accurate across the representable range") {
  const kernels::KernelTable* fast = kernels::avx2();
  if (!fast) return;
  std::vector<double> x;
  for (double v = -708.0; v <= 708.0; v += 0.37) x.push_back(v);
  std::vector<double> out(x.size());
  fast->exp_shift_sum(x.data(), 0.0, x.size(), out.data());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ref = std::exp(x[i]);
    REQUIRE(std::abs(out[i] - ref) <= 4e-16 * ref);
  }
}

TEST_CASE("select switches backends and rejects unavailable ones") {
  kernels::select(kernels::Backend::scalar);
  CHECK(std::string(kernels::active().name) == "scalar");
  kernels::select(kernels::Backend::automatic);
  if (kernels::avx2()) {
    CHECK(std::string(kernels::active().name) == "avx2");
  } else {
    CHECK_THROWS_AS(kernels::select(kernels::Backend::avx2), ConfigError);
  }
}
