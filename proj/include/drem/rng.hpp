#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace dprem {

/// Seeded random stream. Every stochastic operation in the library takes one of
/// these explicitly; a stream must not be shared between threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }
  /// Gamma with the given shape and scale (mean shape*scale).
  double gamma(double shape, double scale);
  /// log of a Gamma(shape, 1) variate; stays finite for very small shapes.
  double log_gamma_variate(double shape);
  /// Inverse gamma with density proportional to x^{-(shape+1)} exp(-scale/x).
  double inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, 1.0 / scale); }
  /// Index drawn with probability proportional to non-negative weights.
  std::size_t categorical(std::span<const double> weights);
  std::size_t uniform_index(std::size_t count);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

/// Dirichlet draw returned on the log scale, generated through normalized gamma variates.
std::vector<double> log_dirichlet(std::span<const double> alpha, Rng& rng);

/// Stream-splitting rule used by every multi-replicate driver:
///   s = mix(mix(mix(master) ^ replicate) ^ (chain + 0x9e3779b97f4a7c15))
/// where mix is the splitmix64 finalizer. Distinct (replicate, chain) pairs give
/// decorrelated mt19937_64 seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate, std::uint64_t chain = 0);

}  // namespace dprem
