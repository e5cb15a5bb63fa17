#include "drem/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "drem/numerics.hpp"

namespace dprem {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

double Rng::uniform() {
  double u = 0.0;
  do {
    u = std::generate_canonical<double, 53>(engine_);
  } while (u <= 0.0 || u >= 1.0);
  return u;
}

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw std::invalid_argument("gamma: shape and scale must be positive");
  std::gamma_distribution<double> dist(shape, scale);
  return dist(engine_);
}

double Rng::log_gamma_variate(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("log_gamma_variate: shape must be positive");
  if (shape >= 1.0) return std::log(gamma(shape, 1.0));
  // G(a) = G(a+1) * U^{1/a}
  const double g = gamma(shape + 1.0, 1.0);
  return std::log(g) + std::log(uniform()) / shape;
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("categorical: weights must have a positive finite sum");
  const double target = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) last_positive = i;
    acc += weights[i];
    if (target < acc) return i;
  }
  return last_positive;
}

std::size_t Rng::uniform_index(std::size_t count) {
  if (count == 0) throw std::invalid_argument("uniform_index: empty range");
  std::uniform_int_distribution<std::size_t> dist(0, count - 1);
  return dist(engine_);
}

std::vector<double> log_dirichlet(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) out[j] = rng.log_gamma_variate(alpha[j]);
  const double norm = log_sum_exp(out);
  for (double& x : out) x -= norm;
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replicate, std::uint64_t chain) {
  return splitmix(splitmix(splitmix(master) ^ replicate) ^ (chain + 0x9e3779b97f4a7c15ULL));
}

}  // namespace dprem
