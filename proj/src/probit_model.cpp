#include "drem/probit_model.hpp"

#include <cmath>
#include <stdexcept>

#include "drem/errors.hpp"
#include "drem/numerics.hpp"

namespace dprem {

double probit_success_prob(const arma::rowvec& xrow, const arma::vec& beta, double psi, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("probit_success_prob: sigma must be positive");
  if (xrow.n_elem != beta.n_elem) throw std::invalid_argument("probit_success_prob: dimension mismatch");
  return normal_cdf((arma::dot(xrow, beta) + psi) / sigma);
}

namespace {

// standard normal restricted to (a, inf)
double std_truncated_above(double a, Rng& rng) {
  if (a <= 0.5) {
    while (true) {
      const double z = rng.normal();
      if (z > a) return z;
    }
  }
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  while (true) {
    const double z = a - std::log(rng.uniform()) / lambda;
    const double d = z - lambda;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
  }
}

}  // namespace

double truncated_normal_above(double mean, double sd, double lower, Rng& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("truncated normal: sd must be positive");
  return mean + sd * std_truncated_above((lower - mean) / sd, rng);
}

double truncated_normal_below(double mean, double sd, double upper, Rng& rng) {
  if (!(sd > 0.0)) throw std::invalid_argument("truncated normal: sd must be positive");
  // reflect: X <= upper  <=>  -X >= -upper
  const double z = std_truncated_above((mean - upper) / sd, rng);
  return std::min(mean - sd * z, upper);
}

arma::vec sample_latent_u(const ChainState& state, const BinaryDataset& d, Rng& rng) {
  const ModelParams& th = state.theta;
  const Partition& p = state.partition;
  if (p.n() != d.n()) throw std::invalid_argument("partition size does not match the dataset");
  if (!th.has_eta() || th.eta.n_elem != static_cast<arma::uword>(p.k())) {
    throw std::invalid_argument("sample_latent_u: eta must be present with one entry per cluster");
  }
  const arma::vec mean = d.X * th.beta;
  const double sd = std::sqrt(th.sigma2);
  arma::vec u(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double mu = mean[i] + th.eta[p.assignment[i]];
    if (d.y[i] == 1.0) {
      double v = truncated_normal_above(mu, sd, 0.0, rng);
      // the open interval excludes exactly zero
      u[i] = v > 0.0 ? v : std::nextafter(0.0, 1.0);
    } else {
      u[i] = truncated_normal_below(mu, sd, 0.0, rng);
    }
  }
  return u;
}

bool latent_consistent(const arma::vec& u, const BinaryDataset& d) {
  if (u.n_elem != d.n()) return false;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if ((u[i] > 0.0) != (d.y[i] == 1.0)) return false;
  }
  return true;
}

ChainState probit_gibbs_sweep(const ChainState& state, const BinaryDataset& d, const Hyperpriors& hp, Rng& rng,
                              const ProbitOptions& opts, const LinearWorkspace& ws) {
  if (state.u.n_elem != d.n()) throw std::invalid_argument("probit sweep: latent vector missing");
  ChainState next = state;
  const Dataset latent{state.u, d.X};
  next.theta = gibbs_step_theta(state, latent, hp, rng, ThetaStepOptions{opts.marginalized, opts.sample_sigma2}, ws);
  next.u = sample_latent_u(next, d, rng);
  return next;
}

ChainState probit_gibbs_sweep(const ChainState& state, const BinaryDataset& d, const Hyperpriors& hp, Rng& rng) {
  const LinearWorkspace ws(d.X);
  return probit_gibbs_sweep(state, d, hp, rng, ProbitOptions{}, ws);
}

}  // namespace dprem
