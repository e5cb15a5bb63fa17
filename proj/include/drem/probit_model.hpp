#pragma once

#include <armadillo>

#include "drem/linear_model.hpp"
#include "drem/model_types.hpp"
#include "drem/rng.hpp"

namespace dprem {

/// Phi((x'beta + psi) / sigma).
double probit_success_prob(const arma::rowvec& xrow, const arma::vec& beta, double psi, double sigma);

/// N(mean, sd^2) restricted to (lower, inf). Uses a translated-exponential proposal when the
/// standardized cutoff exceeds 0.5 and plain rejection otherwise.
double truncated_normal_above(double mean, double sd, double lower, Rng& rng);
/// N(mean, sd^2) restricted to (-inf, upper].
double truncated_normal_below(double mean, double sd, double upper, Rng& rng);

/// Latent U_i ~ N(x_i'beta + psi_i, sigma2) truncated to the side given by y_i.
arma::vec sample_latent_u(const ChainState& state, const BinaryDataset& d, Rng& rng);

struct ProbitOptions {
  bool sample_sigma2 = false;  // sigma2 fixes the scale; held at its current value by default
  bool marginalized = false;
};

/// One sweep: (eta, beta, tau2, sigma2) from the linear conditionals with U as the response,
/// then U | rest. The partition is not touched.
ChainState probit_gibbs_sweep(const ChainState& state, const BinaryDataset& d, const Hyperpriors& hp, Rng& rng,
                              const ProbitOptions& opts, const LinearWorkspace& ws);
ChainState probit_gibbs_sweep(const ChainState& state, const BinaryDataset& d, const Hyperpriors& hp, Rng& rng);

/// Sign consistency of the latent vector with the binary response.
bool latent_consistent(const arma::vec& u, const BinaryDataset& d);

}  // namespace dprem
