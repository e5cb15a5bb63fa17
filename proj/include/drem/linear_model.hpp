#pragma once

#include <armadillo>
#include <functional>
#include <span>
#include <vector>

#include "drem/model_types.hpp"
#include "drem/rng.hpp"

namespace dprem {

/// log N(y; X beta, sigma2 I + tau2 A A') with eta integrated out, evaluated per cluster.
double log_marginal_component(const Dataset& d, const ModelParams& theta, const Partition& p);
/// Same density from the residual r = y - X beta.
double log_marginal_residual(std::span<const double> r, const Partition& p, double sigma2, double tau2);
/// One cluster's contribution given its size, residual sum and residual sum of squares.
double log_marginal_cluster(double size, double sum, double sumsq, double sigma2, double tau2);

/// r = y - X beta through the active kernel table.
arma::vec residual(const Dataset& d, const arma::vec& beta);

/// log c_k = log sum_{|C| = k} prod Gamma(n_j) f(y | theta, A), by exhaustive enumeration.
PrecisionCoefficients exhaustive_precision_coefficients(const Dataset& d, const ModelParams& theta);
PrecisionCoefficients exhaustive_precision_coefficients(std::span<const double> r, double sigma2, double tau2);

struct InvGammaSpec {
  double shape = 1.0;
  double scale = 1.0;
};

/// Parameters of the four full conditionals at the current state.
struct LinearConditionals {
  arma::vec eta_mean, eta_var;  // independent normals, one per cluster
  arma::vec beta_mean;
  arma::mat beta_cov;
  InvGammaSpec tau2, sigma2;
};

LinearConditionals linear_full_conditionals(const Dataset& d, const ModelParams& theta, const Partition& p,
                                            const Hyperpriors& hp);

/// Cached factorizations for repeated theta steps on a fixed design.
class LinearWorkspace {
 public:
  explicit LinearWorkspace(const arma::mat& X);
  const arma::mat& X() const { return X_; }
  /// Upper Cholesky factor R of I + X'X (R'R = I + X'X).
  const arma::mat& chol() const { return chol_; }
  const arma::mat& xtx() const { return xtx_; }

 private:
  arma::mat X_;
  arma::mat xtx_;
  arma::mat chol_;
};

struct ThetaStepOptions {
  bool marginalized = false;  // integrate eta out of the (beta, sigma2, tau2) draws
  bool sample_sigma2 = true;  // false pins sigma2 at its current value
};

/// One pass over (eta, beta, tau2, sigma2). With marginalized = true, beta | sigma2, tau2 is drawn
/// exactly and sigma2, tau2 by adaptive log-scale grid draws from the eta-integrated density,
/// then eta | rest is drawn so the state stays complete.
ModelParams gibbs_step_theta(const ChainState& state, const Dataset& d, const Hyperpriors& hp, Rng& rng,
                             const ThetaStepOptions& opts, const LinearWorkspace& ws);
ModelParams gibbs_step_theta(const ChainState& state, const Dataset& d, const Hyperpriors& hp, Rng& rng,
                             bool marginalized);

/// Draw x from an unnormalized log-density in u = log x (the caller includes the Jacobian u).
/// Coarse grid around `center`, trimmed to where the density is within e^-30 of its peak,
/// then a fine grid of `cells` cells with uniform jitter inside the chosen cell.
double grid_draw_log_scale(const std::function<double(double)>& log_density_u, double center, Rng& rng,
                           std::size_t cells = 256);

/// Ordinary least-squares coefficients and their standard errors.
struct OlsFit {
  arma::vec beta;
  arma::vec se;
};
OlsFit ordinary_least_squares(const arma::mat& X, const arma::vec& y);

}  // namespace dprem
