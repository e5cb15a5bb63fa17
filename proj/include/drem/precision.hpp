#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "drem/model_types.hpp"
#include "drem/rng.hpp"

namespace dprem {

enum class Shape {
  interior_max,
  boundary_zero,
  boundary_infinity,
  flat,
  min_then_max,
  interior_min,
  max_then_min,
  irregular
};

const char* to_string(Shape s);

/// Maximizer of the likelihood (or posterior) in m and the shape it was read from.
/// m_hat is +inf for boundary_infinity and NaN for flat.
struct MleResult {
  double m_hat = 0.0;
  Shape classification = Shape::flat;
  double curvature = 0.0;  // second derivative of the objective at m_hat, when finite
  std::string sign_pattern;  // derivative signs from m -> 0 to m -> inf, runs collapsed
  std::vector<double> roots;  // derivative zeros found on the search grid
};

/// log(sum_k m^k c_k) - sum_{i=1}^n log(i - 1 + m).
double log_ell(double m, const PrecisionCoefficients& c);
/// d/dm log_ell, with the 1/m terms cancelled analytically.
double dlog_ell(double m, const PrecisionCoefficients& c);
double d2log_ell(double m, const PrecisionCoefficients& c);
/// lim_{m -> 0} dlog_ell = c_2/c_1 - H_{n-1} (+inf when c_1 = 0).
double dlog_ell_limit_zero(const PrecisionCoefficients& c);
/// Sign of dlog_ell as m -> inf: sign(n(n-1)/2 - c_{n-1}/c_n), negative when c_n = 0.
int dlog_ell_sign_infinity(const PrecisionCoefficients& c);
/// lim_{m -> 0} log_ell and lim_{m -> inf} log_ell.
double log_ell_at_zero(const PrecisionCoefficients& c);
double log_ell_at_infinity(const PrecisionCoefficients& c);

MleResult classify_likelihood_shape(const PrecisionCoefficients& c);

/// sum_{i=1}^n m / (m + i - 1); m = 0 gives 1 and m = inf gives n.
double kappa(double m, std::size_t n);
double solve_m_for_kappa(double kappa_target, std::size_t n);

struct GammaPrior {
  double a = 2.0;  // shape
  double b = 1.0;  // scale
};
/// Shape and scale from the prior mean ab and variance ab^2.
GammaPrior gamma_prior_from_moments(double mean, double variance);

/// Mode of log_ell(m) + (a-1) log m - m/b.
MleResult posterior_mode_m(const PrecisionCoefficients& c, double a, double b);
/// Posterior mean of m under the gamma prior, by quadrature on log m.
double posterior_mean_m(const PrecisionCoefficients& c, double a, double b);
/// log pi(m | y) up to a constant on the given increasing grid.
std::vector<double> marginal_posterior_m(std::span<const double> grid, const PrecisionCoefficients& c, double a,
                                         double b);

struct ImportanceOptions {
  std::size_t draws = 10000;
  std::optional<ModelParams> fixed_theta;  // otherwise theta is drawn from its prior per draw
  std::size_t min_direct_draws = 1;  // levels with fewer direct draws are filled by merging
};

/// Per-level diagnostics from the importance sampler.
struct ImportanceDiagnostics {
  std::vector<std::size_t> direct_draws;  // T_k before reuse
  std::vector<std::size_t> used_draws;  // draws entering each estimate
  std::vector<int> source_level;  // k of the level a backfilled estimate came from (0 = direct)
};

/// Importance-sampling estimate of log c_k, k = 1..n, with per-level standard errors of log c_k.
/// Partitions come from collapsing n multinomial rows drawn under q ~ Dirichlet(alpha, ..., alpha);
/// each draw is weighted by prod Gamma(n_j) f(y | theta, A) over its exact proposal mass within
/// its level. Levels without enough direct draws reuse the level above through uniform pair merges.
PrecisionCoefficients importance_sample_coefficients(const Dataset& d, const Hyperpriors& hp,
                                                     const ImportanceOptions& opts, Rng& rng,
                                                     ImportanceDiagnostics* diag = nullptr);

/// log Z_{n,k}(alpha) = log sum over k-block partitions of prod (alpha)_{n_j}, for k = 0..n.
std::vector<double> log_rising_partition_sums(std::size_t n, double alpha);

/// Draw theta from its prior: sigma2 ~ IG(a2,b2), beta | sigma2 ~ N(0, sigma2 I), tau2 ~ IG(a1,b1).
ModelParams draw_theta_prior(std::size_t p, const Hyperpriors& hp, Rng& rng);

/// Exhaustive coefficients averaged over `draws` prior draws of theta (kind = marginal).
PrecisionCoefficients marginal_exhaustive_coefficients(const Dataset& d, const Hyperpriors& hp, std::size_t draws,
                                                       Rng& rng);

}  // namespace dprem
