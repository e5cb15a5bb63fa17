#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "drem/config.hpp"
#include "drem/diagnostics.hpp"
#include "drem/io.hpp"
#include "drem/precision.hpp"
#include "drem/samplers.hpp"

namespace dprem {

struct SimulatedData {
  Dataset data;  // continuous response (probit: the latent variable)
  BinaryDataset binary;  // thresholded response, filled for probit simulations
  Partition truth;
  arma::vec eta;
};

/// X: optional intercept plus standard-normal columns; partition balanced over k_true groups
/// (or a Polya-urn draw when k_true = 0); eta ~ N(0, tau2); y = X beta + A eta + N(0, sigma2).
/// With `probit`, binary y_i = 1{latent_i > 0}.
SimulatedData simulate_dataset(const SimulationSpec& spec, Rng& rng, bool probit = false);

/// Stream for replicate r, chain c of a study seeded with `seed`.
inline std::uint64_t stream_seed(std::uint64_t seed, std::size_t replicate, std::size_t chain = 0) {
  return derive_seed(seed, replicate, chain);
}

// ---- precision-parameter prior sensitivity (n = 6) ----
struct Table2Setting {
  double ab = 2.0;   // prior mean
  double ab2 = 10.0; // prior variance
};

struct Table2Options {
  std::uint64_t seed = 1;
  std::size_t replications = 100;
  std::size_t threads = 0;
  std::size_t n = 6;
  double kappa = 3.0;
  std::vector<double> beta{1.0, 2.0, 3.0};
  double sigma2 = 1.0;
  double tau2 = 1.0;
  std::vector<Table2Setting> settings{{2, 10}, {3, 10}, {4, 10}, {2, 100}, {3, 100}, {4, 100}};
  std::string coefficients = "profile";  // profile: exhaustive at the true theta; marginal: theta averaged over its prior
  std::size_t theta_draws = 200;
  Hyperpriors hyperpriors;  // theta prior for the marginal variant
};

struct Table2Row {
  Table2Setting setting;
  GammaPrior prior;
  double m_mean = 0.0, m_se = 0.0;
  double kappa_mean = 0.0, kappa_se = 0.0;
};

struct Table2Result {
  double true_m = 0.0;
  std::vector<Table2Row> rows;
};

Table2Result run_table2_study(const Table2Options& opts);

// ---- coefficient recovery at growing n ----
struct Table1Options {
  std::uint64_t seed = 1;
  std::vector<std::size_t> sizes{100, 500};
  double k_fraction = 0.2;
  std::vector<double> beta{1.0, 2.0};
  double sigma2 = 1.0;
  double tau2 = 4.0;
  std::size_t iterations = 5000;
  std::size_t burn_in = 2000;
  KernelKind kernel;
  bool marginalized = false;
  std::size_t threads = 0;
  Hyperpriors hyperpriors;
};

struct Table1Row {
  std::size_t n = 0, k = 0;
  double m = 0.0;
  arma::vec beta_mean, beta_sd;
  double mean_k = 0.0;
};

std::vector<Table1Row> run_table1_study(const Table1Options& opts);

// ---- kernel variance comparison ----
struct Fig3Options {
  std::uint64_t seed = 1;
  std::size_t n = 100;
  std::vector<std::size_t> groups{1, 5, 25, 100};
  std::size_t chains = 20;
  std::size_t iterations = 500;
  double kappa_min = 1.5;
  double kappa_max_frac = 0.9;
  std::vector<double> beta{1.0, 2.0};
  double sigma2 = 1.0;
  double tau2 = 4.0;
  bool prior_only = false;
  std::size_t threads = 0;
  Hyperpriors hyperpriors;
};

struct Fig3Curve {
  std::size_t groups = 0;
  KernelTag kernel = KernelTag::drem_row_gibbs;
  double m = 0.0;
  std::vector<double> variance;  // per iteration
};

struct Fig3Result {
  std::vector<Fig3Curve> curves;  // drem and stickbreaking for each group count
  std::size_t drem_wins = 0;  // configurations where drem's final variance <= stickbreaking's
  std::vector<double> final_ratio;  // drem / stickbreaking at the last iteration, per configuration
};

Fig3Result run_fig3_study(const Fig3Options& opts);

// ---- probit interval coverage ----
struct ProbitCoverageOptions {
  std::uint64_t seed = 1;
  std::size_t replications = 50;
  std::size_t n = 200;
  std::vector<double> beta{-0.5, 1.0, -1.0, 0.5};
  double tau2 = 0.5;
  std::size_t groups = 10;
  std::size_t iterations = 3000;
  std::size_t burn_in = 1000;
  double level = 0.9;
  std::size_t threads = 0;
  Hyperpriors hyperpriors;
};

struct ProbitCoverageResult {
  std::vector<double> coverage;  // per coefficient
  double pooled = 0.0;  // over all coefficients and replications
  std::size_t replications = 0;
};

ProbitCoverageResult run_probit_coverage_study(const ProbitCoverageOptions& opts);

// ---- chain post-processing ----
/// Posterior mean, standard deviation and equal-tailed interval of each beta component.
struct BetaSummary {
  arma::vec mean, sd, lower, upper;
};
BetaSummary summarize_beta(const SampleArchive& a, double level = 0.9);

DiagnosticsReport diagnose(const std::vector<SampleArchive>& chains);
/// Diagnostics for a written archive table (columns as produced by write_archive).
DiagnosticsReport diagnose_table(const Table& archive);

/// Resolves the precision used by a fit from cfg.m_policy.
struct MResolution {
  double m = 1.0;
  std::string source;
  MleResult detail;
};
MResolution resolve_m(const ExperimentConfig& cfg, const Dataset& d, Rng& rng);

/// Coefficients used by the posterior-mode and profile policies: exhaustive for n within the
/// enumeration cap, importance-sampled otherwise. Levels the sampler never reached are set to
/// zero (-inf) and listed in `missing`.
PrecisionCoefficients estimate_coefficients(const ExperimentConfig& cfg, const Dataset& d, const ModelParams* theta,
                                            Rng& rng, std::vector<std::size_t>* missing = nullptr);

}  // namespace dprem
