#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "drem/linear_model.hpp"
#include "drem/model_types.hpp"
#include "drem/probit_model.hpp"
#include "drem/rng.hpp"

namespace dprem {

enum class KernelTag { drem_row_gibbs, drem_mh, stickbreaking };

struct KernelKind {
  KernelTag tag = KernelTag::drem_row_gibbs;
  bool prior_only = false;  // drop f(y | theta, A) and target the partition prior alone
};

const char* to_string(KernelTag tag);
KernelTag parse_kernel_tag(std::string_view name);

/// log q ~ Dirichlet(n_1 + r_1, ..., n_k + r_k, r_{k+1}, ..., r_n). r empty means all ones.
std::vector<double> sample_log_q(const Partition& p, std::span<const double> r, Rng& rng);
/// Same draw on the probability scale.
std::vector<double> sample_q(const Partition& p, std::span<const double> r, Rng& rng);

/// Prior-only reassignment probabilities for one row. slot_sizes holds the block sizes with the
/// row removed, 0 for unoccupied slots.
/// Stickbreaking: one entry per occupied slot (in slot order) followed by the new-cluster probability.
std::vector<double> neal_row_probabilities(std::span<const int> slot_sizes, double m);
/// Multinomial/Dirichlet kernel: one entry per slot (length n). Occupied slot c carries
/// n_c q_c / (n_c + 1); every unoccupied slot j carries m q_j / (n - k), k the occupied count.
std::vector<double> drem_row_probabilities(std::span<const int> slot_sizes, std::span<const double> q, double m);

/// Single-row updates of the current partition (d == nullptr or prior_only: prior weights only).
Partition neal_row_update(std::size_t i, const ChainState& state, double m, const Dataset* d, Rng& rng);
Partition drem_row_update(std::size_t i, const ChainState& state, double m, const Dataset* d, Rng& rng);

/// log of the partition weight targeted by the MH variant:
/// k log m + sum log Gamma(n_j) + log (n-k)! - sum log n_j!  (+ log f when a residual is given).
double drem_mh_log_target(const Partition& p, double m);
/// Independence proposal from the rows of q, accepted by the MH ratio. `accepted` is optional.
Partition drem_mh_step(const ChainState& state, double m, const Dataset* d, Rng& rng, bool* accepted = nullptr);

struct SweepOptions {
  KernelKind kind;
  double m = 1.0;
  bool shuffle_rows = false;
};

/// One partition update: for the multinomial/Dirichlet kernels q is drawn first and stored in
/// state.log_q. `residual` (y - X beta, or U - X beta) enables the likelihood weights; pass an
/// empty span for prior-only updates. Returns whether an MH proposal was accepted (always true
/// for the Gibbs sweeps).
bool partition_sweep(ChainState& state, std::span<const double> residual, const Hyperpriors& hp,
                     const SweepOptions& opts, Rng& rng);

struct ChainConfig {
  std::size_t iterations = 5000;
  std::size_t burn_in = 2000;
  KernelKind kind;
  double m = 1.0;
  bool marginalized = false;
  bool shuffle_rows = false;
  bool sample_sigma2 = true;  // the probit driver defaults this to false
  std::optional<Partition> initial_partition;  // default: a Polya-urn draw with precision m
  std::optional<ModelParams> initial_theta;
};

struct SampleRecord {
  std::uint64_t iteration = 0;
  int k = 0;
  arma::vec beta;
  double sigma2 = 0.0;
  double tau2 = 0.0;
  std::vector<int> sizes;
};

struct SampleArchive {
  std::vector<SampleRecord> records;  // retained iterations (after burn-in)
  std::vector<double> k_trace;  // k after every iteration, burn-in included
  double acceptance_rate = 1.0;
  ChainState final_state;
};

void validate(const ChainConfig& cfg);

SampleArchive run_chain(const ChainConfig& cfg, const Dataset& d, const Hyperpriors& hp, std::uint64_t seed);
SampleArchive run_probit_chain(const ChainConfig& cfg, const BinaryDataset& d, const Hyperpriors& hp,
                               std::uint64_t seed);

/// Across-chain sample variance of the running means, one value per iteration.
std::vector<double> cumulative_mean_variance(const std::vector<std::vector<double>>& chains);

}  // namespace dprem
