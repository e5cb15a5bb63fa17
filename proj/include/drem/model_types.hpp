#pragma once

#include <armadillo>
#include <cstdint>
#include <vector>

#include "drem/partition.hpp"

namespace dprem {

/// Response y and design X (n x p, intercept column optional).
struct Dataset {
  arma::vec y;
  arma::mat X;

  std::size_t n() const { return y.n_elem; }
  std::size_t p() const { return X.n_cols; }
};

/// Binary response in {0,1} with its design matrix.
struct BinaryDataset {
  arma::vec y;
  arma::mat X;

  std::size_t n() const { return y.n_elem; }
  std::size_t p() const { return X.n_cols; }
};

/// theta = (beta, sigma2, tau2) plus cluster effects eta when the sampler carries them
/// (empty eta means "integrated out").
struct ModelParams {
  arma::vec beta;
  double sigma2 = 1.0;
  double tau2 = 1.0;
  arma::vec eta;

  bool has_eta() const { return !eta.is_empty(); }
};

/// IG(a, b) means density proportional to x^{-(a+1)} exp(-b/x).
struct Hyperpriors {
  double a1 = 1.0, b1 = 1.0;  // tau2
  double a2 = 1.0, b2 = 1.0;  // sigma2
  double m_prior_a = 2.0, m_prior_b = 1.0;  // gamma shape / scale for m
  std::vector<double> r;  // Dirichlet weights for q; empty means all ones
  double alpha = 1.0;  // importance-sampling concentration

  double r_at(std::size_t j) const { return r.empty() ? 1.0 : r[j]; }
};

enum class CoefficientKind { profile, marginal, importance_estimated };

/// (c_1..c_n) on the log scale; -inf marks c_k = 0. mc_se is empty for exact values.
struct PrecisionCoefficients {
  std::vector<double> log_c;
  CoefficientKind kind = CoefficientKind::profile;
  std::vector<double> mc_se;

  std::size_t n() const { return log_c.size(); }
};

/// One Gibbs iteration's state. log_q is the auxiliary Dirichlet vector on the log scale.
struct ChainState {
  ModelParams theta;
  Partition partition;
  std::vector<double> log_q;
  arma::vec u;
  std::uint64_t iteration = 0;
};

void validate(const Dataset& d);
void validate(const BinaryDataset& d);
void validate(const Hyperpriors& hp, std::size_t n);

}  // namespace dprem
