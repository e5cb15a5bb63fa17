#include "drem/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "drem/errors.hpp"
#include "drem/kernels.hpp"
#include "drem/numerics.hpp"

namespace dprem {

void validate(const Dataset& d) {
  if (d.y.n_elem == 0) throw DataError("dataset is empty");
  if (d.X.n_cols == 0) throw DataError("design matrix has no columns");
  if (d.X.n_rows != d.y.n_elem) {
    throw DataError("design has " + std::to_string(d.X.n_rows) + " rows but y has " + std::to_string(d.y.n_elem));
  }
  if (!d.y.is_finite() || !d.X.is_finite()) throw DataError("dataset contains non-finite values");
}

void validate(const BinaryDataset& d) {
  validate(Dataset{d.y, d.X});
  for (double v : d.y) {
    if (v != 0.0 && v != 1.0) throw DataError("binary response must be 0 or 1");
  }
}

void validate(const Hyperpriors& hp, std::size_t n) {
  for (double v : {hp.a1, hp.b1, hp.a2, hp.b2, hp.m_prior_a, hp.m_prior_b, hp.alpha}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("hyperpriors must be positive and finite");
  }
  if (!hp.r.empty()) {
    if (hp.r.size() != n) throw ConfigError("Dirichlet weight vector r must have length n");
    for (double v : hp.r) {
      if (!(v > 0.0)) throw ConfigError("Dirichlet weights r must be positive");
    }
  }
}

double log_marginal_cluster(double size, double sum, double sumsq, double sigma2, double tau2) {
  const double v = sigma2 + size * tau2;
  return -0.5 * (size * kLog2Pi + (size - 1.0) * std::log(sigma2) + std::log(v)) -
         (sumsq - tau2 * sum * sum / v) / (2.0 * sigma2);
}

namespace {

void check_variances(double sigma2, double tau2) {
  if (!(sigma2 > 0.0) || !(tau2 >= 0.0) || !std::isfinite(sigma2) || !std::isfinite(tau2)) {
    throw std::invalid_argument("variances must be positive and finite");
  }
}

struct ClusterSums {
  std::vector<double> sum, sumsq;
};

ClusterSums cluster_sums(std::span<const double> r, const Partition& p) {
  ClusterSums cs{std::vector<double>(p.sizes.size(), 0.0), std::vector<double>(p.sizes.size(), 0.0)};
  for (std::size_t i = 0; i < r.size(); ++i) {
    cs.sum[p.assignment[i]] += r[i];
    cs.sumsq[p.assignment[i]] += r[i] * r[i];
  }
  return cs;
}

}  // namespace

double log_marginal_residual(std::span<const double> r, const Partition& p, double sigma2, double tau2) {
  check_variances(sigma2, tau2);
  if (r.size() != p.n()) throw std::invalid_argument("residual length does not match the partition");
  const ClusterSums cs = cluster_sums(r, p);
  double lp = 0.0;
  for (std::size_t j = 0; j < p.sizes.size(); ++j) {
    lp += log_marginal_cluster(p.sizes[j], cs.sum[j], cs.sumsq[j], sigma2, tau2);
  }
  return lp;
}

arma::vec residual(const Dataset& d, const arma::vec& beta) {
  if (beta.n_elem != d.p()) throw std::invalid_argument("beta length does not match the design");
  arma::vec r(d.n());
  kernels::active().residual(d.y.memptr(), d.X.memptr(), beta.memptr(), d.n(), d.p(), r.memptr());
  return r;
}

double log_marginal_component(const Dataset& d, const ModelParams& theta, const Partition& p) {
  if (p.n() != d.n()) throw std::invalid_argument("partition size does not match the dataset");
  const arma::vec r = residual(d, theta.beta);
  return log_marginal_residual({r.memptr(), r.n_elem}, p, theta.sigma2, theta.tau2);
}

PrecisionCoefficients exhaustive_precision_coefficients(std::span<const double> r, double sigma2, double tau2) {
  check_variances(sigma2, tau2);
  const std::size_t n = r.size();
  PrecisionCoefficients c;
  c.kind = CoefficientKind::profile;
  c.log_c.assign(n, kNegInf);
  std::vector<double> sum(n), sumsq(n);
  for_each_partition(n, [&](const Partition& p) {
    std::fill_n(sum.begin(), p.k(), 0.0);
    std::fill_n(sumsq.begin(), p.k(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[p.assignment[i]] += r[i];
      sumsq[p.assignment[i]] += r[i] * r[i];
    }
    double term = 0.0;
    for (int j = 0; j < p.k(); ++j) {
      term += log_gamma(p.sizes[j]) + log_marginal_cluster(p.sizes[j], sum[j], sumsq[j], sigma2, tau2);
    }
    double& slot = c.log_c[p.k() - 1];
    slot = log_add_exp(slot, term);
  });
  return c;
}

PrecisionCoefficients exhaustive_precision_coefficients(const Dataset& d, const ModelParams& theta) {
  const arma::vec r = residual(d, theta.beta);
  return exhaustive_precision_coefficients({r.memptr(), r.n_elem}, theta.sigma2, theta.tau2);
}

LinearConditionals linear_full_conditionals(const Dataset& d, const ModelParams& theta, const Partition& p,
                                            const Hyperpriors& hp) {
  if (p.n() != d.n()) throw std::invalid_argument("partition size does not match the dataset");
  if (theta.beta.n_elem != d.p()) throw std::invalid_argument("beta length does not match the design");
  if (!theta.has_eta() || theta.eta.n_elem != static_cast<arma::uword>(p.k())) {
    throw std::invalid_argument("eta must be present with one entry per cluster");
  }
  const double s2 = theta.sigma2;
  const double t2 = theta.tau2;
  LinearConditionals lc;
  const arma::vec r = residual(d, theta.beta);
  const ClusterSums cs = cluster_sums({r.memptr(), r.n_elem}, p);
  const arma::uword k = p.k();
  lc.eta_var.set_size(k);
  lc.eta_mean.set_size(k);
  for (arma::uword j = 0; j < k; ++j) {
    lc.eta_var[j] = 1.0 / (1.0 / t2 + p.sizes[j] / s2);
    lc.eta_mean[j] = lc.eta_var[j] * cs.sum[j] / s2;
  }
  arma::vec psi(d.n());
  for (std::size_t i = 0; i < d.n(); ++i) psi[i] = theta.eta[p.assignment[i]];
  const arma::mat prec = arma::eye(d.p(), d.p()) + d.X.t() * d.X;
  const arma::mat prec_inv = arma::inv_sympd(prec);
  lc.beta_mean = prec_inv * (d.X.t() * (d.y - psi));
  lc.beta_cov = s2 * prec_inv;
  lc.tau2 = {static_cast<double>(k) / 2.0 + hp.a1, arma::dot(theta.eta, theta.eta) / 2.0 + hp.b1};
  const arma::vec e = r - psi;
  lc.sigma2 = {static_cast<double>(d.n() + d.p()) / 2.0 + hp.a2,
               arma::dot(e, e) / 2.0 + arma::dot(theta.beta, theta.beta) / 2.0 + hp.b2};
  return lc;
}

LinearWorkspace::LinearWorkspace(const arma::mat& X) : X_(X), xtx_(X.t() * X) {
  const arma::mat prec = arma::eye(X.n_cols, X.n_cols) + xtx_;
  if (!arma::chol(chol_, prec)) throw NumericalError("Cholesky factorization of I + X'X failed");
}

double grid_draw_log_scale(const std::function<double(double)>& log_density_u, double center, Rng& rng,
                           std::size_t cells) {
  if (!std::isfinite(center)) center = 0.0;
  constexpr double kDrop = 30.0;
  // coarse pass; recentres if the peak sits on the window edge
  double lo = center - 30.0, hi = center + 30.0;
  std::vector<double> grid, lw;
  for (int attempt = 0; attempt < 8; ++attempt) {
    const std::size_t pts = 241;
    grid.resize(pts);
    lw.resize(pts);
    for (std::size_t g = 0; g < pts; ++g) {
      grid[g] = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(pts - 1);
      lw[g] = log_density_u(grid[g]);
    }
    const auto best = static_cast<std::size_t>(std::max_element(lw.begin(), lw.end()) - lw.begin());
    if (!std::isfinite(lw[best])) throw NumericalError("grid draw: density is not finite anywhere on the window");
    const double width = hi - lo;
    if (best == 0) {
      hi = lo + 1.0;
      lo -= width;
    } else if (best == pts - 1) {
      lo = hi - 1.0;
      hi += width;
    } else {
      break;
    }
  }
  for (int pass = 0; pass < 6; ++pass) {
    const double mx = *std::max_element(lw.begin(), lw.end());
    std::size_t first = lw.size(), last = 0;
    for (std::size_t g = 0; g < lw.size(); ++g) {
      if (lw[g] > mx - kDrop) {
        first = std::min(first, g);
        last = std::max(last, g);
      }
    }
    const double step = grid[1] - grid[0];
    const double new_lo = grid[first] - step;
    const double new_hi = grid[last] + step;
    const bool wide_enough = last - first + 1 >= 64;
    lo = new_lo;
    hi = new_hi;
    grid.resize(cells);
    lw.resize(cells);
    const double h = (hi - lo) / static_cast<double>(cells);
    for (std::size_t g = 0; g < cells; ++g) {
      grid[g] = lo + (static_cast<double>(g) + 0.5) * h;
      lw[g] = log_density_u(grid[g]);
    }
    if (wide_enough && pass > 0) break;
  }
  const double h = (hi - lo) / static_cast<double>(cells);
  const double mx = *std::max_element(lw.begin(), lw.end());
  std::vector<double> w(cells);
  for (std::size_t g = 0; g < cells; ++g) w[g] = std::exp(lw[g] - mx);
  const std::size_t cell = rng.categorical(w);
  return std::exp(grid[cell] - 0.5 * h + h * rng.uniform());
}

namespace {

arma::vec psi_from_eta(const arma::vec& eta, const Partition& p) {
  arma::vec psi(p.n());
  for (std::size_t i = 0; i < p.n(); ++i) psi[i] = eta[p.assignment[i]];
  return psi;
}

arma::vec draw_eta(const arma::vec& r, const Partition& p, double s2, double t2, Rng& rng) {
  const ClusterSums cs = cluster_sums({r.memptr(), r.n_elem}, p);
  arma::vec eta(p.k());
  for (int j = 0; j < p.k(); ++j) {
    const double var = 1.0 / (1.0 / t2 + p.sizes[j] / s2);
    eta[j] = rng.normal(var * cs.sum[j] / s2, std::sqrt(var));
  }
  return eta;
}

// beta ~ N(G^{-1} h, s2 G^{-1}) given the upper Cholesky factor R of G.
arma::vec draw_normal_precision(const arma::mat& R, const arma::vec& h, double s2, Rng& rng) {
  const arma::vec w = arma::solve(arma::trimatl(R.t()), h);
  arma::vec z(h.n_elem);
  for (double& v : z) v = rng.normal();
  return arma::solve(arma::trimatu(R), w + std::sqrt(s2) * z);
}

ModelParams step_conditional(const ChainState& state, const Dataset& d, const Hyperpriors& hp, Rng& rng,
                             const ThetaStepOptions& opts, const LinearWorkspace& ws) {
  const Partition& p = state.partition;
  ModelParams th = state.theta;
  const arma::vec r = residual(d, th.beta);
  th.eta = draw_eta(r, p, th.sigma2, th.tau2, rng);
  const arma::vec psi = psi_from_eta(th.eta, p);
  th.beta = draw_normal_precision(ws.chol(), d.X.t() * (d.y - psi), th.sigma2, rng);
  th.tau2 = rng.inv_gamma(p.k() / 2.0 + hp.a1, arma::dot(th.eta, th.eta) / 2.0 + hp.b1);
  if (opts.sample_sigma2) {
    const arma::vec e = residual(d, th.beta) - psi;
    th.sigma2 = rng.inv_gamma(static_cast<double>(d.n() + d.p()) / 2.0 + hp.a2,
                              arma::dot(e, e) / 2.0 + arma::dot(th.beta, th.beta) / 2.0 + hp.b2);
  }
  return th;
}

ModelParams step_marginalized(const ChainState& state, const Dataset& d, const Hyperpriors& hp, Rng& rng,
                              const ThetaStepOptions& opts, const LinearWorkspace& ws) {
  const Partition& p = state.partition;
  ModelParams th = state.theta;
  const std::size_t k = p.sizes.size();
  const std::size_t pp = d.p();

  // block sums of covariate rows and responses
  arma::mat xs(pp, k, arma::fill::zeros);
  arma::vec ys(k, arma::fill::zeros);
  for (std::size_t i = 0; i < d.n(); ++i) {
    xs.col(p.assignment[i]) += d.X.row(i).t();
    ys[p.assignment[i]] += d.y[i];
  }

  // beta | sigma2, tau2 with Var y = sigma2 (I + rho A A')
  const double rho = th.tau2 / th.sigma2;
  arma::mat G = arma::eye(pp, pp) + ws.xtx();
  arma::vec h = d.X.t() * d.y;
  for (std::size_t j = 0; j < k; ++j) {
    const double w = rho / (1.0 + rho * p.sizes[j]);
    G -= w * xs.col(j) * xs.col(j).t();
    h -= w * ys[j] * xs.col(j);
  }
  arma::mat R;
  if (!arma::chol(R, G)) throw NumericalError("Cholesky factorization failed in the marginalized beta draw");
  th.beta = draw_normal_precision(R, h, th.sigma2, rng);

  const arma::vec r = residual(d, th.beta);
  const ClusterSums cs = cluster_sums({r.memptr(), r.n_elem}, p);
  const double bb = arma::dot(th.beta, th.beta);
  auto loglik = [&](double s2, double t2) {
    double lp = 0.0;
    for (std::size_t j = 0; j < k; ++j) lp += log_marginal_cluster(p.sizes[j], cs.sum[j], cs.sumsq[j], s2, t2);
    return lp;
  };

  if (opts.sample_sigma2) {
    const double t2 = th.tau2;
    th.sigma2 = grid_draw_log_scale(
        [&](double u) {
          const double s2 = std::exp(u);
          return loglik(s2, t2) - 0.5 * static_cast<double>(pp) * u - bb / (2.0 * s2) - hp.a2 * u - hp.b2 / s2;
        },
        std::log(th.sigma2), rng);
  }
  const double s2 = th.sigma2;
  th.tau2 = grid_draw_log_scale(
      [&](double u) {
        const double t2 = std::exp(u);
        return loglik(s2, t2) - hp.a1 * u - hp.b1 / t2;
      },
      std::log(th.tau2), rng);

  th.eta = draw_eta(r, p, th.sigma2, th.tau2, rng);
  return th;
}

}  // namespace

ModelParams gibbs_step_theta(const ChainState& state, const Dataset& d, const Hyperpriors& hp, Rng& rng,
                             const ThetaStepOptions& opts, const LinearWorkspace& ws) {
  if (state.partition.n() != d.n()) throw std::invalid_argument("partition size does not match the dataset");
  ModelParams th = opts.marginalized ? step_marginalized(state, d, hp, rng, opts, ws)
                                     : step_conditional(state, d, hp, rng, opts, ws);
  if (!th.beta.is_finite() || !std::isfinite(th.sigma2) || !std::isfinite(th.tau2) || !th.eta.is_finite()) {
    throw NumericalError("theta step produced non-finite values");
  }
  return th;
}

ModelParams gibbs_step_theta(const ChainState& state, const Dataset& d, const Hyperpriors& hp, Rng& rng,
                             bool marginalized) {
  const LinearWorkspace ws(d.X);
  return gibbs_step_theta(state, d, hp, rng, ThetaStepOptions{marginalized, true}, ws);
}

OlsFit ordinary_least_squares(const arma::mat& X, const arma::vec& y) {
  if (X.n_rows <= X.n_cols) throw DataError("least squares needs more rows than columns");
  OlsFit fit;
  const arma::mat xtx_inv = arma::inv_sympd(X.t() * X);
  fit.beta = xtx_inv * X.t() * y;
  const arma::vec e = y - X * fit.beta;
  const double s2 = arma::dot(e, e) / static_cast<double>(X.n_rows - X.n_cols);
  fit.se = arma::sqrt(s2 * xtx_inv.diag());
  return fit;
}

}  // namespace dprem
