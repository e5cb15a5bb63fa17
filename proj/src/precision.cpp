#include "drem/precision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drem/errors.hpp"
#include "drem/linear_model.hpp"
#include "drem/numerics.hpp"

namespace dprem {

const char* to_string(Shape s) {
  switch (s) {
    case Shape::interior_max:
      return "interior_max";
    case Shape::boundary_zero:
      return "boundary_zero";
    case Shape::boundary_infinity:
      return "boundary_infinity";
    case Shape::flat:
      return "flat";
    case Shape::min_then_max:
      return "min_then_max";
    case Shape::interior_min:
      return "interior_min";
    case Shape::max_then_min:
      return "max_then_min";
    case Shape::irregular:
      return "irregular";
  }
  return "unknown";
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_coefficients(const PrecisionCoefficients& c) {
  if (c.log_c.empty()) throw std::invalid_argument("precision coefficients are empty");
  bool any = false;
  for (double v : c.log_c) {
    if (std::isnan(v)) throw NumericalError("precision coefficients contain a missing entry");
    if (v == kInf) throw NumericalError("precision coefficients contain +inf");
    any = any || v > kNegInf;
  }
  if (!any) throw std::invalid_argument("all precision coefficients are zero");
}

void check_m(double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("m must be positive and finite");
}

double log_pochhammer_sum(double m, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 1; i <= n; ++i) s += std::log(static_cast<double>(i - 1) + m);
  return s;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double log_ell(double m, const PrecisionCoefficients& c) {
  check_m(m);
  check_coefficients(c);
  const std::size_t n = c.n();
  std::vector<double> t(n);
  const double lm = std::log(m);
  for (std::size_t k = 1; k <= n; ++k) t[k - 1] = static_cast<double>(k) * lm + c.log_c[k - 1];
  return log_sum_exp(t) - log_pochhammer_sum(m, n);
}

double dlog_ell(double m, const PrecisionCoefficients& c) {
  check_m(m);
  check_coefficients(c);
  const std::size_t n = c.n();
  const double lm = std::log(m);
  std::vector<double> num, den(n);
  for (std::size_t k = 1; k <= n; ++k) {
    den[k - 1] = static_cast<double>(k - 1) * lm + c.log_c[k - 1];
    if (k >= 2) num.push_back(std::log(static_cast<double>(k - 1)) + static_cast<double>(k - 2) * lm + c.log_c[k - 1]);
  }
  const double ln = log_sum_exp(num);
  double d = ln == kNegInf ? 0.0 : std::exp(ln - log_sum_exp(den));
  for (std::size_t i = 2; i <= n; ++i) d -= 1.0 / (static_cast<double>(i - 1) + m);
  return d;
}

double d2log_ell(double m, const PrecisionCoefficients& c) {
  check_m(m);
  check_coefficients(c);
  const std::size_t n = c.n();
  const double lm = std::log(m);
  std::vector<double> lw(n);
  for (std::size_t k = 1; k <= n; ++k) lw[k - 1] = static_cast<double>(k) * lm + c.log_c[k - 1];
  const double z = log_sum_exp(lw);
  double ek = 0.0, ek2 = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double w = std::exp(lw[k - 1] - z);
    ek += w * static_cast<double>(k);
    ek2 += w * static_cast<double>(k * k);
  }
  double d2 = (ek2 - ek * ek - ek) / (m * m);
  for (std::size_t i = 1; i <= n; ++i) {
    const double v = static_cast<double>(i - 1) + m;
    d2 += 1.0 / (v * v);
  }
  return d2;
}

double dlog_ell_limit_zero(const PrecisionCoefficients& c) {
  check_coefficients(c);
  const std::size_t n = c.n();
  if (c.log_c[0] == kNegInf) return kInf;
  const double ratio = n >= 2 ? std::exp(c.log_c[1] - c.log_c[0]) : 0.0;
  return ratio - harmonic(n - 1);
}

int dlog_ell_sign_infinity(const PrecisionCoefficients& c) {
  check_coefficients(c);
  const std::size_t n = c.n();
  if (n < 2) return 0;
  if (c.log_c[n - 1] == kNegInf) return -1;
  const double ratio = std::exp(c.log_c[n - 2] - c.log_c[n - 1]);
  return sign_of(static_cast<double>(n * (n - 1)) / 2.0 - ratio);
}

double log_ell_at_zero(const PrecisionCoefficients& c) {
  check_coefficients(c);
  return c.log_c[0] - log_gamma(static_cast<double>(c.n()));
}

double log_ell_at_infinity(const PrecisionCoefficients& c) {
  check_coefficients(c);
  return c.log_c.back();
}

namespace {

// Bisection on log m for a sign change of f between lo and hi.
template <class F>
double bisect_log(F&& f, double lo, double hi) {
  double a = std::log(lo), b = std::log(hi);
  const int sa = sign_of(f(lo));
  for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
    const double mid = 0.5 * (a + b);
    const int sm = sign_of(f(std::exp(mid)));
    if (sm == 0) return std::exp(mid);
    if (sm == sa) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return std::exp(0.5 * (a + b));
}

std::vector<double> log_grid(double lo, double hi, std::size_t pts) {
  std::vector<double> g(pts);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < pts; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(pts - 1));
  return g;
}

}  // namespace

MleResult classify_likelihood_shape(const PrecisionCoefficients& c) {
  check_coefficients(c);
  if (c.n() < 2) throw std::invalid_argument("shape classification needs n >= 2");
  const std::vector<double> grid = log_grid(1e-6, 1e6, 200);
  std::vector<double> d(grid.size());
  double scale = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    d[g] = dlog_ell(grid[g], c);
    scale = std::max(scale, std::abs(d[g] * grid[g]));
  }
  MleResult res;
  if (scale < 1e-10) {
    res.classification = Shape::flat;
    res.m_hat = kNaN;
    res.sign_pattern = "0";
    return res;
  }

  const double l0 = dlog_ell_limit_zero(c);
  int s0 = sign_of(l0);
  if (s0 == 0) s0 = sign_of(d.front());
  int sinf = dlog_ell_sign_infinity(c);
  if (sinf == 0) sinf = sign_of(d.back());

  std::vector<int> signs{s0};
  for (double v : d) signs.push_back(sign_of(v));
  signs.push_back(sinf);
  std::string pattern;
  int prev = 0;
  for (int s : signs) {
    if (s == 0 || s == prev) continue;
    pattern += s > 0 ? '+' : '-';
    prev = s;
  }
  res.sign_pattern = pattern;

  auto f = [&](double m) { return dlog_ell(m, c); };
  std::vector<double> maxima, minima;
  int last_sign = 0;
  std::size_t last_idx = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const int s = sign_of(d[g]);
    if (s == 0) continue;
    if (last_sign != 0 && s != last_sign) {
      const double root = bisect_log(f, grid[last_idx], grid[g]);
      res.roots.push_back(root);
      (last_sign > 0 ? maxima : minima).push_back(root);
    }
    last_sign = s;
    last_idx = g;
  }

  auto best_interior = [&](const std::vector<double>& cands, double fallback) {
    if (cands.empty()) return fallback;
    double best = cands.front();
    for (double m : cands) {
      if (log_ell(m, c) > log_ell(best, c)) best = m;
    }
    return best;
  };

  if (pattern == "+") {
    res.classification = Shape::boundary_infinity;
    res.m_hat = kInf;
  } else if (pattern == "-") {
    res.classification = Shape::boundary_zero;
    res.m_hat = 0.0;
  } else if (pattern == "+-") {
    res.classification = Shape::interior_max;
    res.m_hat = best_interior(maxima, grid[sign_of(d.front()) < 0 ? 0 : grid.size() - 1]);
  } else if (pattern == "-+") {
    res.classification = Shape::interior_min;
    res.m_hat = log_ell_at_zero(c) >= log_ell_at_infinity(c) ? 0.0 : kInf;
  } else if (pattern == "-+-") {
    res.classification = Shape::min_then_max;
    res.m_hat = best_interior(maxima, grid.back());
  } else if (pattern == "+-+") {
    res.classification = Shape::max_then_min;
    res.m_hat = best_interior(maxima, grid.front());
  } else {
    res.classification = Shape::irregular;
    std::size_t arg = 0;
    double best = kNegInf;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double v = log_ell(grid[g], c);
      if (v > best) {
        best = v;
        arg = g;
      }
    }
    res.m_hat = best_interior(maxima, grid[arg]);
  }
  if (std::isfinite(res.m_hat) && res.m_hat > 0.0) res.curvature = d2log_ell(res.m_hat, c);
  return res;
}

double kappa(double m, std::size_t n) {
  if (n == 0) throw std::invalid_argument("kappa: n must be positive");
  if (std::isnan(m) || m < 0.0) throw std::invalid_argument("kappa: m must be non-negative");
  if (m == kInf) return static_cast<double>(n);
  if (m == 0.0) return 1.0;
  double s = 0.0;
  for (std::size_t i = 1; i <= n; ++i) s += m / (m + static_cast<double>(i - 1));
  return s;
}

double solve_m_for_kappa(double kappa_target, std::size_t n) {
  if (!(kappa_target > 1.0) || !(kappa_target < static_cast<double>(n))) {
    throw std::invalid_argument("solve_m_for_kappa: target must lie strictly between 1 and n");
  }
  double lo = 1e-12, hi = 1.0;
  while (kappa(hi, n) < kappa_target) {
    hi *= 2.0;
    if (hi > 1e300) throw NumericalError("solve_m_for_kappa: bracket search diverged");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double k = kappa(mid, n);
    if (std::abs(k - kappa_target) < 1e-13) return mid;
    if (k < kappa_target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo - 1.0 < 1e-15) break;
  }
  return std::sqrt(lo * hi);
}

GammaPrior gamma_prior_from_moments(double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0)) throw std::invalid_argument("gamma prior moments must be positive");
  return {mean * mean / variance, variance / mean};
}

MleResult posterior_mode_m(const PrecisionCoefficients& c, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("posterior_mode_m: a and b must be positive");
  check_coefficients(c);
  auto obj = [&](double m) { return log_ell(m, c) + (a - 1.0) * std::log(m) - m / b; };
  auto grad = [&](double m) { return dlog_ell(m, c) + (a - 1.0) / m - 1.0 / b; };
  const std::vector<double> grid = log_grid(1e-8, std::max(1e6, 1e4 * b), 400);
  MleResult res;
  std::vector<double> maxima;
  int last_sign = 0;
  std::size_t last_idx = 0;
  std::string pattern;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const int s = sign_of(grad(grid[g]));
    if (s == 0) continue;
    if (pattern.empty() || (s > 0) != (pattern.back() == '+')) pattern += s > 0 ? '+' : '-';
    if (last_sign != 0 && s != last_sign) {
      const double root = bisect_log(grad, grid[last_idx], grid[g]);
      res.roots.push_back(root);
      if (last_sign > 0) maxima.push_back(root);
    }
    last_sign = s;
    last_idx = g;
  }
  res.sign_pattern = pattern;
  double best_m = kNaN, best_v = kNegInf;
  for (double m : maxima) {
    const double v = obj(m);
    if (v > best_v) {
      best_v = v;
      best_m = m;
    }
  }
  double zero_limit = kNegInf;
  if (a < 1.0) zero_limit = kInf;
  if (a == 1.0) zero_limit = log_ell_at_zero(c);
  if (maxima.empty() || zero_limit > best_v) {
    res.classification = Shape::boundary_zero;
    res.m_hat = 0.0;
    return res;
  }
  res.classification = Shape::interior_max;
  res.m_hat = best_m;
  res.curvature = d2log_ell(best_m, c) - (a - 1.0) / (best_m * best_m);
  return res;
}

double posterior_mean_m(const PrecisionCoefficients& c, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("posterior_mean_m: a and b must be positive");
  check_coefficients(c);
  const double n = static_cast<double>(c.n());
  const double u0 = -30.0;
  const double u1 = std::max(u0 + 1.0, std::log(b * (a + n + 100.0)));
  const std::size_t pts = 6001;
  const double h = (u1 - u0) / static_cast<double>(pts - 1);
  std::vector<double> lden(pts);
  for (std::size_t g = 0; g < pts; ++g) {
    const double u = u0 + h * static_cast<double>(g);
    const double m = std::exp(u);
    lden[g] = log_ell(m, c) + a * u - m / b;
  }
  const double mx = *std::max_element(lden.begin(), lden.end());
  double den = 0.0, num = 0.0;
  for (std::size_t g = 0; g < pts; ++g) {
    const double wt = (g == 0 || g + 1 == pts) ? 0.5 : 1.0;
    const double dens = std::exp(lden[g] - mx);
    den += wt * dens;
    num += wt * dens * std::exp(u0 + h * static_cast<double>(g));
  }
  den *= h;
  num *= h;
  // density behaves like e^{a u} (and m e^{a u}) below u0
  const double left = std::exp(lden[0] - mx);
  den += left / a;
  num += left * std::exp(u0) / (a + 1.0);
  if (!(den > 0.0)) throw NumericalError("posterior_mean_m: posterior mass vanished");
  return num / den;
}

std::vector<double> marginal_posterior_m(std::span<const double> grid, const PrecisionCoefficients& c, double a,
                                         double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("marginal_posterior_m: a and b must be positive");
  if (grid.empty()) throw std::invalid_argument("marginal_posterior_m: empty grid");
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] > 0.0) || (g > 0 && !(grid[g] > grid[g - 1]))) {
      throw std::invalid_argument("marginal_posterior_m: grid must be positive and increasing");
    }
  }
  std::vector<double> out(grid.size());
  const double log_norm = -log_gamma(a) - a * std::log(b);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double m = grid[g];
    out[g] = log_ell(m, c) + (a - 1.0) * std::log(m) - m / b + log_norm;
  }
  return out;
}

namespace {

std::vector<std::vector<double>> rising_table(std::size_t n, double alpha) {
  std::vector<std::vector<double>> z(n + 1, std::vector<double>(n + 1, kNegInf));
  z[0][0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t k = 1; k <= i; ++k) {
      const double join = z[i - 1][k] == kNegInf
                              ? kNegInf
                              : std::log(static_cast<double>(k) * alpha + static_cast<double>(i - 1)) + z[i - 1][k];
      const double open = std::log(alpha) + z[i - 1][k - 1];
      z[i][k] = log_add_exp(join, open);
    }
  }
  return z;
}

struct Draw {
  Partition partition;
  std::size_t theta_index;
  std::size_t origin_level;  // block count of the direct draw this entry descends from
  double log_w;
};

// Proposal mass of a k-block partition obtained by drawing a K-block partition within its
// level and applying K - k uniform pair merges.
double log_merged_mass(const Partition& p, std::size_t K, const std::vector<std::vector<double>>& z) {
  const std::size_t n = p.n();
  const auto k = static_cast<std::size_t>(p.k());
  double lq = -z[n][K] + log_gamma(static_cast<double>(K - k) + 1.0) + log_gamma(static_cast<double>(k) + 1.0) +
              log_gamma(static_cast<double>(k)) - log_gamma(static_cast<double>(K) + 1.0) -
              log_gamma(static_cast<double>(K));
  std::vector<double> dp(K + 1, kNegInf), next(K + 1);
  dp[0] = 0.0;
  for (int nb : p.sizes) {
    std::fill(next.begin(), next.end(), kNegInf);
    for (std::size_t s = 0; s <= K; ++s) {
      if (dp[s] == kNegInf) continue;
      for (std::size_t g = 1; g <= static_cast<std::size_t>(nb) && s + g <= K; ++g) {
        next[s + g] = log_add_exp(next[s + g], dp[s] + z[nb][g] + log_gamma(static_cast<double>(g) + 1.0));
      }
    }
    dp.swap(next);
  }
  return lq + dp[K];
}

}  // namespace

std::vector<double> log_rising_partition_sums(std::size_t n, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  return rising_table(n, alpha)[n];
}

ModelParams draw_theta_prior(std::size_t p, const Hyperpriors& hp, Rng& rng) {
  ModelParams th;
  th.sigma2 = rng.inv_gamma(hp.a2, hp.b2);
  th.beta.set_size(p);
  for (double& v : th.beta) v = rng.normal(0.0, std::sqrt(th.sigma2));
  th.tau2 = rng.inv_gamma(hp.a1, hp.b1);
  return th;
}

PrecisionCoefficients importance_sample_coefficients(const Dataset& d, const Hyperpriors& hp,
                                                     const ImportanceOptions& opts, Rng& rng,
                                                     ImportanceDiagnostics* diag) {
  validate(d);
  validate(hp, d.n());
  if (opts.draws == 0) throw ConfigError("importance sampling needs at least one draw");
  const std::size_t n = d.n();
  const double alpha = hp.alpha;
  const auto z = rising_table(n, alpha);

  std::vector<arma::vec> residuals;
  std::vector<double> sig2, tau2;
  if (opts.fixed_theta) {
    residuals.push_back(residual(d, opts.fixed_theta->beta));
    sig2.push_back(opts.fixed_theta->sigma2);
    tau2.push_back(opts.fixed_theta->tau2);
  }

  auto base_weight = [&](const Partition& p, std::size_t ti) {
    const arma::vec& r = residuals[ti];
    double lw = log_marginal_residual({r.memptr(), r.n_elem}, p, sig2[ti], tau2[ti]);
    for (int nj : p.sizes) lw += log_gamma(nj);
    return lw;
  };

  std::vector<std::vector<Draw>> levels(n + 1);
  const std::vector<double> alpha_vec(n, alpha);
  for (std::size_t t = 0; t < opts.draws; ++t) {
    std::size_t ti = 0;
    if (!opts.fixed_theta) {
      const ModelParams th = draw_theta_prior(d.p(), hp, rng);
      residuals.push_back(residual(d, th.beta));
      sig2.push_back(th.sigma2);
      tau2.push_back(th.tau2);
      ti = residuals.size() - 1;
    }
    const std::vector<double> log_q = log_dirichlet(alpha_vec, rng);
    Partition p = collapse_draw_log(log_q, n, rng);
    const auto k = static_cast<std::size_t>(p.k());
    double lq = -z[n][k];
    for (int nj : p.sizes) lq += log_rising(alpha, nj);
    const double lw = base_weight(p, ti) - lq;
    levels[k].push_back(Draw{std::move(p), ti, k, lw});
  }

  std::vector<std::size_t> direct(n + 1);
  std::vector<int> source(n + 1, 0);
  for (std::size_t k = 1; k <= n; ++k) direct[k] = levels[k].size();
  for (std::size_t k = n - 1; k >= 1; --k) {
    if (direct[k] >= opts.min_direct_draws || levels[k + 1].empty()) continue;
    std::vector<Draw> merged;
    merged.reserve(levels[k + 1].size());
    for (const Draw& src : levels[k + 1]) {
      const int kk = src.partition.k();
      const int j1 = static_cast<int>(rng.uniform_index(kk));
      int j2 = static_cast<int>(rng.uniform_index(kk - 1));
      if (j2 >= j1) ++j2;
      Partition p = merge_clusters(src.partition, j1, j2);
      const double lq = log_merged_mass(p, src.origin_level, z);
      const double lw = base_weight(p, src.theta_index) - lq;
      merged.push_back(Draw{std::move(p), src.theta_index, src.origin_level, lw});
    }
    levels[k] = std::move(merged);
    source[k] = static_cast<int>(k + 1);
  }

  PrecisionCoefficients c;
  c.kind = CoefficientKind::importance_estimated;
  c.log_c.assign(n, kNaN);
  c.mc_se.assign(n, kNaN);
  for (std::size_t k = 1; k <= n; ++k) {
    const auto& lv = levels[k];
    if (lv.empty()) {
      if (k == 1 || k == n) {
        // a single partition: evaluate it exactly, averaged over the theta draws
        std::vector<int> labels(n, 0);
        if (k == n) {
          for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i);
        }
        const Partition p = canonicalize(labels);
        std::vector<double> vals(residuals.size());
        for (std::size_t ti = 0; ti < residuals.size(); ++ti) vals[ti] = base_weight(p, ti);
        c.log_c[k - 1] = log_sum_exp(vals) - std::log(static_cast<double>(vals.size()));
        c.mc_se[k - 1] = 0.0;
      }
      continue;
    }
    std::vector<double> lw(lv.size());
    for (std::size_t t = 0; t < lv.size(); ++t) lw[t] = lv[t].log_w;
    const double mx = *std::max_element(lw.begin(), lw.end());
    std::vector<double> w(lw.size());
    for (std::size_t t = 0; t < lw.size(); ++t) w[t] = std::exp(lw[t] - mx);
    const MeanSe ms = mean_and_se(w);
    c.log_c[k - 1] = mx + std::log(ms.mean);
    c.mc_se[k - 1] = lw.size() >= 2 ? ms.se / ms.mean : kInf;
  }
  if (diag) {
    diag->direct_draws.assign(direct.begin() + 1, direct.end());
    diag->used_draws.clear();
    for (std::size_t k = 1; k <= n; ++k) diag->used_draws.push_back(levels[k].size());
    diag->source_level.assign(source.begin() + 1, source.end());
  }
  return c;
}

PrecisionCoefficients marginal_exhaustive_coefficients(const Dataset& d, const Hyperpriors& hp, std::size_t draws,
                                                       Rng& rng) {
  validate(d);
  if (draws == 0) throw ConfigError("marginal coefficients need at least one theta draw");
  const std::size_t n = d.n();
  std::vector<std::vector<double>> per_level(n, std::vector<double>(draws));
  for (std::size_t t = 0; t < draws; ++t) {
    const ModelParams th = draw_theta_prior(d.p(), hp, rng);
    const PrecisionCoefficients ct = exhaustive_precision_coefficients(d, th);
    for (std::size_t k = 0; k < n; ++k) per_level[k][t] = ct.log_c[k];
  }
  PrecisionCoefficients c;
  c.kind = CoefficientKind::marginal;
  c.log_c.resize(n);
  c.mc_se.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double mx = *std::max_element(per_level[k].begin(), per_level[k].end());
    std::vector<double> w(draws);
    for (std::size_t t = 0; t < draws; ++t) w[t] = std::exp(per_level[k][t] - mx);
    const MeanSe ms = mean_and_se(w);
    c.log_c[k] = mx + std::log(ms.mean);
    c.mc_se[k] = draws >= 2 ? ms.se / ms.mean : kInf;
  }
  return c;
}

}  // namespace dprem
