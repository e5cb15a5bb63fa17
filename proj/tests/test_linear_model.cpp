#include <doctest.h>

#include <cmath>
#include <vector>

#include "drem/errors.hpp"
#include "drem/linear_model.hpp"
#include "drem/numerics.hpp"
#include "drem/partition.hpp"
#include "drem/rng.hpp"

using namespace dprem;

namespace {

// log N(y; X beta, sigma2 I + tau2 A A') from the dense covariance.
double dense_log_density(const Dataset& d, const ModelParams& th, const Partition& p) {
  const arma::mat A = p.incidence();
  const arma::mat V = th.sigma2 * arma::eye(d.n(), d.n()) + th.tau2 * A * A.t();
  const arma::mat L = arma::chol(V, "lower");
  const arma::vec e = d.y - d.X * th.beta;
  const arma::vec z = arma::solve(arma::trimatl(L), e);
  return -0.5 * d.n() * kLog2Pi - arma::sum(arma::log(L.diag())) - 0.5 * arma::dot(z, z);
}

Dataset random_dataset(std::size_t n, std::size_t p, Rng& rng) {
  Dataset d;
  d.X.set_size(n, p);
  d.y.set_size(n);
  for (auto& v : d.X) v = rng.normal();
  for (auto& v : d.y) v = rng.normal(0.0, 2.0);
  return d;
}

ModelParams random_theta(std::size_t p, Rng& rng) {
  ModelParams th;
  th.beta.set_size(p);
  for (auto& v : th.beta) v = rng.normal();
  th.sigma2 = std::exp(rng.normal(0.0, 1.0));
  th.tau2 = std::exp(rng.normal(0.0, 1.0));
  return th;
}

Partition random_partition(std::size_t n, Rng& rng) {
  std::vector<int> raw(n);
  const std::size_t k = 1 + rng.uniform_index(n);
  for (auto& v : raw) v = static_cast<int>(rng.uniform_index(k));
  return canonicalize(raw);
}

}  // namespace

TEST_CASE("structured likelihood equals the dense multivariate normal") {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const std::size_t p = 1 + rng.uniform_index(3);
    const Dataset d = random_dataset(n, p, rng);
    const ModelParams th = random_theta(p, rng);
    const Partition part = random_partition(n, rng);
    REQUIRE(log_marginal_component(d, th, part) == doctest::Approx(dense_log_density(d, th, part)).epsilon(1e-12));
  }
}

TEST_CASE("likelihood special cases") {
  Rng rng(5);
  const Dataset d = random_dataset(5, 2, rng);
  ModelParams th = random_theta(2, rng);
  const arma::vec r = d.y - d.X * th.beta;
  double singles = 0.0;
  for (double v : r) singles += -0.5 * (kLog2Pi + std::log(th.sigma2 + th.tau2) + v * v / (th.sigma2 + th.tau2));
  CHECK(log_marginal_component(d, th, parse_partition("1,2,3,4,5")) == doctest::Approx(singles).epsilon(1e-12));

  th.sigma2 = 0.0;
  CHECK_THROWS(log_marginal_component(d, th, parse_partition("1,1,1,1,1")));
}

TEST_CASE("likelihood is invariant to a consistent permutation of rows") {
  Rng rng(8);
  const Dataset d = random_dataset(9, 2, rng);
  const ModelParams th = random_theta(2, rng);
  const Partition part = parse_partition("1,2,2,3,1,3,3,2,1");
  const std::vector<arma::uword> perm{4, 0, 8, 3, 1, 7, 2, 6, 5};
  Dataset dp;
  dp.y.set_size(9);
  dp.X.set_size(9, 2);
  std::vector<int> raw(9);
  for (std::size_t i = 0; i < 9; ++i) {
    dp.y[i] = d.y[perm[i]];
    dp.X.row(i) = d.X.row(perm[i]);
    raw[i] = part.assignment[perm[i]];
  }
  CHECK(log_marginal_component(dp, th, canonicalize(raw)) ==
        doctest::Approx(log_marginal_component(d, th, part)).epsilon(1e-12));
}

TEST_CASE("cluster terms add up and update incrementally") {
  Rng rng(12);
  const Dataset d = random_dataset(10, 2, rng);
  const ModelParams th = random_theta(2, rng);
  Partition part = parse_partition("1,1,2,2,2,3,1,3,2,1");
  const arma::vec r = d.y - d.X * th.beta;
  // move row 4 from block 2 to block 1 by adjusting the two affected cluster terms
  std::vector<double> size(3, 0), sum(3, 0), sq(3, 0);
  for (std::size_t i = 0; i < 10; ++i) {
    size[part.assignment[i]] += 1;
    sum[part.assignment[i]] += r[i];
    sq[part.assignment[i]] += r[i] * r[i];
  }
  double total = 0.0;
  for (int j = 0; j < 3; ++j) total += log_marginal_cluster(size[j], sum[j], sq[j], th.sigma2, th.tau2);
  CHECK(total == doctest::Approx(log_marginal_component(d, th, part)).epsilon(1e-12));

  const double before = log_marginal_cluster(size[0], sum[0], sq[0], th.sigma2, th.tau2) +
                        log_marginal_cluster(size[1], sum[1], sq[1], th.sigma2, th.tau2);
  const double x = r[4];
  const double after = log_marginal_cluster(size[0] + 1, sum[0] + x, sq[0] + x * x, th.sigma2, th.tau2) +
                       log_marginal_cluster(size[1] - 1, sum[1] - x, sq[1] - x * x, th.sigma2, th.tau2);
  std::vector<int> raw = part.assignment;
  raw[4] = 0;
  CHECK(total - before + after ==
        doctest::Approx(log_marginal_component(d, th, canonicalize(raw))).epsilon(1e-9));
}

TEST_CASE("exhaustive coefficients: direct sum and the mixture likelihood") {
  Rng rng(21);
  const Dataset d = random_dataset(6, 2, rng);
  const ModelParams th = random_theta(2, rng);
  const PrecisionCoefficients c = exhaustive_precision_coefficients(d, th);
  REQUIRE(c.n() == 6);
  CHECK(c.kind == CoefficientKind::profile);

  std::vector<std::vector<double>> terms(6);
  std::vector<double> mixture_terms_m1, mixture_terms_m;
  const double m = 2.3;
  for_each_partition(6, [&](const Partition& p) {
    double lg = 0.0;
    for (int s : p.sizes) lg += std::lgamma(static_cast<double>(s));
    const double lf = dense_log_density(d, th, p);
    terms[p.k() - 1].push_back(lg + lf);
    mixture_terms_m.push_back(log_partition_prior(p, m) + lf);
  });
  for (std::size_t k = 0; k < 6; ++k) CHECK(c.log_c[k] == doctest::Approx(log_sum_exp(terms[k])).epsilon(1e-10));

  // sum_k m^k c_k / prod (m+i-1) equals sum over partitions of prior * likelihood
  std::vector<double> mk(6);
  for (std::size_t k = 0; k < 6; ++k) mk[k] = (k + 1) * std::log(m) + c.log_c[k];
  double denom = 0.0;
  for (int i = 1; i <= 6; ++i) denom += std::log(i - 1 + m);
  CHECK(log_sum_exp(mk) - denom == doctest::Approx(log_sum_exp(mixture_terms_m)).epsilon(1e-10));

  const auto c3 = exhaustive_precision_coefficients(random_dataset(3, 1, rng), random_theta(1, rng));
  CHECK(c3.n() == 3);
  CHECK_THROWS(exhaustive_precision_coefficients(random_dataset(13, 1, rng), random_theta(1, rng)));
}

TEST_CASE("full conditional parameters") {
  Dataset d;
  d.X = arma::mat(1, 1, arma::fill::ones);
  d.y = arma::vec{2.0};
  ModelParams th;
  th.beta = arma::vec{0.0};
  th.sigma2 = 1.0;
  th.tau2 = 1.0;
  th.eta = arma::vec{0.0};
  Hyperpriors hp;
  const LinearConditionals lc = linear_full_conditionals(d, th, parse_partition("1"), hp);
  CHECK(lc.eta_mean[0] == doctest::Approx(1.0));
  CHECK(lc.eta_var[0] == doctest::Approx(0.5));

  Dataset d2;
  d2.X = arma::mat(4, 1, arma::fill::ones);
  d2.y = arma::vec{1.0, 2.0, 3.0, 4.0};
  ModelParams th2;
  th2.beta = arma::vec{1.0};
  th2.eta = arma::vec{1.0, 1.0};
  const LinearConditionals lc2 = linear_full_conditionals(d2, th2, parse_partition("1,1,2,2"), hp);
  CHECK(lc2.tau2.shape == doctest::Approx(2.0));
  CHECK(lc2.tau2.scale == doctest::Approx(2.0));
  CHECK(lc2.sigma2.shape == doctest::Approx((4.0 + 1.0) / 2.0 + 1.0));

  th2.tau2 = 1e-12;
  const LinearConditionals tiny = linear_full_conditionals(d2, th2, parse_partition("1,1,2,2"), hp);
  CHECK(std::abs(tiny.eta_mean[0]) < 1e-9);
  CHECK(tiny.eta_var[0] < 1e-9);

  th2.eta = arma::vec{1.0};
  CHECK_THROWS(linear_full_conditionals(d2, th2, parse_partition("1,1,2,2"), hp));
}

TEST_CASE("inverse gamma conditional draws match their analytic means") {
  Rng rng(33);
  Dataset d = random_dataset(8, 2, rng);
  ModelParams th = random_theta(2, rng);
  th.eta = arma::vec{0.5, -1.0, 2.0};
  const Partition part = parse_partition("1,2,3,1,2,3,1,2");
  const LinearConditionals lc = linear_full_conditionals(d, th, part, Hyperpriors{});
  for (const InvGammaSpec& ig : {lc.tau2, lc.sigma2}) {
    const int N = 100000;
    std::vector<double> x(N);
    for (double& v : x) {
      v = rng.inv_gamma(ig.shape, ig.scale);
      REQUIRE(v > 0.0);
    }
    const MeanSe ms = mean_and_se(x);
    CHECK(std::abs(ms.mean - ig.scale / (ig.shape - 1.0)) < 3.0 * ms.se);
  }
}

TEST_CASE("eta draws inside the Gibbs step have the closed-form conditional mean") {
  Rng rng(44);
  const Dataset d = random_dataset(7, 2, rng);
  ChainState st;
  st.theta = random_theta(2, rng);
  st.theta.eta = arma::vec{0.0, 0.0};
  st.partition = parse_partition("1,1,2,2,2,1,2");
  const LinearConditionals lc = linear_full_conditionals(d, st.theta, st.partition, Hyperpriors{});
  const int N = 50000;
  std::vector<std::vector<double>> draws(2, std::vector<double>(N));
  const LinearWorkspace ws(d.X);
  for (int t = 0; t < N; ++t) {
    const ModelParams th = gibbs_step_theta(st, d, Hyperpriors{}, rng, ThetaStepOptions{}, ws);
    REQUIRE(th.tau2 > 0.0);
    REQUIRE(th.sigma2 > 0.0);
    draws[0][t] = th.eta[0];
    draws[1][t] = th.eta[1];
  }
  for (int j = 0; j < 2; ++j) {
    const MeanSe ms = mean_and_se(draws[j]);
    CHECK(std::abs(ms.mean - lc.eta_mean[j]) < 3.0 * ms.se);
  }
}

TEST_CASE("theta steps are deterministic per seed") {
  Rng data_rng(2);
  const Dataset d = random_dataset(10, 2, data_rng);
  ChainState st;
  st.theta = random_theta(2, data_rng);
  st.theta.eta = arma::vec{0.0, 0.0, 0.0};
  st.partition = parse_partition("1,2,3,1,2,3,1,2,3,3");
  for (bool marg : {false, true}) {
    Rng a(9), b(9);
    const ModelParams x = gibbs_step_theta(st, d, Hyperpriors{}, a, marg);
    const ModelParams y = gibbs_step_theta(st, d, Hyperpriors{}, b, marg);
    CHECK(arma::approx_equal(x.beta, y.beta, "absdiff", 0.0));
    CHECK(x.sigma2 == y.sigma2);
    CHECK(x.tau2 == y.tau2);
    CHECK(arma::approx_equal(x.eta, y.eta, "absdiff", 0.0));
  }
}

TEST_CASE("marginalized and conditional theta samplers agree on the posterior of beta") {
  Rng data_rng(77);
  const std::size_t n = 20;
  Dataset d;
  d.X.set_size(n, 2);
  d.y.set_size(n);
  const Partition part = canonicalize(std::vector<int>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3});
  const arma::vec eta{1.5, -1.0, 0.5, -2.0};
  for (std::size_t i = 0; i < n; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = data_rng.normal();
    d.y[i] = 1.0 + 2.0 * d.X(i, 1) + eta[part.assignment[i]] + data_rng.normal();
  }
  const LinearWorkspace ws(d.X);
  const std::size_t T = 40000, burn = 2000;
  std::vector<arma::vec> means;
  std::vector<arma::vec> ses;
  for (bool marg : {false, true}) {
    Rng rng(marg ? 501 : 502);
    ChainState st;
    st.partition = part;
    st.theta.beta = arma::vec(2, arma::fill::zeros);
    st.theta.eta = arma::vec(4, arma::fill::zeros);
    std::vector<std::vector<double>> trace(2);
    ThetaStepOptions opts;
    opts.marginalized = marg;
    for (std::size_t t = 0; t < T; ++t) {
      st.theta = gibbs_step_theta(st, d, Hyperpriors{}, rng, opts, ws);
      if (t >= burn) {
        trace[0].push_back(st.theta.beta[0]);
        trace[1].push_back(st.theta.beta[1]);
      }
    }
    arma::vec m(2), s(2);
    for (int j = 0; j < 2; ++j) {
      const MeanSe bm = batch_mean_se(trace[j], 50);
      m[j] = bm.mean;
      s[j] = bm.se;
    }
    means.push_back(m);
    ses.push_back(s);
  }
  for (int j = 0; j < 2; ++j) {
    const double se = std::sqrt(ses[0][j] * ses[0][j] + ses[1][j] * ses[1][j]);
    CHECK(std::abs(means[0][j] - means[1][j]) < 3.0 * se);
  }
}

TEST_CASE("grid draw reproduces a known log-normal density") {
  // u = log x ~ N(1, 0.25): the density in u is supplied directly
  Rng rng(3);
  const int N = 50000;
  std::vector<double> u(N);
  for (double& v : u) {
    v = std::log(grid_draw_log_scale([](double z) { return -0.5 * (z - 1.0) * (z - 1.0) / 0.25; }, 0.0, rng));
  }
  const MeanSe ms = mean_and_se(u);
  CHECK(std::abs(ms.mean - 1.0) < 3.0 * ms.se);
  double var = 0.0;
  for (double v : u) var += (v - ms.mean) * (v - ms.mean);
  var /= N - 1;
  CHECK(var == doctest::Approx(0.25).epsilon(0.03));
}

TEST_CASE("least squares recovers an exact fit") {
  arma::mat X{{1, 0}, {1, 1}, {1, 2}, {1, 3}};
  arma::vec y = X * arma::vec{2.0, -1.0};
  const OlsFit f = ordinary_least_squares(X, y);
  CHECK(f.beta[0] == doctest::Approx(2.0));
  CHECK(f.beta[1] == doctest::Approx(-1.0));
}
