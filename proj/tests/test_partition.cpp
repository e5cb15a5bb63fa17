#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "drem/numerics.hpp"
#include "drem/partition.hpp"
#include "drem/rng.hpp"

using namespace dprem;

namespace {

// Sequential urn probability: row i joins a block of current size s with prob s/(m+i),
// opens a block with prob m/(m+i).
double urn_sequence_log_prob(const Partition& p, double m) {
  std::vector<int> sizes;
  double lp = 0.0;
  for (std::size_t i = 0; i < p.n(); ++i) {
    const int a = p.assignment[i];
    const double denom = m + static_cast<double>(i);
    if (a == static_cast<int>(sizes.size())) {
      lp += std::log(m / denom);
      sizes.push_back(1);
    } else {
      lp += std::log(sizes[a] / denom);
      ++sizes[a];
    }
  }
  return lp;
}

double bell(std::size_t n) {
  // Bell triangle
  std::vector<double> row{1.0};
  for (std::size_t i = 1; i <= n; ++i) {
    std::vector<double> next{row.back()};
    for (double v : row) next.push_back(next.back() + v);
    row = next;
  }
  return row.front();
}

// Beta(a, a) expectation of q^2 + (1-q)^2 by composite Simpson quadrature after
// substituting q = sin^2(t), which removes the endpoint singularities for a >= 1/2.
double same_block_probability_quadrature(double a) {
  const int N = 20000;
  const double h = (M_PI / 2) / N;
  const double lnorm = log_gamma(2 * a) - 2 * log_gamma(a);
  auto f = [&](double t) {
    const double s = std::sin(t), c = std::cos(t);
    const double q = s * s;
    return (q * q + (1 - q) * (1 - q)) * 2.0 * std::pow(s, 2 * a - 1) * std::pow(c, 2 * a - 1) * std::exp(lnorm);
  };
  double s = f(0.0) + f(M_PI / 2);
  for (int i = 1; i < N; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("canonical relabeling and text round trip") {
  const std::vector<int> raw{7, 7, 2, 9, 2};
  const Partition p = canonicalize(raw);
  CHECK(p.assignment == std::vector<int>{0, 0, 1, 2, 1});
  CHECK(p.sizes == std::vector<int>{2, 2, 1});
  CHECK(p.to_string() == "1,1,2,3,2");
  CHECK(parse_partition(p.to_string()) == p);
  CHECK(parse_partition(" 3, 3 ,1") == canonicalize(std::vector<int>{0, 0, 1}));
  CHECK_THROWS(parse_partition(""));
  CHECK_THROWS(parse_partition("1,x"));
  Partition bad = p;
  bad.assignment[0] = 1;
  CHECK_THROWS(validate(bad));
}

TEST_CASE("incidence matrix has one unit entry per row") {
  const Partition p = parse_partition("1,2,1,3");
  const arma::mat A = p.incidence();
  CHECK(A.n_rows == 4);
  CHECK(A.n_cols == 3);
  CHECK(arma::accu(A) == 4.0);
  CHECK(A(2, 0) == 1.0);
  const arma::mat AtA = A.t() * A;
  CHECK(AtA(0, 0) == 2.0);
}

TEST_CASE("enumeration visits every partition once") {
  for (std::size_t n = 1; n <= 8; ++n) {
    std::set<std::vector<int>> seen;
    for_each_partition(n, [&](const Partition& p) {
      validate(p);
      seen.insert(p.assignment);
    });
    CHECK(static_cast<double>(seen.size()) == bell(n));
  }
  CHECK_THROWS(enumerate_partitions(kEnumerationCap + 1));
}

TEST_CASE("block counts match the Stirling recurrence") {
  for (std::size_t n = 1; n <= 9; ++n) {
    // S(n,k) = k S(n-1,k) + S(n-1,k-1), built independently here
    std::vector<std::vector<double>> S(n + 1, std::vector<double>(n + 1, 0.0));
    S[0][0] = 1.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 1; k <= i; ++k) S[i][k] = k * S[i - 1][k] + S[i - 1][k - 1];
    const auto groups = enumerate_partitions(n);
    REQUIRE(groups.size() == n);
    for (std::size_t k = 1; k <= n; ++k) {
      CHECK(static_cast<double>(groups[k - 1].size()) == S[n][k]);
      CHECK(stirling2(n, k) == S[n][k]);
      for (const auto& p : groups[k - 1]) REQUIRE(p.k() == static_cast<int>(k));
    }
  }
  const auto g6 = enumerate_partitions(6);
  const std::vector<std::size_t> expected{1, 31, 90, 65, 15, 1};
  for (std::size_t k = 0; k < 6; ++k) CHECK(g6[k].size() == expected[k]);
}

TEST_CASE("partition prior equals the sequential urn product and normalizes") {
  for (double m : {0.3, 1.0, 4.5}) {
    for (std::size_t n = 1; n <= 7; ++n) {
      std::vector<double> lps;
      for_each_partition(n, [&](const Partition& p) {
        const double lp = log_partition_prior(p, m);
        REQUIRE(lp == doctest::Approx(urn_sequence_log_prob(p, m)).epsilon(1e-12));
        lps.push_back(lp);
      });
      CHECK(std::exp(log_sum_exp(lps)) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK_THROWS(log_partition_prior(parse_partition("1,2"), 0.0));
}

TEST_CASE("urn draws follow the prior for n = 4") {
  Rng rng(17);
  const std::size_t N = 200000;
  std::map<std::vector<int>, std::size_t> counts;
  for (std::size_t t = 0; t < N; ++t) ++counts[polya_urn_sample(4, 1.0, rng).assignment];
  for_each_partition(4, [&](const Partition& p) {
    const double prob = std::exp(log_partition_prior(p, 1.0));
    const double se = std::sqrt(prob * (1 - prob) / N);
    CHECK(std::abs(counts[p.assignment] / double(N) - prob) < 4.0 * se);
  });
}

TEST_CASE("merging two blocks") {
  const Partition p = parse_partition("1,2,3,2,1");
  const Partition m = merge_clusters(p, 0, 2);
  CHECK(m.to_string() == "1,2,1,2,1");
  CHECK(merge_clusters(p, 2, 1).to_string() == "1,2,2,2,1");
  CHECK_THROWS(merge_clusters(p, 0, 0));
  CHECK_THROWS(merge_clusters(p, 0, 3));
}

TEST_CASE("collapse mass for n = 2 matches direct integration over q") {
  const Partition together = parse_partition("1,1");
  const Partition apart = parse_partition("1,2");
  for (double a : {1.0, 0.5, 2.0, 3.7}) {
    const double same = same_block_probability_quadrature(a);
    CHECK(std::exp(log_collapse_mass(together, a)) == doctest::Approx(same).epsilon(1e-9));
    CHECK(std::exp(log_collapse_mass(apart, a)) == doctest::Approx(1.0 - same).epsilon(1e-9));
  }
  // alpha = 1 closed form: 2 E[q^2] = 2/3
  CHECK(std::exp(log_collapse_mass(together, 1.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("collapse mass sums to one and matches collapsed draws") {
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<double> l;
    for_each_partition(n, [&](const Partition& p) { l.push_back(log_collapse_mass(p, 0.8)); });
    CHECK(std::exp(log_sum_exp(l)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  Rng rng(4);
  const std::size_t N = 100000;
  const std::vector<double> alpha(3, 1.0);
  std::map<std::vector<int>, std::size_t> counts;
  for (std::size_t t = 0; t < N; ++t) {
    const auto lq = log_dirichlet(alpha, rng);
    ++counts[collapse_draw_log(lq, 3, rng).assignment];
  }
  for_each_partition(3, [&](const Partition& p) {
    const double prob = std::exp(log_collapse_mass(p, 1.0));
    const double se = std::sqrt(prob * (1 - prob) / N);
    CHECK(std::abs(counts[p.assignment] / double(N) - prob) < 4.0 * se);
  });
}

TEST_CASE("collapse_draw with a degenerate q gives one block") {
  Rng rng(1);
  const std::vector<double> q{0.0, 1.0, 0.0, 0.0};
  CHECK(collapse_draw(q, 4, rng).k() == 1);
}
