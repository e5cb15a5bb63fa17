#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "drem/numerics.hpp"
#include "drem/partition.hpp"
#include "drem/samplers.hpp"

using namespace dprem;

namespace {

double dense_log_density(const arma::vec& r, const Partition& p, double s2, double t2) {
  const arma::mat A = p.incidence();
  const arma::mat V = s2 * arma::eye(p.n(), p.n()) + t2 * A * A.t();
  double val = 0.0, sign = 0.0;
  arma::log_det(val, sign, V);
  return -0.5 * (p.n() * kLog2Pi + val + arma::dot(r, arma::solve(V, r)));
}

// Every multiset of block sizes summing to `total`, in non-increasing order.
void integer_partitions(int total, int max_part, std::vector<int>& cur,
                        const std::function<void(const std::vector<int>&)>& visit) {
  if (total == 0) {
    visit(cur);
    return;
  }
  for (int part = std::min(total, max_part); part >= 1; --part) {
    cur.push_back(part);
    integer_partitions(total - part, part, cur, visit);
    cur.pop_back();
  }
}

// Long-run partition frequencies of a prior-only sweep chain, with batch-means standard errors.
struct Frequencies {
  std::map<std::vector<int>, double> freq;
  std::map<std::vector<int>, double> se;
};

Frequencies run_prior_chain(KernelTag tag, std::size_t n, double m, std::size_t sweeps, std::uint64_t seed) {
  Rng rng(seed);
  ChainState st;
  st.partition = polya_urn_sample(n, m, rng);
  SweepOptions opts{KernelKind{tag, true}, m, false};
  const Hyperpriors hp;
  std::vector<std::vector<int>> states;
  for_each_partition(n, [&](const Partition& p) { states.push_back(p.assignment); });
  std::map<std::vector<int>, std::vector<double>> ind;
  for (const auto& s : states) ind[s].reserve(sweeps);
  for (std::size_t t = 0; t < sweeps; ++t) {
    partition_sweep(st, {}, hp, opts, rng);
    for (auto& [key, v] : ind) v.push_back(key == st.partition.assignment ? 1.0 : 0.0);
  }
  Frequencies f;
  for (auto& [key, v] : ind) {
    const MeanSe ms = batch_mean_se(v, 100);
    f.freq[key] = ms.mean;
    f.se[key] = ms.se;
  }
  return f;
}

}  // namespace

TEST_CASE("kernel names round trip") {
  for (KernelTag t : {KernelTag::drem_row_gibbs, KernelTag::drem_mh, KernelTag::stickbreaking}) {
    CHECK(parse_kernel_tag(to_string(t)) == t);
  }
  CHECK(parse_kernel_tag("neal") == KernelTag::stickbreaking);
  CHECK_THROWS(parse_kernel_tag("gibbs"));
}

TEST_CASE("q draws: normalization and Dirichlet mean") {
  Rng rng(8);
  const Partition p = parse_partition("1,1,1,2,2,3");
  const int N = 200000;
  std::vector<double> q1(N);
  for (int t = 0; t < N; ++t) {
    const auto q = sample_q(p, {}, rng);
    REQUIRE(q.size() == 6);
    double s = 0.0;
    for (double v : q) {
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
      s += v;
    }
    REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
    q1[t] = q[0];
  }
  const MeanSe ms = mean_and_se(q1);
  CHECK(std::abs(ms.mean - 4.0 / 12.0) < 3.0 * ms.se);
  CHECK_THROWS(sample_q(p, std::vector<double>{1, 1, 1, 1, 1, 0}, rng));
}

TEST_CASE("stickbreaking row probabilities") {
  const std::vector<int> slots{3, 2, 0, 0, 0, 0};
  const auto pr = neal_row_probabilities(slots, 2.0);
  REQUIRE(pr.size() == 3);
  CHECK(pr[0] == doctest::Approx(3.0 / 7.0).epsilon(1e-14));
  CHECK(pr[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
  CHECK(pr[2] == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
  CHECK(neal_row_probabilities(slots, 1e-300).back() < 1e-299);
}

TEST_CASE("q substitution turns the multinomial/Dirichlet weights into the stickbreaking ones") {
  // Exhaustive over every size configuration of the remaining n-1 rows, n <= 10
  std::size_t configurations = 0;
  for (int n = 2; n <= 10; ++n) {
    std::vector<int> cur;
    integer_partitions(n - 1, n - 1, cur, [&](const std::vector<int>& sizes) {
      for (double m : {0.37, 1.0, 6.0}) {
        std::vector<int> slots(n, 0);
        std::vector<double> q(n, 1.0);
        for (std::size_t j = 0; j < sizes.size(); ++j) {
          slots[j] = sizes[j];
          q[j] = sizes[j] + 1.0;
        }
        const auto drem = drem_row_probabilities(slots, q, m);
        const auto neal = neal_row_probabilities(slots, m);
        double total = 0.0, new_mass = 0.0;
        for (int j = 0; j < n; ++j) {
          REQUIRE(drem[j] >= 0.0);
          total += drem[j];
          if (slots[j] == 0) new_mass += drem[j];
        }
        REQUIRE(std::abs(total - 1.0) < 1e-12);
        for (std::size_t j = 0; j < sizes.size(); ++j) REQUIRE(std::abs(drem[j] - neal[j]) < 1e-12);
        REQUIRE(std::abs(new_mass - neal.back()) < 1e-12);
        // stickbreaking closed form n_c / (n - 1 + m)
        for (std::size_t j = 0; j < sizes.size(); ++j) REQUIRE(std::abs(neal[j] - sizes[j] / (n - 1 + m)) < 1e-12);
      }
      ++configurations;
    });
  }
  CHECK(configurations == 1 + 2 + 3 + 5 + 7 + 11 + 15 + 22 + 30);
}

TEST_CASE("tiny m never opens a cluster") {
  Rng rng(6);
  ChainState st;
  st.partition = parse_partition("1,1,2,2,2");
  st.log_q = sample_log_q(st.partition, {}, rng);
  for (int t = 0; t < 2000; ++t) {
    CHECK(drem_row_update(t % 5, st, 1e-300, nullptr, rng).k() <= 2);
    CHECK(neal_row_update(t % 5, st, 1e-300, nullptr, rng).k() <= 2);
  }
  st.log_q.clear();
  CHECK_THROWS(drem_row_update(0, st, 1.0, nullptr, rng));
}

TEST_CASE("likelihood-weighted row updates match full recomputation of the candidates") {
  Rng data_rng(41);
  Dataset d;
  d.X = arma::mat(5, 1, arma::fill::ones);
  d.y = arma::vec{0.3, 2.5, -1.0, 2.2, 0.1};
  ChainState st;
  st.partition = parse_partition("1,1,2,3,2");
  st.theta.beta = arma::vec{0.2};
  st.theta.sigma2 = 0.7;
  st.theta.tau2 = 1.9;
  st.log_q = sample_log_q(st.partition, {}, data_rng);
  const double m = 1.3;
  const std::size_t row = 1;
  const arma::vec r = d.y - d.X * st.theta.beta;

  // candidates: join slot 0 (with row 0), slot 1, slot 2, or a new block
  std::vector<std::vector<int>> raw{{0, 0, 1, 2, 1}, {0, 1, 1, 2, 1}, {0, 2, 1, 2, 1}, {0, 3, 1, 2, 1}};
  std::vector<Partition> cand;
  for (auto& v : raw) cand.push_back(canonicalize(v));
  const std::vector<double> others{1, 2, 1};  // block sizes without the row
  const std::size_t k_minus = 3, n = 5;

  for (bool drem : {true, false}) {
    std::vector<double> lw(4);
    double unocc = 0.0;
    for (std::size_t j = 3; j < n; ++j) unocc += std::exp(st.log_q[j]);
    for (int c = 0; c < 3; ++c) {
      lw[c] = drem ? std::log(others[c] / (others[c] + 1.0)) + st.log_q[c] : std::log(others[c]);
      lw[c] += dense_log_density(r, cand[c], st.theta.sigma2, st.theta.tau2);
    }
    lw[3] = drem ? std::log(m * unocc / double(n - k_minus)) : std::log(m);
    lw[3] += dense_log_density(r, cand[3], st.theta.sigma2, st.theta.tau2);
    const double norm = log_sum_exp(lw);

    Rng rng(drem ? 1 : 2);
    const int N = 200000;
    std::vector<int> counts(4, 0);
    for (int t = 0; t < N; ++t) {
      const Partition out = drem ? drem_row_update(row, st, m, &d, rng) : neal_row_update(row, st, m, &d, rng);
      bool found = false;
      for (int c = 0; c < 4; ++c) {
        if (out == cand[c]) {
          ++counts[c];
          found = true;
        }
      }
      REQUIRE(found);
    }
    for (int c = 0; c < 4; ++c) {
      const double prob = std::exp(lw[c] - norm);
      const double se = std::sqrt(prob * (1 - prob) / N);
      CHECK(std::abs(counts[c] / double(N) - prob) < 4.0 * se + 1e-12);
    }
  }
}

TEST_CASE("prior-only sweeps leave the partition prior invariant") {
  const double m = 1.0;
  for (KernelTag tag : {KernelTag::drem_row_gibbs, KernelTag::stickbreaking, KernelTag::drem_mh}) {
    const std::size_t n = tag == KernelTag::drem_mh ? 3 : 4;
    const Frequencies f = run_prior_chain(tag, n, m, 200000, 10 + static_cast<int>(tag));
    for (const auto& [key, freq] : f.freq) {
      const double prob = std::exp(log_partition_prior(canonicalize(key), m));
      CHECK_MESSAGE(std::abs(freq - prob) < 4.0 * f.se.at(key) + 1e-3, to_string(tag), " ", canonicalize(key).to_string());
    }
  }
}

TEST_CASE("MH candidate equal to the current state is accepted") {
  // a q concentrated on one coordinate always proposes the single block
  Rng rng(3);
  ChainState st;
  st.partition = parse_partition("1,1,1");
  st.log_q = {0.0, -1e6, -1e6};
  for (int t = 0; t < 100; ++t) {
    bool acc = false;
    CHECK(drem_mh_step(st, 0.8, nullptr, rng, &acc) == st.partition);
    CHECK(acc);
  }
}

TEST_CASE("running-mean variance across chains") {
  const auto v = cumulative_mean_variance({{1.0, 3.0}, {3.0, 1.0}});
  REQUIRE(v.size() == 2);
  CHECK(v[0] == doctest::Approx(2.0));
  CHECK(v[1] == doctest::Approx(0.0));
  const auto z = cumulative_mean_variance({{2, 2, 2}, {2, 2, 2}, {2, 2, 2}});
  for (double x : z) CHECK(x == 0.0);
  CHECK_THROWS(cumulative_mean_variance({{1.0}}));
  CHECK_THROWS(cumulative_mean_variance({{1.0}, {1.0, 2.0}}));
}

TEST_CASE("chains are reproducible per seed and keep only post burn-in records") {
  Rng data_rng(5);
  Dataset d;
  d.X.set_size(30, 2);
  d.y.set_size(30);
  for (std::size_t i = 0; i < 30; ++i) {
    d.X(i, 0) = 1.0;
    d.X(i, 1) = data_rng.normal();
    d.y[i] = 1.0 + 2.0 * d.X(i, 1) + (i % 3) * 1.5 + data_rng.normal();
  }
  for (KernelTag tag : {KernelTag::drem_row_gibbs, KernelTag::drem_mh, KernelTag::stickbreaking}) {
    ChainConfig cfg;
    cfg.iterations = 120;
    cfg.burn_in = 20;
    cfg.kind.tag = tag;
    cfg.shuffle_rows = tag == KernelTag::stickbreaking;
    const SampleArchive a = run_chain(cfg, d, Hyperpriors{}, 99);
    const SampleArchive b = run_chain(cfg, d, Hyperpriors{}, 99);
    REQUIRE(a.records.size() == 100);
    CHECK(a.k_trace.size() == 120);
    CHECK(a.records.front().iteration == 21);
    for (std::size_t t = 0; t < a.records.size(); ++t) {
      REQUIRE(arma::approx_equal(a.records[t].beta, b.records[t].beta, "absdiff", 0.0));
      REQUIRE(a.records[t].sizes == b.records[t].sizes);
      REQUIRE(a.records[t].sigma2 == b.records[t].sigma2);
    }
    // Gibbs sweeps always count as accepted; the independence proposal may be rejected throughout
    if (tag == KernelTag::drem_mh) {
      CHECK(a.acceptance_rate >= 0.0);
      CHECK(a.acceptance_rate <= 1.0);
    } else {
      CHECK(a.acceptance_rate == 1.0);
    }
  }
  ChainConfig bad;
  bad.iterations = 10;
  bad.burn_in = 10;
  CHECK_THROWS(run_chain(bad, d, Hyperpriors{}, 1));
}
