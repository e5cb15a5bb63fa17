#include "drem/partition.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "drem/numerics.hpp"

namespace dprem {

arma::mat Partition::incidence() const {
  arma::mat A(n(), sizes.size(), arma::fill::zeros);
  for (std::size_t i = 0; i < n(); ++i) A(i, assignment[i]) = 1.0;
  return A;
}

std::string Partition::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(assignment[i] + 1);
  }
  return out;
}

Partition canonicalize(std::span<const int> raw) {
  if (raw.empty()) throw std::invalid_argument("canonicalize: empty label vector");
  Partition p;
  p.assignment.resize(raw.size());
  std::unordered_map<int, int> relabel;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = relabel.try_emplace(raw[i], static_cast<int>(p.sizes.size()));
    if (inserted) p.sizes.push_back(0);
    p.assignment[i] = it->second;
    ++p.sizes[it->second];
  }
  return p;
}

Partition parse_partition(std::string_view text) {
  std::vector<int> labels;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    while (!tok.empty() && (tok.front() == ' ' || tok.front() == '"')) tok.remove_prefix(1);
    while (!tok.empty() && (tok.back() == ' ' || tok.back() == '"' || tok.back() == '\r')) tok.remove_suffix(1);
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw std::invalid_argument("parse_partition: bad label '" + std::string(tok) + "'");
    }
    labels.push_back(v);
    pos = end + 1;
  }
  return canonicalize(labels);
}

void validate(const Partition& p) {
  if (p.assignment.empty()) throw std::invalid_argument("partition: empty");
  std::vector<int> counts;
  int next = 0;
  for (int a : p.assignment) {
    if (a < 0 || a > next) throw std::invalid_argument("partition: labels are not in first-occurrence order");
    if (a == next) {
      ++next;
      counts.push_back(0);
    }
    ++counts[a];
  }
  if (counts != p.sizes) throw std::invalid_argument("partition: sizes disagree with assignment");
}

double log_partition_prior(std::span<const int> sizes, double m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("log_partition_prior: m must be positive and finite");
  double n = 0.0;
  double s = 0.0;
  for (int nj : sizes) {
    n += nj;
    s += log_gamma(nj);
  }
  return log_gamma(m) - log_gamma(m + n) + static_cast<double>(sizes.size()) * std::log(m) + s;
}

double log_partition_prior(const Partition& p, double m) { return log_partition_prior(p.sizes, m); }

Partition polya_urn_sample(std::size_t n, double m, Rng& rng) {
  if (n == 0) throw std::invalid_argument("polya_urn_sample: n must be positive");
  if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("polya_urn_sample: m must be positive and finite");
  Partition p;
  p.assignment.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    // existing cluster j with prob n_j/(i+m), new with m/(i+m)
    const double u = rng.uniform() * (static_cast<double>(i) + m);
    double acc = 0.0;
    int chosen = p.k();
    for (int j = 0; j < p.k(); ++j) {
      acc += p.sizes[j];
      if (u < acc) {
        chosen = j;
        break;
      }
    }
    if (chosen == p.k()) p.sizes.push_back(0);
    ++p.sizes[chosen];
    p.assignment.push_back(chosen);
  }
  return p;
}

void for_each_partition(std::size_t n, const std::function<void(const Partition&)>& visit) {
  if (n == 0) throw std::invalid_argument("for_each_partition: n must be positive");
  if (n > kEnumerationCap) {
    throw std::invalid_argument("enumeration refused: n = " + std::to_string(n) + " exceeds the cap of " +
                                std::to_string(kEnumerationCap));
  }
  // Restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]).
  Partition p;
  p.assignment.assign(n, 0);
  std::vector<int> prefix_max(n, 0);
  while (true) {
    p.sizes.assign(static_cast<std::size_t>(prefix_max[n - 1] + 1), 0);
    for (int a : p.assignment) ++p.sizes[a];
    visit(p);
    std::size_t i = n - 1;
    while (i > 0 && p.assignment[i] > prefix_max[i - 1]) --i;
    if (i == 0) return;
    ++p.assignment[i];
    prefix_max[i] = std::max(prefix_max[i - 1], p.assignment[i]);
    for (std::size_t t = i + 1; t < n; ++t) {
      p.assignment[t] = 0;
      prefix_max[t] = prefix_max[i];
    }
  }
}

std::vector<std::vector<Partition>> enumerate_partitions(std::size_t n) {
  std::vector<std::vector<Partition>> groups(n);
  for_each_partition(n, [&](const Partition& p) { groups[p.k() - 1].push_back(p); });
  return groups;
}

double stirling2(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  std::vector<double> row(k + 1, 0.0);
  row[0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, k); j >= 1; --j) row[j] = static_cast<double>(j) * row[j] + row[j - 1];
    row[0] = 0.0;
  }
  return row[k];
}

Partition merge_clusters(const Partition& p, int j1, int j2) {
  if (j1 == j2 || j1 < 0 || j2 < 0 || j1 >= p.k() || j2 >= p.k()) {
    throw std::invalid_argument("merge_clusters: need two distinct occupied labels");
  }
  std::vector<int> raw = p.assignment;
  for (int& a : raw) {
    if (a == j2) a = j1;
  }
  return canonicalize(raw);
}

namespace {

Partition collapse_from_cdf(std::span<const double> w, double total, std::size_t n, Rng& rng) {
  std::vector<double> cdf(w.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    acc += w[j];
    cdf[j] = acc;
  }
  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    raw[i] = static_cast<int>(it - cdf.begin());
  }
  return canonicalize(raw);
}

}  // namespace

Partition collapse_draw(std::span<const double> q, std::size_t n, Rng& rng) {
  if (q.empty() || n == 0) throw std::invalid_argument("collapse_draw: empty q or n = 0");
  double total = 0.0;
  for (double x : q) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("collapse_draw: q has a negative or non-finite entry");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-8) throw std::invalid_argument("collapse_draw: q does not sum to 1");
  return collapse_from_cdf(q, total, n, rng);
}

Partition collapse_draw_log(std::span<const double> log_q, std::size_t n, Rng& rng) {
  if (log_q.empty() || n == 0) throw std::invalid_argument("collapse_draw_log: empty q or n = 0");
  const double mx = *std::max_element(log_q.begin(), log_q.end());
  if (!std::isfinite(mx)) throw std::invalid_argument("collapse_draw_log: q has no finite entry");
  std::vector<double> w(log_q.size());
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    w[j] = std::exp(log_q[j] - mx);
    total += w[j];
  }
  return collapse_from_cdf(w, total, n, rng);
}

double log_collapse_mass(const Partition& p, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("log_collapse_mass: alpha must be positive");
  const double n = static_cast<double>(p.n());
  const double k = static_cast<double>(p.k());
  // ordered choice of k distinct coordinates out of n, times the Dirichlet moment
  double lp = log_gamma(n + 1.0) - log_gamma(n - k + 1.0) + log_gamma(n * alpha) - log_gamma(n + n * alpha);
  for (int nj : p.sizes) lp += log_rising(alpha, nj);
  return lp;
}

}  // namespace dprem
