#pragma once

#include <armadillo>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drem/rng.hpp"

namespace dprem {

/// Canonical set partition of n observations. Labels are 0-based internally and
/// appear in order of first occurrence; text serialization is 1-based.
struct Partition {
  std::vector<int> assignment;
  std::vector<int> sizes;

  std::size_t n() const { return assignment.size(); }
  int k() const { return static_cast<int>(sizes.size()); }
  /// Dense n x k incidence matrix (row i has a single 1 in column assignment[i]). For tests.
  arma::mat incidence() const;
  /// "1,1,2,2,3,2"
  std::string to_string() const;

  bool operator==(const Partition&) const = default;
};

inline constexpr std::size_t kEnumerationCap = 12;

/// Relabels by first occurrence. Throws std::invalid_argument on empty input.
Partition canonicalize(std::span<const int> raw);
/// Parses a comma-separated label list (any integer labels).
Partition parse_partition(std::string_view text);
/// Checks the canonical-form invariants; throws std::invalid_argument on violation.
void validate(const Partition& p);

/// log[Gamma(m)/Gamma(m+n) m^k prod Gamma(n_j)].
double log_partition_prior(const Partition& p, double m);
double log_partition_prior(std::span<const int> sizes, double m);

Partition polya_urn_sample(std::size_t n, double m, Rng& rng);

/// Visits every set partition of {0..n-1} once, in restricted-growth-string order.
void for_each_partition(std::size_t n, const std::function<void(const Partition&)>& visit);
/// All set partitions grouped by block count: result[k-1] holds the partitions with k blocks.
std::vector<std::vector<Partition>> enumerate_partitions(std::size_t n);
/// Stirling number of the second kind (exact for the enumeration range, double beyond).
double stirling2(std::size_t n, std::size_t k);

/// Joins blocks j1 and j2 (0-based labels) and re-canonicalizes.
Partition merge_clusters(const Partition& p, int j1, int j2);

/// n independent categorical rows from q, empty columns dropped, canonicalized.
Partition collapse_draw(std::span<const double> q, std::size_t n, Rng& rng);
/// Same, with q given on the log scale.
Partition collapse_draw_log(std::span<const double> log_q, std::size_t n, Rng& rng);
/// Probability that collapse_draw produces p when q ~ Dirichlet(alpha,...,alpha) over
/// n coordinates is integrated out.
double log_collapse_mass(const Partition& p, double alpha);

}  // namespace dprem
