#pragma once

#include <span>
#include <string>
#include <vector>

namespace dprem {

struct GewekeResult {
  double z = 0.0;
  bool defined = false;  // false when both windows have zero variance
  double mean_first = 0.0, mean_last = 0.0;
  double se_first = 0.0, se_last = 0.0;
};

/// Geweke z comparing the first `first` fraction with the last `last` fraction of a trace.
/// Window variances come from non-overlapping batch means (min(20, len/5) batches).
/// Throws std::invalid_argument when either window holds fewer than 10 values.
GewekeResult geweke(std::span<const double> trace, double first = 0.1, double last = 0.5);

std::vector<double> cumulative_mean(std::span<const double> trace);

struct ParameterDiagnostics {
  std::string name;
  std::vector<double> cumulative_mean;
  GewekeResult geweke;
};

struct DiagnosticsReport {
  std::vector<ParameterDiagnostics> parameters;
  std::vector<double> across_chain_variance;  // of the running mean of k, multi-chain runs only
};

}  // namespace dprem
