#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "drem/model_types.hpp"
#include "drem/samplers.hpp"

namespace dprem {

enum class ModelKind { linear, probit };
enum class MPolicy { fixed, posterior_mode, profile_mle };

/// Ground truth for simulated data. The first design column is an intercept when
/// `intercept` is set; the remaining columns are standard normal.
struct SimulationSpec {
  std::size_t n = 100;
  std::size_t p = 2;
  bool intercept = true;
  std::vector<double> true_beta{1.0, 2.0};
  double true_sigma2 = 1.0;
  double true_tau2 = 4.0;
  std::size_t k_true = 20;  // balanced groups; 0 draws the partition from the urn with urn_m
  double urn_m = 1.0;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::size_t chains = 1;
  std::size_t iterations = 5000;
  std::size_t burn_in = 2000;
  std::size_t threads = 0;  // 0: hardware concurrency
  Hyperpriors hyperpriors;
  KernelKind kernel;
  ModelKind model = ModelKind::linear;
  std::string output_dir = ".";
  std::string data_path;
  MPolicy m_policy = MPolicy::fixed;
  double m = 1.0;
  bool marginalized = false;
  bool shuffle_rows = false;
  bool sample_sigma2 = true;  // probit runs override to false unless set explicitly
  bool sample_sigma2_set = false;
  SimulationSpec sim;
  // study controls
  std::size_t replications = 0;  // 0: the study's default
  bool fast = false;
  std::size_t is_draws = 10000;
  std::string coefficients = "profile";  // profile | marginal (Table 2 study)
  std::size_t theta_draws = 200;
  std::vector<std::size_t> fig3_groups{1, 5, 25, 100};
  double fig3_kappa_min = 1.5;
  double fig3_kappa_max_frac = 0.9;
  bool table1_include_1000 = false;
};

/// Parses the flat key=value format ('#' starts a comment). Unknown keys and malformed
/// values raise ConfigError with the line number.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);
/// Applies a single key=value assignment.
void apply_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
/// Serializes every key; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

ChainConfig chain_config(const ExperimentConfig& cfg);

const char* to_string(ModelKind m);
const char* to_string(MPolicy m);

}  // namespace dprem
