#include "drem/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "drem/errors.hpp"

namespace dprem {

const char* to_string(ModelKind m) { return m == ModelKind::linear ? "linear" : "probit"; }

const char* to_string(MPolicy m) {
  switch (m) {
    case MPolicy::fixed:
      return "fixed";
    case MPolicy::posterior_mode:
      return "posterior_mode";
    case MPolicy::profile_mle:
      return "profile_mle";
  }
  return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad(std::string_view key, std::string_view value, const char* what) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + ": " + what);
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) bad(key, v, "expected a number");
  return x;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  v = trim(v);
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad(key, v, "expected a non-negative integer");
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(key, v, "expected true or false");
}

template <class F>
auto to_list(std::string_view v, F&& conv) {
  std::vector<decltype(conv(std::string_view{}))> out;
  v = trim(v);
  if (v.empty()) return out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    std::size_t end = v.find(',', pos);
    if (end == std::string_view::npos) end = v.size();
    out.push_back(conv(v.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

}  // namespace

void apply_config_value(ExperimentConfig& c, std::string_view key, std::string_view raw) {
  const std::string_view v = trim(raw);
  auto d = [&](std::string_view s) { return to_double(key, s); };
  auto u = [&](std::string_view s) { return static_cast<std::size_t>(to_u64(key, s)); };
  Hyperpriors& hp = c.hyperpriors;
  SimulationSpec& s = c.sim;
  if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "chains") c.chains = u(v);
  else if (key == "iterations") c.iterations = u(v);
  else if (key == "burn_in") c.burn_in = u(v);
  else if (key == "threads") c.threads = u(v);
  else if (key == "a1") hp.a1 = d(v);
  else if (key == "b1") hp.b1 = d(v);
  else if (key == "a2") hp.a2 = d(v);
  else if (key == "b2") hp.b2 = d(v);
  else if (key == "m_prior_a") hp.m_prior_a = d(v);
  else if (key == "m_prior_b") hp.m_prior_b = d(v);
  else if (key == "alpha") hp.alpha = d(v);
  else if (key == "r") hp.r = to_list(v, d);
  else if (key == "kernel") c.kernel.tag = parse_kernel_tag(v);
  else if (key == "prior_only") c.kernel.prior_only = to_bool(key, v);
  else if (key == "model") {
    if (v == "linear") c.model = ModelKind::linear;
    else if (v == "probit") c.model = ModelKind::probit;
    else bad(key, v, "expected linear or probit");
  } else if (key == "output_dir") c.output_dir = std::string(v);
  else if (key == "data") c.data_path = std::string(v);
  else if (key == "m_policy") {
    if (v == "fixed") c.m_policy = MPolicy::fixed;
    else if (v == "posterior_mode") c.m_policy = MPolicy::posterior_mode;
    else if (v == "profile_mle") c.m_policy = MPolicy::profile_mle;
    else bad(key, v, "expected fixed, posterior_mode or profile_mle");
  } else if (key == "m") c.m = d(v);
  else if (key == "marginalized") c.marginalized = to_bool(key, v);
  else if (key == "shuffle_rows") c.shuffle_rows = to_bool(key, v);
  else if (key == "sample_sigma2") {
    c.sample_sigma2 = to_bool(key, v);
    c.sample_sigma2_set = true;
  } else if (key == "sim_n") s.n = u(v);
  else if (key == "sim_p") s.p = u(v);
  else if (key == "sim_intercept") s.intercept = to_bool(key, v);
  else if (key == "sim_beta") s.true_beta = to_list(v, d);
  else if (key == "sim_sigma2") s.true_sigma2 = d(v);
  else if (key == "sim_tau2") s.true_tau2 = d(v);
  else if (key == "sim_k") s.k_true = u(v);
  else if (key == "sim_m") s.urn_m = d(v);
  else if (key == "replications") c.replications = u(v);
  else if (key == "fast") c.fast = to_bool(key, v);
  else if (key == "is_draws") c.is_draws = u(v);
  else if (key == "coefficients") {
    if (v != "profile" && v != "marginal") bad(key, v, "expected profile or marginal");
    c.coefficients = std::string(v);
  } else if (key == "theta_draws") c.theta_draws = u(v);
  else if (key == "fig3_groups") c.fig3_groups = to_list(v, u);
  else if (key == "fig3_kappa_min") c.fig3_kappa_min = d(v);
  else if (key == "fig3_kappa_max_frac") c.fig3_kappa_max_frac = d(v);
  else if (key == "table1_include_1000") c.table1_include_1000 = to_bool(key, v);
  else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    try {
      apply_config_value(c, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& c) {
  const Hyperpriors& hp = c.hyperpriors;
  const SimulationSpec& s = c.sim;
  std::ostringstream os;
  auto b = [](bool x) { return x ? "true" : "false"; };
  os << "seed=" << c.seed << "\n"
     << "chains=" << c.chains << "\n"
     << "iterations=" << c.iterations << "\n"
     << "burn_in=" << c.burn_in << "\n"
     << "threads=" << c.threads << "\n"
     << "a1=" << fmt(hp.a1) << "\n"
     << "b1=" << fmt(hp.b1) << "\n"
     << "a2=" << fmt(hp.a2) << "\n"
     << "b2=" << fmt(hp.b2) << "\n"
     << "m_prior_a=" << fmt(hp.m_prior_a) << "\n"
     << "m_prior_b=" << fmt(hp.m_prior_b) << "\n"
     << "alpha=" << fmt(hp.alpha) << "\n"
     << "r=" << join(hp.r) << "\n"
     << "kernel=" << to_string(c.kernel.tag) << "\n"
     << "prior_only=" << b(c.kernel.prior_only) << "\n"
     << "model=" << to_string(c.model) << "\n"
     << "output_dir=" << c.output_dir << "\n"
     << "data=" << c.data_path << "\n"
     << "m_policy=" << to_string(c.m_policy) << "\n"
     << "m=" << fmt(c.m) << "\n"
     << "marginalized=" << b(c.marginalized) << "\n"
     << "shuffle_rows=" << b(c.shuffle_rows) << "\n";
  if (c.sample_sigma2_set) os << "sample_sigma2=" << b(c.sample_sigma2) << "\n";
  os << "sim_n=" << s.n << "\n"
     << "sim_p=" << s.p << "\n"
     << "sim_intercept=" << b(s.intercept) << "\n"
     << "sim_beta=" << join(s.true_beta) << "\n"
     << "sim_sigma2=" << fmt(s.true_sigma2) << "\n"
     << "sim_tau2=" << fmt(s.true_tau2) << "\n"
     << "sim_k=" << s.k_true << "\n"
     << "sim_m=" << fmt(s.urn_m) << "\n"
     << "replications=" << c.replications << "\n"
     << "fast=" << b(c.fast) << "\n"
     << "is_draws=" << c.is_draws << "\n"
     << "coefficients=" << c.coefficients << "\n"
     << "theta_draws=" << c.theta_draws << "\n"
     << "fig3_groups=" << join(c.fig3_groups) << "\n"
     << "fig3_kappa_min=" << fmt(c.fig3_kappa_min) << "\n"
     << "fig3_kappa_max_frac=" << fmt(c.fig3_kappa_max_frac) << "\n"
     << "table1_include_1000=" << b(c.table1_include_1000) << "\n";
  return os.str();
}

void validate(const ExperimentConfig& c) {
  if (c.chains == 0) throw ConfigError("chains must be at least 1");
  if (c.iterations == 0) throw ConfigError("iterations must be positive");
  if (c.burn_in >= c.iterations) throw ConfigError("burn_in must be smaller than iterations");
  if (c.m_policy == MPolicy::fixed && !(c.m > 0.0)) throw ConfigError("fixed m must be positive");
  const SimulationSpec& s = c.sim;
  if (s.n == 0 || s.p == 0) throw ConfigError("simulation needs n >= 1 and p >= 1");
  if (s.true_beta.size() != s.p) throw ConfigError("sim_beta must have sim_p entries");
  if (!(s.true_sigma2 > 0.0) || !(s.true_tau2 >= 0.0)) throw ConfigError("simulation variances must be positive");
  if (s.k_true > s.n) throw ConfigError("sim_k cannot exceed sim_n");
  if (s.k_true == 0 && !(s.urn_m > 0.0)) throw ConfigError("sim_m must be positive when sim_k = 0");
  validate(c.hyperpriors, c.hyperpriors.r.empty() ? 0 : c.hyperpriors.r.size());
}

ChainConfig chain_config(const ExperimentConfig& c) {
  ChainConfig cc;
  cc.iterations = c.iterations;
  cc.burn_in = c.burn_in;
  cc.kind = c.kernel;
  cc.m = c.m;
  cc.marginalized = c.marginalized;
  cc.shuffle_rows = c.shuffle_rows;
  cc.sample_sigma2 = c.sample_sigma2_set ? c.sample_sigma2 : c.model == ModelKind::linear;
  return cc;
}

}  // namespace dprem
