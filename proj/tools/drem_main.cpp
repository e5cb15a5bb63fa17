// Command-line front end: model fits, precision estimation, simulation studies and diagnostics.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "drem/config.hpp"
#include "drem/errors.hpp"
#include "drem/experiments.hpp"
#include "drem/io.hpp"
#include "drem/kernels.hpp"
#include "drem/parallel.hpp"

using namespace dprem;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  bool fast = false;
  std::string data;
  std::vector<std::string> sets;
  std::string simd = "auto";
};

ExperimentConfig build_config(const Common& o, const CLI::App& sub) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  for (const std::string& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (sub.count("--seed")) cfg.seed = o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.data.empty()) cfg.data_path = o.data;
  if (o.fast) cfg.fast = true;
  validate(cfg);
  kernels::select(kernels::parse_backend(o.simd));
  fs::create_directories(cfg.output_dir);
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& stem, const std::string& ext) {
  return (fs::path(cfg.output_dir) / (stem + "_seed" + std::to_string(cfg.seed) + ext)).string();
}

// Every run leaves a config echo that reproduces it.
void echo_config(const ExperimentConfig& cfg, const std::string& stem) {
  const std::string path = out_path(cfg, stem, ".config");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw DataError("cannot write '" + path + "'");
  const std::string text = to_config_text(cfg);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

json base_summary(const ExperimentConfig& cfg, const std::string& command) {
  return json{{"command", command}, {"seed", cfg.seed}, {"config", to_config_text(cfg)},
              {"simd", kernels::active().name}};
}

json vec_json(const arma::vec& v) { return json(std::vector<double>(v.begin(), v.end())); }

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

Dataset load_or_simulate(const ExperimentConfig& cfg, Rng& rng) {
  if (!cfg.data_path.empty()) return read_dataset(cfg.data_path);
  return simulate_dataset(cfg.sim, rng).data;
}

BinaryDataset load_or_simulate_binary(const ExperimentConfig& cfg, Rng& rng) {
  if (!cfg.data_path.empty()) return read_binary_dataset(cfg.data_path);
  return simulate_dataset(cfg.sim, rng, true).binary;
}

json diagnostics_json(const DiagnosticsReport& rep) {
  json params = json::array();
  for (const auto& p : rep.parameters) {
    params.push_back({{"name", p.name},
                      {"mean", p.cumulative_mean.empty() ? json(nullptr) : json(p.cumulative_mean.back())},
                      {"geweke_z", p.geweke.defined ? json(p.geweke.z) : json(nullptr)},
                      {"geweke_defined", p.geweke.defined}});
  }
  json j{{"parameters", params}};
  if (!rep.across_chain_variance.empty()) j["across_chain_variance_final"] = rep.across_chain_variance.back();
  return j;
}

void write_cumulative_means(const std::string& path, const DiagnosticsReport& rep) {
  Table t;
  t.header.push_back("t");
  for (const auto& p : rep.parameters) t.header.push_back(p.name);
  const std::size_t len = rep.parameters.empty() ? 0 : rep.parameters.front().cumulative_mean.size();
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (const auto& p : rep.parameters) row.push_back(format_double(p.cumulative_mean[i]));
    t.add_row(std::move(row));
  }
  write_csv(path, t);
}

// ---- fits ----

template <class Data, class Runner>
json fit_chains(const ExperimentConfig& cfg, const Data& d, double m, const std::string& stem, Runner&& run) {
  ChainConfig cc = chain_config(cfg);
  cc.m = m;
  const auto archives = parallel_map(cfg.chains, cfg.threads, [&](std::size_t c) {
    return run(cc, d, cfg.hyperpriors, stream_seed(cfg.seed, 0, c));
  });
  json chains = json::array();
  for (std::size_t c = 0; c < archives.size(); ++c) {
    const std::string name = c == 0 ? stem : stem + "_chain" + std::to_string(c + 1);
    write_archive(out_path(cfg, name, ".csv"), archives[c]);
    const BetaSummary s = summarize_beta(archives[c]);
    double mean_k = 0.0;
    for (const auto& r : archives[c].records) mean_k += r.k;
    mean_k /= static_cast<double>(archives[c].records.size());
    chains.push_back({{"archive", out_path(cfg, name, ".csv")},
                      {"beta_mean", vec_json(s.mean)},
                      {"beta_sd", vec_json(s.sd)},
                      {"beta_lower90", vec_json(s.lower)},
                      {"beta_upper90", vec_json(s.upper)},
                      {"mean_k", mean_k},
                      {"acceptance_rate", archives[c].acceptance_rate}});
  }
  const DiagnosticsReport rep = diagnose(archives);
  return json{{"chains", chains}, {"diagnostics", diagnostics_json(rep)}};
}

int cmd_fit_linear(const ExperimentConfig& cfg) {
  Rng rng(stream_seed(cfg.seed, 0, 1000));
  const Dataset d = load_or_simulate(cfg, rng);
  const MResolution mr = resolve_m(cfg, d, rng);
  json j = base_summary(cfg, "fit-linear");
  j["n"] = d.n();
  j["p"] = d.p();
  j["m"] = mr.m;
  j["m_source"] = mr.source;
  j.update(fit_chains(cfg, d, mr.m, "fit_linear", [](const ChainConfig& cc, const Dataset& data,
                                                      const Hyperpriors& hp, std::uint64_t s) {
    return run_chain(cc, data, hp, s);
  }));
  echo_config(cfg, "fit_linear");
  write_json(out_path(cfg, "fit_linear", ".json"), j);
  std::cout << "m = " << mr.m << " (" << mr.source << "), beta mean = "
            << j["chains"][0]["beta_mean"].dump() << "\n";
  return 0;
}

int cmd_fit_probit(const ExperimentConfig& cfg) {
  Rng rng(stream_seed(cfg.seed, 0, 1000));
  const BinaryDataset d = load_or_simulate_binary(cfg, rng);
  if (cfg.m_policy != MPolicy::fixed) {
    throw ConfigError("fit-probit supports m_policy=fixed only; estimate m on the latent scale separately");
  }
  ExperimentConfig pc = cfg;
  pc.model = ModelKind::probit;
  json j = base_summary(pc, "fit-probit");
  j["n"] = d.n();
  j["p"] = d.p();
  j["m"] = cfg.m;
  j.update(fit_chains(pc, d, cfg.m, "fit_probit", [](const ChainConfig& cc, const BinaryDataset& data,
                                                     const Hyperpriors& hp, std::uint64_t s) {
    return run_probit_chain(cc, data, hp, s);
  }));
  echo_config(pc, "fit_probit");
  write_json(out_path(cfg, "fit_probit", ".json"), j);
  std::cout << "beta mean = " << j["chains"][0]["beta_mean"].dump() << "\n";
  return 0;
}

// ---- precision estimation ----

int cmd_estimate_m(const ExperimentConfig& cfg) {
  Rng rng(stream_seed(cfg.seed, 0, 1000));
  const Dataset d = load_or_simulate(cfg, rng);
  std::vector<std::size_t> missing;
  const PrecisionCoefficients c = estimate_coefficients(cfg, d, nullptr, rng, &missing);
  const MleResult mle = classify_likelihood_shape(c);
  const MleResult mode = posterior_mode_m(c, cfg.hyperpriors.m_prior_a, cfg.hyperpriors.m_prior_b);
  const double mean = posterior_mean_m(c, cfg.hyperpriors.m_prior_a, cfg.hyperpriors.m_prior_b);

  json log_c = json::array();
  for (double v : c.log_c) log_c.push_back(finite_or_null(v));
  json j = base_summary(cfg, "estimate-m");
  j["n"] = d.n();
  j["c"] = log_c;
  j["c_scale"] = "log";
  j["coefficient_kind"] = c.kind == CoefficientKind::importance_estimated ? "importance_estimated" : "marginal";
  j["mc_se"] = c.mc_se;
  j["missing_levels"] = missing;
  j["m_hat"] = mode.m_hat;
  j["classification"] = to_string(mode.classification);
  j["kappa_hat"] = kappa(mode.m_hat, d.n());
  j["posterior_mean_m"] = mean;
  j["prior"] = {{"a", cfg.hyperpriors.m_prior_a}, {"b", cfg.hyperpriors.m_prior_b}};
  j["mle"] = {{"m_hat", finite_or_null(mle.m_hat)},
              {"classification", to_string(mle.classification)},
              {"curvature", finite_or_null(mle.curvature)}};
  j["grid"] = {{"sign_pattern", mle.sign_pattern},
               {"roots", mle.roots},
               {"posterior_sign_pattern", mode.sign_pattern},
               {"posterior_curvature", finite_or_null(mode.curvature)}};
  echo_config(cfg, "estimate_m");
  write_json(out_path(cfg, "estimate_m", ".json"), j);
  std::cout << "posterior mode m = " << mode.m_hat << ", kappa = " << kappa(mode.m_hat, d.n())
            << ", likelihood shape " << to_string(mle.classification) << "\n";
  return 0;
}

// ---- sampler comparison on one dataset ----

int cmd_compare_samplers(ExperimentConfig cfg) {
  if (cfg.chains < 2) cfg.chains = 20;
  Rng rng(stream_seed(cfg.seed, 0, 1000));
  const Dataset d = load_or_simulate(cfg, rng);
  const KernelTag tags[3] = {KernelTag::drem_row_gibbs, KernelTag::drem_mh, KernelTag::stickbreaking};
  std::vector<Partition> starts;
  for (std::size_t c = 0; c < cfg.chains; ++c) {
    Rng init(stream_seed(cfg.seed, 1, c));
    starts.push_back(polya_urn_sample(d.n(), cfg.m, init));
  }
  const auto traces = parallel_map(3 * cfg.chains, cfg.threads, [&](std::size_t t) {
    const std::size_t kern = t / cfg.chains, c = t % cfg.chains;
    ChainConfig cc = chain_config(cfg);
    cc.kind.tag = tags[kern];
    cc.initial_partition = starts[c];
    const SampleArchive a = run_chain(cc, d, cfg.hyperpriors, stream_seed(cfg.seed, 2 + kern, c));
    return std::make_pair(a.k_trace, a.acceptance_rate);
  });
  Table curves;
  curves.header = {"iteration"};
  std::vector<std::vector<double>> var(3);
  json j = base_summary(cfg, "compare-samplers");
  for (std::size_t kern = 0; kern < 3; ++kern) {
    std::vector<std::vector<double>> ks;
    double acc = 0.0;
    for (std::size_t c = 0; c < cfg.chains; ++c) {
      ks.push_back(traces[kern * cfg.chains + c].first);
      acc += traces[kern * cfg.chains + c].second;
    }
    var[kern] = cumulative_mean_variance(ks);
    curves.header.push_back(std::string(to_string(tags[kern])) + "_variance");
    j["kernels"][to_string(tags[kern])] = {{"final_variance", var[kern].back()},
                                           {"acceptance_rate", acc / static_cast<double>(cfg.chains)}};
  }
  for (std::size_t t = 0; t < var[0].size(); ++t) {
    curves.add_row({std::to_string(t + 1), format_double(var[0][t]), format_double(var[1][t]),
                    format_double(var[2][t])});
  }
  write_csv(out_path(cfg, "compare_samplers", ".csv"), curves);
  echo_config(cfg, "compare_samplers");
  write_json(out_path(cfg, "compare_samplers", ".json"), j);
  std::cout << j["kernels"].dump(2) << "\n";
  return 0;
}

// ---- simulation ----

int cmd_simulate(const ExperimentConfig& cfg) {
  Rng rng(stream_seed(cfg.seed, 0, 1000));
  const bool probit = cfg.model == ModelKind::probit;
  const SimulatedData sd = simulate_dataset(cfg.sim, rng, probit);
  const std::string path = out_path(cfg, "simulated", ".csv");
  write_dataset(path, probit ? sd.binary.y : sd.data.y, sd.data.X);
  json j = base_summary(cfg, "simulate");
  j["data"] = path;
  j["true_partition"] = sd.truth.to_string();
  j["true_k"] = sd.truth.k();
  j["eta"] = vec_json(sd.eta);
  echo_config(cfg, "simulated");
  write_json(out_path(cfg, "simulated", ".json"), j);
  std::cout << path << " (n = " << sd.data.n() << ", k = " << sd.truth.k() << ")\n";
  return 0;
}

// ---- studies ----

int cmd_table2(const ExperimentConfig& cfg) {
  Table2Options o;
  o.seed = cfg.seed;
  o.threads = cfg.threads;
  o.replications = cfg.replications ? cfg.replications : (cfg.fast ? 25 : 100);
  o.coefficients = cfg.coefficients;
  o.theta_draws = cfg.theta_draws;
  o.hyperpriors = cfg.hyperpriors;
  const Table2Result r = run_table2_study(o);
  Table t;
  t.header = {"ab", "ab2", "a", "b", "m_mean", "m_se", "kappa_mean", "kappa_se"};
  json rows = json::array();
  for (const auto& row : r.rows) {
    t.add_row({format_double(row.setting.ab), format_double(row.setting.ab2), format_double(row.prior.a),
               format_double(row.prior.b), format_double(row.m_mean), format_double(row.m_se),
               format_double(row.kappa_mean), format_double(row.kappa_se)});
    rows.push_back({{"ab", row.setting.ab}, {"ab2", row.setting.ab2}, {"m", row.m_mean}, {"m_se", row.m_se},
                    {"kappa", row.kappa_mean}, {"kappa_se", row.kappa_se}});
    std::printf("ab=%g ab^2=%g  m = %.3f (%.3f)  kappa = %.3f (%.3f)\n", row.setting.ab, row.setting.ab2, row.m_mean,
                row.m_se, row.kappa_mean, row.kappa_se);
  }
  write_csv(out_path(cfg, "table2", ".csv"), t);
  json j = base_summary(cfg, "table2");
  j["replications"] = o.replications;
  j["true_m"] = r.true_m;
  j["rows"] = rows;
  echo_config(cfg, "table2");
  write_json(out_path(cfg, "table2", ".json"), j);
  return 0;
}

int cmd_table1(const ExperimentConfig& cfg) {
  Table1Options o;
  o.seed = cfg.seed;
  o.threads = cfg.threads;
  o.iterations = cfg.iterations;
  o.burn_in = cfg.burn_in;
  if (cfg.fast) {
    o.iterations = std::min<std::size_t>(o.iterations, 2000);
    o.burn_in = std::min<std::size_t>(o.burn_in, 500);
  }
  o.kernel = cfg.kernel;
  o.marginalized = cfg.marginalized;
  o.hyperpriors = cfg.hyperpriors;
  if (cfg.table1_include_1000) o.sizes.push_back(1000);
  const auto rows = run_table1_study(o);
  Table t;
  t.header = {"n", "k", "m", "beta_1_mean", "beta_1_sd", "beta_2_mean", "beta_2_sd", "mean_k"};
  for (const auto& r : rows) {
    t.add_row({std::to_string(r.n), std::to_string(r.k), format_double(r.m), format_double(r.beta_mean[0]),
               format_double(r.beta_sd[0]), format_double(r.beta_mean[1]), format_double(r.beta_sd[1]),
               format_double(r.mean_k)});
    std::printf("n=%zu k=%zu m=%.3f  beta = (%.3f (%.3f), %.3f (%.3f))  mean k = %.1f\n", r.n, r.k, r.m,
                r.beta_mean[0], r.beta_sd[0], r.beta_mean[1], r.beta_sd[1], r.mean_k);
  }
  write_csv(out_path(cfg, "table1", ".csv"), t);
  echo_config(cfg, "table1");
  json j = base_summary(cfg, "table1");
  j["table"] = out_path(cfg, "table1", ".csv");
  write_json(out_path(cfg, "table1", ".json"), j);
  return 0;
}

int cmd_fig3(const ExperimentConfig& cfg) {
  Fig3Options o;
  o.seed = cfg.seed;
  o.threads = cfg.threads;
  o.groups = cfg.fig3_groups;
  o.kappa_min = cfg.fig3_kappa_min;
  o.kappa_max_frac = cfg.fig3_kappa_max_frac;
  o.prior_only = cfg.kernel.prior_only;
  o.hyperpriors = cfg.hyperpriors;
  if (cfg.chains >= 2) o.chains = cfg.chains;
  if (cfg.fast) o.iterations = 250;
  const Fig3Result r = run_fig3_study(o);
  Table t;
  t.header = {"iteration"};
  for (const auto& c : r.curves) t.header.push_back(std::string(to_string(c.kernel)) + "_g" + std::to_string(c.groups));
  for (std::size_t i = 0; i < o.iterations; ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (const auto& c : r.curves) row.push_back(format_double(c.variance[i]));
    t.add_row(std::move(row));
  }
  write_csv(out_path(cfg, "fig3", ".csv"), t);
  json j = base_summary(cfg, "fig3");
  j["drem_wins"] = r.drem_wins;
  j["final_ratio"] = r.final_ratio;
  j["groups"] = o.groups;
  echo_config(cfg, "fig3");
  write_json(out_path(cfg, "fig3", ".json"), j);
  std::printf("drem variance <= stickbreaking in %zu of %zu configurations\n", r.drem_wins, o.groups.size());
  return 0;
}

// ---- diagnostics ----

int cmd_diagnose(const ExperimentConfig& cfg, const std::vector<std::string>& archives) {
  if (archives.empty()) throw ConfigError("diagnose needs at least one --archive");
  json j = base_summary(cfg, "diagnose");
  json per = json::array();
  std::vector<std::vector<double>> ks;
  for (std::size_t a = 0; a < archives.size(); ++a) {
    const Table t = read_csv(archives[a]);
    const DiagnosticsReport rep = diagnose_table(t);
    const std::string stem = "diagnose_" + fs::path(archives[a]).stem().string();
    write_cumulative_means(out_path(cfg, stem, ".csv"), rep);
    per.push_back({{"archive", archives[a]}, {"report", diagnostics_json(rep)}});
    for (const auto& p : rep.parameters) {
      if (p.name == "k") {
        std::vector<double> k;
        for (const auto& row : t.rows) k.push_back(std::stod(row.at(1)));
        ks.push_back(std::move(k));
      }
    }
  }
  j["archives"] = per;
  if (ks.size() >= 2) {
    const auto v = cumulative_mean_variance(ks);
    j["across_chain_variance_final"] = v.back();
  }
  write_json(out_path(cfg, "diagnose", ".json"), j);
  std::cout << j["archives"].dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-process random-effects models: fitting, precision estimation and studies"};
  app.require_subcommand(1);
  Common opt;
  std::vector<std::string> archives;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "key=value configuration file");
    sub->add_option("--seed", opt.seed, "master seed (overrides the config)");
    sub->add_option("--out", opt.out, "output directory (overrides the config)");
    sub->add_flag("--fast", opt.fast, "reduced study sizes");
    sub->add_option("--data", opt.data, "delimited data file: response first, then covariates");
    sub->add_option("--set", opt.sets, "override one configuration key (key=value); repeatable");
    sub->add_option("--simd", opt.simd, "kernel backend: auto, scalar or avx2");
  };
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"fit-linear", "fit the linear model and write the sample archive"},
      {"fit-probit", "fit the probit model and write the sample archive"},
      {"estimate-m", "estimate the precision parameter"},
      {"compare-samplers", "across-chain variance of the partition samplers on one dataset"},
      {"simulate", "write a simulated dataset"},
      {"table1", "coefficient recovery study"},
      {"table2", "precision prior-sensitivity study"},
      {"fig3", "across-chain variance study over group counts"},
      {"diagnose", "cumulative means and Geweke statistics for written archives"},
  };
  std::vector<CLI::App*> handles;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    if (std::string(s.name) == "diagnose") sub->add_option("--archive", archives, "archive CSV; repeatable")->required();
    handles.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const ExperimentConfig cfg = build_config(opt, *sub);
    if (name == "fit-linear") return cmd_fit_linear(cfg);
    if (name == "fit-probit") return cmd_fit_probit(cfg);
    if (name == "estimate-m") return cmd_estimate_m(cfg);
    if (name == "compare-samplers") return cmd_compare_samplers(cfg);
    if (name == "simulate") return cmd_simulate(cfg);
    if (name == "table1") return cmd_table1(cfg);
    if (name == "table2") return cmd_table2(cfg);
    if (name == "fig3") return cmd_fig3(cfg);
    if (name == "diagnose") return cmd_diagnose(cfg, archives);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
