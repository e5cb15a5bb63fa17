#include "drem/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "drem/errors.hpp"
#include "drem/linear_model.hpp"
#include "drem/numerics.hpp"
#include "drem/parallel.hpp"

namespace dprem {

SimulatedData simulate_dataset(const SimulationSpec& spec, Rng& rng, bool probit) {
  if (spec.n == 0 || spec.p == 0) throw ConfigError("simulation needs n >= 1 and p >= 1");
  if (spec.true_beta.size() != spec.p) throw ConfigError("true beta must have p entries");
  if (!(spec.true_sigma2 > 0.0) || !(spec.true_tau2 >= 0.0)) throw ConfigError("simulation variances must be positive");
  if (spec.k_true > spec.n) throw ConfigError("k_true cannot exceed n");
  SimulatedData out;
  arma::mat X(spec.n, spec.p);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.p; ++j) X(i, j) = (j == 0 && spec.intercept) ? 1.0 : rng.normal();
  }
  if (spec.k_true > 0) {
    std::vector<int> raw(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) raw[i] = static_cast<int>(i * spec.k_true / spec.n);
    out.truth = canonicalize(raw);
  } else {
    out.truth = polya_urn_sample(spec.n, spec.urn_m, rng);
  }
  out.eta.set_size(out.truth.k());
  for (double& e : out.eta) e = spec.true_tau2 > 0.0 ? rng.normal(0.0, std::sqrt(spec.true_tau2)) : 0.0;
  const arma::vec beta(spec.true_beta);
  arma::vec y = X * beta;
  const double sd = std::sqrt(spec.true_sigma2);
  for (std::size_t i = 0; i < spec.n; ++i) y[i] += out.eta[out.truth.assignment[i]] + rng.normal(0.0, sd);
  if (probit) {
    out.binary.X = X;
    out.binary.y.set_size(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) out.binary.y[i] = y[i] > 0.0 ? 1.0 : 0.0;
  }
  out.data = Dataset{std::move(y), std::move(X)};
  return out;
}

Table2Result run_table2_study(const Table2Options& o) {
  if (o.replications < 2) throw ConfigError("the prior-sensitivity study needs at least two replications");
  if (o.coefficients != "profile" && o.coefficients != "marginal") throw ConfigError("coefficients must be profile or marginal");
  Table2Result res;
  res.true_m = solve_m_for_kappa(o.kappa, o.n);
  SimulationSpec spec;
  spec.n = o.n;
  spec.p = o.beta.size();
  spec.true_beta = o.beta;
  spec.true_sigma2 = o.sigma2;
  spec.true_tau2 = o.tau2;
  spec.k_true = 0;
  spec.urn_m = res.true_m;

  const auto per_rep = parallel_map(o.replications, o.threads, [&](std::size_t r) {
    Rng rng(stream_seed(o.seed, r));
    const SimulatedData sim = simulate_dataset(spec, rng);
    PrecisionCoefficients c;
    if (o.coefficients == "profile") {
      ModelParams th;
      th.beta = arma::vec(o.beta);
      th.sigma2 = o.sigma2;
      th.tau2 = o.tau2;
      c = exhaustive_precision_coefficients(sim.data, th);
    } else {
      c = marginal_exhaustive_coefficients(sim.data, o.hyperpriors, o.theta_draws, rng);
    }
    std::vector<double> m_hat;
    for (const Table2Setting& s : o.settings) {
      const GammaPrior g = gamma_prior_from_moments(s.ab, s.ab2);
      m_hat.push_back(posterior_mean_m(c, g.a, g.b));
    }
    return m_hat;
  });

  for (std::size_t s = 0; s < o.settings.size(); ++s) {
    std::vector<double> ms(o.replications), ks(o.replications);
    for (std::size_t r = 0; r < o.replications; ++r) {
      ms[r] = per_rep[r][s];
      ks[r] = kappa(ms[r], o.n);
    }
    const MeanSe m = mean_and_se(ms);
    const MeanSe k = mean_and_se(ks);
    Table2Row row;
    row.setting = o.settings[s];
    row.prior = gamma_prior_from_moments(o.settings[s].ab, o.settings[s].ab2);
    row.m_mean = m.mean;
    row.m_se = m.se;
    row.kappa_mean = k.mean;
    row.kappa_se = k.se;
    res.rows.push_back(row);
  }
  return res;
}

BetaSummary summarize_beta(const SampleArchive& a, double level) {
  if (a.records.empty()) throw NumericalError("archive holds no retained draws");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("interval level must lie in (0,1)");
  const std::size_t p = a.records.front().beta.n_elem;
  arma::mat draws(a.records.size(), p);
  for (std::size_t t = 0; t < a.records.size(); ++t) draws.row(t) = a.records[t].beta.t();
  BetaSummary s;
  s.mean = arma::mean(draws, 0).t();
  s.sd = arma::stddev(draws, 0, 0).t();
  const arma::vec probs{(1.0 - level) / 2.0, (1.0 + level) / 2.0};
  s.lower.set_size(p);
  s.upper.set_size(p);
  for (std::size_t j = 0; j < p; ++j) {
    const arma::vec q = arma::quantile(draws.col(j), probs);
    s.lower[j] = q[0];
    s.upper[j] = q[1];
  }
  return s;
}

std::vector<Table1Row> run_table1_study(const Table1Options& o) {
  return parallel_map(o.sizes.size(), o.threads, [&](std::size_t idx) {
    const std::size_t n = o.sizes[idx];
    const auto k = static_cast<std::size_t>(std::llround(o.k_fraction * static_cast<double>(n)));
    Table1Row row;
    row.n = n;
    row.k = k;
    row.m = solve_m_for_kappa(static_cast<double>(k), n);
    SimulationSpec spec;
    spec.n = n;
    spec.p = o.beta.size();
    spec.true_beta = o.beta;
    spec.true_sigma2 = o.sigma2;
    spec.true_tau2 = o.tau2;
    spec.k_true = k;
    Rng rng(stream_seed(o.seed, idx));
    const SimulatedData sim = simulate_dataset(spec, rng);
    ChainConfig cc;
    cc.iterations = o.iterations;
    cc.burn_in = o.burn_in;
    cc.kind = o.kernel;
    cc.m = row.m;
    cc.marginalized = o.marginalized;
    const SampleArchive a = run_chain(cc, sim.data, o.hyperpriors, stream_seed(o.seed, idx, 1));
    const BetaSummary s = summarize_beta(a);
    row.beta_mean = s.mean;
    row.beta_sd = s.sd;
    double ks = 0.0;
    for (const auto& r : a.records) ks += r.k;
    row.mean_k = ks / static_cast<double>(a.records.size());
    return row;
  });
}

Fig3Result run_fig3_study(const Fig3Options& o) {
  if (o.chains < 2) throw ConfigError("the variance comparison needs at least two chains");
  const std::size_t G = o.groups.size();
  std::vector<SimulatedData> data(G);
  std::vector<double> ms(G);
  for (std::size_t g = 0; g < G; ++g) {
    SimulationSpec spec;
    spec.n = o.n;
    spec.p = o.beta.size();
    spec.true_beta = o.beta;
    spec.true_sigma2 = o.sigma2;
    spec.true_tau2 = o.tau2;
    spec.k_true = o.groups[g];
    Rng rng(stream_seed(o.seed, g));
    data[g] = simulate_dataset(spec, rng);
    const double target = std::clamp(static_cast<double>(o.groups[g]), o.kappa_min,
                                     o.kappa_max_frac * static_cast<double>(o.n));
    ms[g] = solve_m_for_kappa(target, o.n);
  }
  const KernelTag tags[2] = {KernelTag::drem_row_gibbs, KernelTag::stickbreaking};
  const std::size_t tasks = G * 2 * o.chains;
  const auto traces = parallel_map(tasks, o.threads, [&](std::size_t t) {
    const std::size_t g = t / (2 * o.chains);
    const std::size_t kern = (t / o.chains) % 2;
    const std::size_t c = t % o.chains;
    // both kernels start chain c from the same urn draw
    Rng init(stream_seed(o.seed, 1000 + g, c));
    ChainConfig cc;
    cc.iterations = o.iterations;
    cc.burn_in = 0;
    cc.kind = KernelKind{tags[kern], o.prior_only};
    cc.m = ms[g];
    cc.initial_partition = polya_urn_sample(o.n, ms[g], init);
    const SampleArchive a = run_chain(cc, data[g].data, o.hyperpriors, stream_seed(o.seed, 2000 + 2 * g + kern, c));
    return a.k_trace;
  });
  Fig3Result res;
  for (std::size_t g = 0; g < G; ++g) {
    double final_var[2] = {0.0, 0.0};
    for (std::size_t kern = 0; kern < 2; ++kern) {
      const std::size_t first = (g * 2 + kern) * o.chains;
      std::vector<std::vector<double>> chains(traces.begin() + static_cast<std::ptrdiff_t>(first),
                                              traces.begin() + static_cast<std::ptrdiff_t>(first + o.chains));
      Fig3Curve curve;
      curve.groups = o.groups[g];
      curve.kernel = tags[kern];
      curve.m = ms[g];
      curve.variance = cumulative_mean_variance(chains);
      final_var[kern] = curve.variance.back();
      res.curves.push_back(std::move(curve));
    }
    if (final_var[0] <= final_var[1]) ++res.drem_wins;
    res.final_ratio.push_back(final_var[1] > 0.0 ? final_var[0] / final_var[1]
                                                 : (final_var[0] > 0.0 ? kInf : 1.0));
  }
  return res;
}

ProbitCoverageResult run_probit_coverage_study(const ProbitCoverageOptions& o) {
  const std::size_t p = o.beta.size();
  const double m = solve_m_for_kappa(static_cast<double>(o.groups), o.n);
  const auto hits = parallel_map(o.replications, o.threads, [&](std::size_t r) {
    SimulationSpec spec;
    spec.n = o.n;
    spec.p = p;
    spec.true_beta = o.beta;
    spec.true_sigma2 = 1.0;
    spec.true_tau2 = o.tau2;
    spec.k_true = o.groups;
    Rng rng(stream_seed(o.seed, r));
    const SimulatedData sim = simulate_dataset(spec, rng, true);
    ChainConfig cc;
    cc.iterations = o.iterations;
    cc.burn_in = o.burn_in;
    cc.m = m;
    cc.sample_sigma2 = false;
    const SampleArchive a = run_probit_chain(cc, sim.binary, o.hyperpriors, stream_seed(o.seed, r, 1));
    const BetaSummary s = summarize_beta(a, o.level);
    std::vector<int> hit(p);
    for (std::size_t j = 0; j < p; ++j) hit[j] = (s.lower[j] <= o.beta[j] && o.beta[j] <= s.upper[j]) ? 1 : 0;
    return hit;
  });
  ProbitCoverageResult res;
  res.replications = o.replications;
  res.coverage.assign(p, 0.0);
  double pooled = 0.0;
  for (const auto& h : hits) {
    for (std::size_t j = 0; j < p; ++j) {
      res.coverage[j] += h[j];
      pooled += h[j];
    }
  }
  for (double& c : res.coverage) c /= static_cast<double>(o.replications);
  res.pooled = pooled / static_cast<double>(o.replications * p);
  return res;
}

namespace {

ParameterDiagnostics describe(const std::string& name, const std::vector<double>& trace) {
  ParameterDiagnostics pd;
  pd.name = name;
  pd.cumulative_mean = cumulative_mean(trace);
  pd.geweke = geweke(trace);
  return pd;
}

}  // namespace

DiagnosticsReport diagnose(const std::vector<SampleArchive>& chains) {
  if (chains.empty() || chains.front().records.empty()) throw DataError("archive is empty");
  DiagnosticsReport rep;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& recs = chains[c].records;
    if (recs.empty()) throw DataError("archive is empty");
    const std::string prefix = chains.size() > 1 ? "chain" + std::to_string(c + 1) + "/" : "";
    std::vector<double> k, s2, t2;
    std::vector<std::vector<double>> beta(recs.front().beta.n_elem);
    for (const auto& r : recs) {
      k.push_back(r.k);
      s2.push_back(r.sigma2);
      t2.push_back(r.tau2);
      for (std::size_t j = 0; j < beta.size(); ++j) beta[j].push_back(r.beta[j]);
    }
    rep.parameters.push_back(describe(prefix + "k", k));
    for (std::size_t j = 0; j < beta.size(); ++j) rep.parameters.push_back(describe(prefix + "beta_" + std::to_string(j + 1), beta[j]));
    rep.parameters.push_back(describe(prefix + "sigma2", s2));
    rep.parameters.push_back(describe(prefix + "tau2", t2));
  }
  if (chains.size() > 1) {
    std::vector<std::vector<double>> ks;
    for (const auto& ch : chains) {
      std::vector<double> k;
      for (const auto& r : ch.records) k.push_back(r.k);
      ks.push_back(std::move(k));
    }
    rep.across_chain_variance = cumulative_mean_variance(ks);
  }
  return rep;
}

DiagnosticsReport diagnose_table(const Table& t) {
  if (t.rows.empty()) throw DataError("archive is empty");
  DiagnosticsReport rep;
  for (std::size_t col = 0; col < t.header.size(); ++col) {
    const std::string& name = t.header[col];
    if (name == "iteration" || name == "sizes") continue;
    std::vector<double> trace;
    trace.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      try {
        std::size_t used = 0;
        const double v = std::stod(t.rows[r].at(col), &used);
        trace.push_back(v);
      } catch (const std::exception&) {
        throw DataError("archive row " + std::to_string(r + 2) + ", column '" + name + "' is not numeric");
      }
    }
    rep.parameters.push_back(describe(name, trace));
  }
  return rep;
}

PrecisionCoefficients estimate_coefficients(const ExperimentConfig& cfg, const Dataset& d, const ModelParams* theta,
                                            Rng& rng, std::vector<std::size_t>* missing) {
  PrecisionCoefficients c;
  if (d.n() <= kEnumerationCap) {
    c = theta ? exhaustive_precision_coefficients(d, *theta)
              : marginal_exhaustive_coefficients(d, cfg.hyperpriors, cfg.theta_draws, rng);
  } else {
    ImportanceOptions io;
    io.draws = cfg.is_draws;
    if (theta) io.fixed_theta = *theta;
    c = importance_sample_coefficients(d, cfg.hyperpriors, io, rng);
  }
  for (std::size_t k = 0; k < c.log_c.size(); ++k) {
    if (std::isnan(c.log_c[k])) {
      c.log_c[k] = kNegInf;
      if (missing) missing->push_back(k + 1);
    }
  }
  return c;
}

MResolution resolve_m(const ExperimentConfig& cfg, const Dataset& d, Rng& rng) {
  MResolution res;
  switch (cfg.m_policy) {
    case MPolicy::fixed:
      res.m = cfg.m;
      res.source = "fixed";
      return res;
    case MPolicy::posterior_mode: {
      const PrecisionCoefficients c = estimate_coefficients(cfg, d, nullptr, rng);
      res.detail = posterior_mode_m(c, cfg.hyperpriors.m_prior_a, cfg.hyperpriors.m_prior_b);
      res.source = "posterior_mode";
      break;
    }
    case MPolicy::profile_mle: {
      // theta from a short pilot chain at m = 1
      ChainConfig pilot;
      pilot.iterations = 600;
      pilot.burn_in = 200;
      pilot.m = 1.0;
      const SampleArchive a = run_chain(pilot, d, cfg.hyperpriors, rng.engine()());
      ModelParams th;
      th.beta = arma::zeros(d.p());
      th.sigma2 = 0.0;
      th.tau2 = 0.0;
      for (const auto& r : a.records) {
        th.beta += r.beta;
        th.sigma2 += r.sigma2;
        th.tau2 += r.tau2;
      }
      const double nr = static_cast<double>(a.records.size());
      th.beta /= nr;
      th.sigma2 /= nr;
      th.tau2 /= nr;
      const PrecisionCoefficients c = estimate_coefficients(cfg, d, &th, rng);
      res.detail = classify_likelihood_shape(c);
      res.source = "profile_mle";
      break;
    }
  }
  res.m = res.detail.m_hat;
  if (!(res.m > 0.0) || !std::isfinite(res.m)) {
    throw NumericalError(std::string("estimated m is not a usable positive value (shape: ") +
                         to_string(res.detail.classification) + ")");
  }
  return res;
}

}  // namespace dprem
