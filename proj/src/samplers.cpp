#include "drem/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "drem/errors.hpp"
#include "drem/kernels.hpp"
#include "drem/numerics.hpp"

namespace dprem {

const char* to_string(KernelTag tag) {
  switch (tag) {
    case KernelTag::drem_row_gibbs:
      return "drem_row_gibbs";
    case KernelTag::drem_mh:
      return "drem_mh";
    case KernelTag::stickbreaking:
      return "stickbreaking";
  }
  return "unknown";
}

KernelTag parse_kernel_tag(std::string_view name) {
  if (name == "drem_row_gibbs" || name == "drem") return KernelTag::drem_row_gibbs;
  if (name == "drem_mh") return KernelTag::drem_mh;
  if (name == "stickbreaking" || name == "neal") return KernelTag::stickbreaking;
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

std::vector<double> sample_log_q(const Partition& p, std::span<const double> r, Rng& rng) {
  const std::size_t n = p.n();
  if (!r.empty() && r.size() != n) throw std::invalid_argument("sample_q: r must have length n");
  std::vector<double> alpha(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double rj = r.empty() ? 1.0 : r[j];
    if (!(rj > 0.0)) throw std::invalid_argument("sample_q: r must be positive");
    alpha[j] = rj + (j < p.sizes.size() ? p.sizes[j] : 0);
  }
  return log_dirichlet(alpha, rng);
}

std::vector<double> sample_q(const Partition& p, std::span<const double> r, Rng& rng) {
  std::vector<double> q = sample_log_q(p, r, rng);
  for (double& v : q) v = std::exp(v);
  return q;
}

std::vector<double> neal_row_probabilities(std::span<const int> slot_sizes, double m) {
  std::vector<double> w;
  for (int c : slot_sizes) {
    if (c > 0) w.push_back(c);
  }
  w.push_back(m);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> drem_row_probabilities(std::span<const int> slot_sizes, std::span<const double> q, double m) {
  if (q.size() != slot_sizes.size()) throw std::invalid_argument("drem_row_probabilities: q and slots differ in length");
  const std::size_t n = slot_sizes.size();
  const auto k = static_cast<std::size_t>(std::count_if(slot_sizes.begin(), slot_sizes.end(), [](int c) { return c > 0; }));
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = slot_sizes[j];
    w[j] = c > 0 ? c / (c + 1.0) * q[j] : m * q[j] / static_cast<double>(n - k);
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

namespace {

// Row-by-row reassignment over n fixed slots. Slots are the coordinates of q; the canonical
// labels of the starting partition occupy the first k slots.
class RowSweeper {
 public:
  RowSweeper(const Partition& p, std::span<const double> log_q, std::span<const double> residual, double sigma2,
             double tau2, double m, bool drem)
      : n_(p.n()),
        m_(m),
        drem_(drem),
        with_data_(!residual.empty()),
        r_(residual),
        sigma2_(sigma2),
        tau2_(tau2),
        log_q_(log_q),
        kt_(kernels::active()) {
    if (with_data_ && residual.size() != n_) throw std::invalid_argument("residual length does not match the partition");
    if (drem_ && log_q.size() != n_) throw std::invalid_argument("q must have length n");
    slot_of_ = p.assignment;
    count_.assign(n_, 0);
    sum_.assign(n_, 0.0);
    pos_.assign(n_, -1);
    for (std::size_t i = 0; i < n_; ++i) {
      ++count_[slot_of_[i]];
      if (with_data_) sum_[slot_of_[i]] += r_[i];
    }
    scale_ = with_data_ ? tau2_ / (2.0 * sigma2_) : 0.0;
    new_lik_base_ = with_data_ ? -0.5 * (std::log(sigma2_ + tau2_) - std::log(sigma2_)) : 0.0;
    inv_new_ = with_data_ ? 1.0 / (sigma2_ + tau2_) : 0.0;
    log_m_ = std::log(m_);
    if (drem_) {
      lq_max_ = *std::max_element(log_q_.begin(), log_q_.end());
      q_rel_.resize(n_);
      for (std::size_t j = 0; j < n_; ++j) q_rel_[j] = std::exp(log_q_[j] - lq_max_);
    }
    for (std::size_t s = 0; s < n_; ++s) {
      if (count_[s] > 0) add_slot(static_cast<int>(s));
    }
    recompute_unoccupied();
    lw_.resize(n_ + 1);
    w_.resize(n_ + 1);
  }

  void update(std::size_t i, Rng& rng) {
    const double ri = with_data_ ? r_[i] : 0.0;
    remove_row(i, ri);
    const std::size_t k = occ_.size();
    kt_.join_log_weights(base_.data(), sums_.data(), inv0_.data(), inv1_.data(), ri, scale_, k, lw_.data());
    double new_lw = log_m_ + new_lik_base_ + scale_ * ri * ri * inv_new_;
    if (drem_) new_lw += std::log(unocc_sum_) + lq_max_ - std::log(static_cast<double>(n_ - k));
    lw_[k] = new_lw;
    const double mx = kt_.max(lw_.data(), k + 1);
    if (!std::isfinite(mx)) throw NumericalError("row update: no finite reassignment weight");
    const double total = kt_.exp_shift_sum(lw_.data(), mx, k + 1, w_.data());
    const double u = rng.uniform() * total;
    std::size_t chosen = k;
    double acc = 0.0;
    for (std::size_t c = 0; c <= k; ++c) {
      acc += w_[c];
      if (u < acc) {
        chosen = c;
        break;
      }
    }
    if (chosen == k && !(w_[k] > 0.0)) {
      // rounding pushed u past the last positive weight
      chosen = k - 1;
      while (chosen > 0 && !(w_[chosen] > 0.0)) --chosen;
    }
    const int slot = chosen < k ? occ_[chosen] : pick_empty_slot(rng);
    insert_row(i, ri, slot);
  }

  Partition partition() const { return canonicalize(slot_of_); }

 private:
  double prior_term(int c, int s) const {
    return drem_ ? std::log(static_cast<double>(c) / (c + 1.0)) + log_q_[s] : std::log(static_cast<double>(c));
  }

  void fill(std::size_t pos, int s) {
    const double c = count_[s];
    double dl = 0.0;
    if (with_data_) {
      const double v0 = sigma2_ + c * tau2_;
      const double v1 = v0 + tau2_;
      dl = std::log(v1) - std::log(v0);
      inv0_[pos] = 1.0 / v0;
      inv1_[pos] = 1.0 / v1;
    } else {
      inv0_[pos] = 0.0;
      inv1_[pos] = 0.0;
    }
    base_[pos] = prior_term(count_[s], s) - 0.5 * dl;
    sums_[pos] = sum_[s];
  }

  void add_slot(int s) {
    pos_[s] = static_cast<int>(occ_.size());
    occ_.push_back(s);
    base_.push_back(0.0);
    sums_.push_back(0.0);
    inv0_.push_back(0.0);
    inv1_.push_back(0.0);
    fill(occ_.size() - 1, s);
  }

  void drop_slot(int s) {
    const auto pos = static_cast<std::size_t>(pos_[s]);
    const std::size_t last = occ_.size() - 1;
    if (pos != last) {
      occ_[pos] = occ_[last];
      base_[pos] = base_[last];
      sums_[pos] = sums_[last];
      inv0_[pos] = inv0_[last];
      inv1_[pos] = inv1_[last];
      pos_[occ_[pos]] = static_cast<int>(pos);
    }
    occ_.pop_back();
    base_.pop_back();
    sums_.pop_back();
    inv0_.pop_back();
    inv1_.pop_back();
    pos_[s] = -1;
  }

  void recompute_unoccupied() {
    unocc_sum_ = 0.0;
    if (!drem_) return;
    for (std::size_t j = 0; j < n_; ++j) {
      if (count_[j] == 0) unocc_sum_ += q_rel_[j];
    }
  }

  void remove_row(std::size_t i, double ri) {
    const int s = slot_of_[i];
    --count_[s];
    sum_[s] -= ri;
    if (count_[s] == 0) {
      sum_[s] = 0.0;
      drop_slot(s);
      if (drem_) unocc_sum_ += q_rel_[s];
    } else {
      fill(static_cast<std::size_t>(pos_[s]), s);
    }
  }

  void insert_row(std::size_t i, double ri, int s) {
    slot_of_[i] = s;
    ++count_[s];
    sum_[s] += ri;
    if (count_[s] == 1) {
      add_slot(s);
      recompute_unoccupied();
    } else {
      fill(static_cast<std::size_t>(pos_[s]), s);
    }
  }

  int pick_empty_slot(Rng& rng) {
    if (!drem_) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (count_[j] == 0) return static_cast<int>(j);
      }
      throw std::logic_error("no empty slot available");
    }
    const double u = rng.uniform() * unocc_sum_;
    double acc = 0.0;
    int last = -1;
    for (std::size_t j = 0; j < n_; ++j) {
      if (count_[j] != 0) continue;
      last = static_cast<int>(j);
      acc += q_rel_[j];
      if (u < acc) return last;
    }
    if (last < 0) throw std::logic_error("no empty slot available");
    return last;
  }

  std::size_t n_;
  double m_;
  bool drem_;
  bool with_data_;
  std::span<const double> r_;
  double sigma2_, tau2_;
  std::span<const double> log_q_;
  const kernels::KernelTable& kt_;
  double scale_ = 0.0, new_lik_base_ = 0.0, inv_new_ = 0.0, log_m_ = 0.0;
  double lq_max_ = 0.0, unocc_sum_ = 0.0;
  std::vector<double> q_rel_;
  std::vector<int> slot_of_, count_, pos_, occ_;
  std::vector<double> sum_;
  std::vector<double> base_, sums_, inv0_, inv1_;
  std::vector<double> lw_, w_;
};

void check_m(double m) {
  if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("precision m must be non-negative and finite");
}

arma::vec data_residual(const ChainState& state, const Dataset* d) {
  if (!d) return {};
  if (d->n() != state.partition.n()) throw std::invalid_argument("partition size does not match the dataset");
  return residual(*d, state.theta.beta);
}

}  // namespace

Partition neal_row_update(std::size_t i, const ChainState& state, double m, const Dataset* d, Rng& rng) {
  check_m(m);
  if (i >= state.partition.n()) throw std::out_of_range("row index out of range");
  const arma::vec r = data_residual(state, d);
  RowSweeper sw(state.partition, {}, {r.memptr(), r.n_elem}, state.theta.sigma2, state.theta.tau2, m, false);
  sw.update(i, rng);
  return sw.partition();
}

Partition drem_row_update(std::size_t i, const ChainState& state, double m, const Dataset* d, Rng& rng) {
  check_m(m);
  if (state.log_q.size() != state.partition.n()) throw std::invalid_argument("drem_row_update: q is missing");
  if (i >= state.partition.n()) throw std::out_of_range("row index out of range");
  const arma::vec r = data_residual(state, d);
  RowSweeper sw(state.partition, state.log_q, {r.memptr(), r.n_elem}, state.theta.sigma2, state.theta.tau2, m, true);
  sw.update(i, rng);
  return sw.partition();
}

double drem_mh_log_target(const Partition& p, double m) {
  const double n = static_cast<double>(p.n());
  const double k = static_cast<double>(p.k());
  double lw = k * std::log(m) + log_gamma(n - k + 1.0);
  for (int nj : p.sizes) lw += log_gamma(nj) - log_gamma(nj + 1.0);
  return lw;
}

namespace {

bool mh_update(ChainState& state, std::span<const double> r, double m, Rng& rng) {
  Partition cand = collapse_draw_log(state.log_q, state.partition.n(), rng);
  double log_ratio = drem_mh_log_target(cand, m) - drem_mh_log_target(state.partition, m);
  if (!r.empty()) {
    log_ratio += log_marginal_residual(r, cand, state.theta.sigma2, state.theta.tau2) -
                 log_marginal_residual(r, state.partition, state.theta.sigma2, state.theta.tau2);
  }
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
    state.partition = std::move(cand);
    return true;
  }
  return false;
}

}  // namespace

Partition drem_mh_step(const ChainState& state, double m, const Dataset* d, Rng& rng, bool* accepted) {
  check_m(m);
  if (state.log_q.size() != state.partition.n()) throw std::invalid_argument("drem_mh_step: q is missing");
  const arma::vec r = data_residual(state, d);
  ChainState work = state;
  const bool ok = mh_update(work, {r.memptr(), r.n_elem}, m, rng);
  if (accepted) *accepted = ok;
  return work.partition;
}

bool partition_sweep(ChainState& state, std::span<const double> residual, const Hyperpriors& hp,
                     const SweepOptions& opts, Rng& rng) {
  check_m(opts.m);
  const std::size_t n = state.partition.n();
  const std::span<const double> r = opts.kind.prior_only ? std::span<const double>{} : residual;
  const KernelTag tag = opts.kind.tag;
  if (tag != KernelTag::stickbreaking) {
    state.log_q = sample_log_q(state.partition, hp.r, rng);
  }
  if (tag == KernelTag::drem_mh) return mh_update(state, r, opts.m, rng);

  RowSweeper sw(state.partition, state.log_q, r, state.theta.sigma2, state.theta.tau2, opts.m,
                tag == KernelTag::drem_row_gibbs);
  if (opts.shuffle_rows) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng.engine());
    for (std::size_t i : order) sw.update(i, rng);
  } else {
    for (std::size_t i = 0; i < n; ++i) sw.update(i, rng);
  }
  state.partition = sw.partition();
  return true;
}

void validate(const ChainConfig& cfg) {
  if (cfg.iterations == 0) throw ConfigError("iterations must be positive");
  if (cfg.burn_in >= cfg.iterations) throw ConfigError("burn_in must be smaller than iterations");
  if (!(cfg.m > 0.0) || !std::isfinite(cfg.m)) throw ConfigError("m must be positive and finite");
}

namespace {

SampleRecord make_record(const ChainState& s) {
  return SampleRecord{s.iteration, s.partition.k(), s.theta.beta, s.theta.sigma2, s.theta.tau2, s.partition.sizes};
}

ChainState initial_state(const ChainConfig& cfg, std::size_t n, std::size_t p, Rng& rng) {
  ChainState s;
  s.partition = cfg.initial_partition ? *cfg.initial_partition : polya_urn_sample(n, cfg.m, rng);
  validate(s.partition);
  if (s.partition.n() != n) throw ConfigError("initial partition has the wrong length");
  if (cfg.initial_theta) {
    s.theta = *cfg.initial_theta;
  } else {
    s.theta.beta = arma::zeros(p);
    s.theta.sigma2 = 1.0;
    s.theta.tau2 = 1.0;
  }
  s.theta.eta = arma::zeros(s.partition.k());
  return s;
}

void refresh_eta_length(ChainState& s) {
  // eta is redrawn at the start of every theta step; keep its length consistent meanwhile
  if (s.theta.eta.n_elem != static_cast<arma::uword>(s.partition.k())) s.theta.eta = arma::zeros(s.partition.k());
}

}  // namespace

SampleArchive run_chain(const ChainConfig& cfg, const Dataset& d, const Hyperpriors& hp, std::uint64_t seed) {
  validate(cfg);
  validate(d);
  validate(hp, d.n());
  Rng rng(seed);
  const LinearWorkspace ws(d.X);
  SampleArchive out;
  ChainState s = initial_state(cfg, d.n(), d.p(), rng);
  const SweepOptions sweep{cfg.kind, cfg.m, cfg.shuffle_rows};
  const ThetaStepOptions topts{cfg.marginalized, cfg.sample_sigma2};
  std::size_t accepted = 0;
  out.k_trace.reserve(cfg.iterations);
  out.records.reserve(cfg.iterations - cfg.burn_in);
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const arma::vec r = residual(d, s.theta.beta);
    accepted += partition_sweep(s, {r.memptr(), r.n_elem}, hp, sweep, rng) ? 1 : 0;
    refresh_eta_length(s);
    s.theta = gibbs_step_theta(s, d, hp, rng, topts, ws);
    s.iteration = t + 1;
    out.k_trace.push_back(s.partition.k());
    if (t >= cfg.burn_in) out.records.push_back(make_record(s));
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.iterations);
  out.final_state = std::move(s);
  return out;
}

SampleArchive run_probit_chain(const ChainConfig& cfg, const BinaryDataset& d, const Hyperpriors& hp,
                               std::uint64_t seed) {
  validate(cfg);
  validate(d);
  validate(hp, d.n());
  Rng rng(seed);
  const LinearWorkspace ws(d.X);
  SampleArchive out;
  ChainState s = initial_state(cfg, d.n(), d.p(), rng);
  s.u = sample_latent_u(s, d, rng);
  const SweepOptions sweep{cfg.kind, cfg.m, cfg.shuffle_rows};
  const ProbitOptions popts{cfg.sample_sigma2, cfg.marginalized};
  std::size_t accepted = 0;
  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const arma::vec r = s.u - d.X * s.theta.beta;
    accepted += partition_sweep(s, {r.memptr(), r.n_elem}, hp, sweep, rng) ? 1 : 0;
    refresh_eta_length(s);
    s = probit_gibbs_sweep(s, d, hp, rng, popts, ws);
    s.iteration = t + 1;
    out.k_trace.push_back(s.partition.k());
    if (t >= cfg.burn_in) out.records.push_back(make_record(s));
  }
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(cfg.iterations);
  out.final_state = std::move(s);
  return out;
}

std::vector<double> cumulative_mean_variance(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("cumulative_mean_variance: need at least two chains");
  const std::size_t len = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != len) throw std::invalid_argument("cumulative_mean_variance: chains differ in length");
  }
  const double nc = static_cast<double>(chains.size());
  std::vector<double> running(chains.size(), 0.0);
  std::vector<double> out(len);
  for (std::size_t t = 0; t < len; ++t) {
    double mean = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      running[c] += chains[c][t];
      mean += running[c] / static_cast<double>(t + 1);
    }
    mean /= nc;
    double ss = 0.0;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      const double dv = running[c] / static_cast<double>(t + 1) - mean;
      ss += dv * dv;
    }
    out[t] = ss / (nc - 1.0);
  }
  return out;
}

}  // namespace dprem
