#include "ctrap/abm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ctrap/parallel.hpp"

namespace ctrap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

void AbmConfig::validate() const {
  if (n_agents < 2) throw std::invalid_argument("abm: n_agents must be >= 2");
  if (!(r >= 1.0) || !std::isfinite(r)) {
    throw std::invalid_argument("abm: r must be >= 1");
  }
  if (!(xi >= 0.0) || !std::isfinite(xi)) {
    throw std::invalid_argument("abm: xi must be >= 0");
  }
  if (!(t_end > 0.0) || !std::isfinite(t_end)) {
    throw std::invalid_argument("abm: t_end must be > 0");
  }
  if (!(sample_dt > 0.0) || sample_dt > t_end) {
    throw std::invalid_argument("abm: need 0 < sample_dt <= t_end");
  }
  if (const auto* fixed = std::get_if<FixedAbmStrategy>(&policy)) {
    if (fixed->strategy.m < 0 || fixed->strategy.tau < 0) {
      throw std::invalid_argument("abm: fixed strategy must be >= 0");
    }
  }
}

int AbmState::functional_count() const {
  return static_cast<int>(std::count(functional.begin(), functional.end(), 1));
}

double AbmState::functional_fraction() const {
  return static_cast<double>(functional_count()) / n_agents();
}

std::vector<int> AbmState::recount_customers() const {
  std::vector<int> counts(functional.size(), 0);
  for (const auto& list : suppliers) {
    for (int j : list) ++counts[j];
  }
  return counts;
}

std::vector<double> supplier_weights(const AbmState& state, int requester,
                                     double r, double xi) {
  const int n = state.n_agents();
  if (requester < 0 || requester >= n) {
    throw std::out_of_range("supplier_weights: requester out of range");
  }
  std::vector<std::uint8_t> sticky(n, 0);
  const auto& sup = state.suppliers[requester];
  const auto& del = state.delivered[requester];
  for (std::size_t slot = 0; slot < sup.size(); ++slot) {
    if (del[slot]) sticky[sup[slot]] = 1;
  }
  std::vector<double> w(n, 0.0);
  for (int j = 0; j < n; ++j) {
    if (j == requester) continue;
    w[j] = (sticky[j] ? r : 1.0) * std::pow(1.0 + state.customer_count[j], xi);
  }
  return w;
}

std::uint64_t replica_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 1));
}

AbmSimulation::AbmSimulation(const AbmConfig& config)
    : config_(config), rng_(splitmix64(config.seed)) {
  config_.validate();
  const int n = config_.n_agents;
  state_.functional.resize(n);
  state_.suppliers.resize(n);
  state_.delivered.resize(n);
  state_.customer_count.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    state_.functional[i] = uniform01() < config_.f0.value() ? 1 : 0;
  }
  n_functional_ = state_.functional_count();
  uniform_suppliers_ = config_.r == 1.0 && config_.xi == 0.0;
  base_weight_.assign(n, 1.0);
  cumulative_.resize(n);
  sticky_.assign(n, 0);
  response_cache_.resize(n + 1);
  total_rate_ = n * (1.0 + config_.params.eps());
  pending_ = -std::log1p(-uniform01()) / total_rate_;
}

double AbmSimulation::uniform01() {
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::uint64_t AbmSimulation::uniform_index(std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng_()) * n) >> 64);
}

double AbmSimulation::step() {
  const double t = pending_;
  const int i = static_cast<int>(uniform_index(config_.n_agents));
  if (uniform01() * (1.0 + config_.params.eps()) < 1.0) {
    attempt(i);
  } else {
    fail(i);
  }
  state_.time = t;
  pending_ = t - std::log1p(-uniform01()) / total_rate_;
  return t;
}

void AbmSimulation::advance_to(double t) {
  while (pending_ <= t) step();
  state_.time = t;
}

Strategy AbmSimulation::strategy_now() {
  if (const auto* fixed = std::get_if<FixedAbmStrategy>(&config_.policy)) {
    return fixed->strategy;
  }
  auto& cached = response_cache_[n_functional_];
  if (!cached) {
    cached = best_response(
        config_.params,
        Probability(static_cast<double>(n_functional_) / config_.n_agents));
  }
  return *cached;
}

int AbmSimulation::sample_supplier(int requester) {
  const int n = config_.n_agents;
  if (uniform_suppliers_) {
    auto j = static_cast<int>(uniform_index(n - 1));
    return j >= requester ? j + 1 : j;
  }
  const double u = uniform01() * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  // u < total, so the search lands on an agent with positive weight.
  return static_cast<int>(std::min<std::ptrdiff_t>(
      it - cumulative_.begin(), static_cast<std::ptrdiff_t>(n - 1)));
}

void AbmSimulation::attempt(int i) {
  const Strategy s = strategy_now();
  auto& sup = state_.suppliers[i];
  auto& del = state_.delivered[i];

  // Weights see the state as it stands when the request goes out.
  if (!uniform_suppliers_ && s.m > 0) {
    for (std::size_t slot = 0; slot < sup.size(); ++slot) {
      if (del[slot]) sticky_[sup[slot]] = 1;
    }
    double acc = 0.0;
    for (int j = 0; j < config_.n_agents; ++j) {
      if (j != i) acc += (sticky_[j] ? config_.r : 1.0) * base_weight_[j];
      cumulative_[j] = acc;
    }
    for (int j : sup) sticky_[j] = 0;
  }

  std::vector<int> fresh(s.m);
  for (int& j : fresh) j = sample_supplier(i);

  // i stops being a customer of its old suppliers.
  for (int j : sup) {
    --state_.customer_count[j];
    base_weight_[j] = std::pow(1.0 + state_.customer_count[j], config_.xi);
  }
  sup = std::move(fresh);
  del.resize(sup.size());
  int delivered = 0;
  for (std::size_t slot = 0; slot < sup.size(); ++slot) {
    const int j = sup[slot];
    del[slot] = state_.functional[j];
    delivered += del[slot];
    ++state_.customer_count[j];
    base_weight_[j] = std::pow(1.0 + state_.customer_count[j], config_.xi);
  }

  if (s.tau == 0) return;  // withdrawn agents keep their state
  const std::uint8_t now = delivered >= s.tau ? 1 : 0;
  n_functional_ += static_cast<int>(now) - state_.functional[i];
  state_.functional[i] = now;
}

void AbmSimulation::fail(int i) {
  if (state_.functional[i]) {
    state_.functional[i] = 0;
    --n_functional_;
  }
}

AbmRun run(const AbmConfig& config) {
  AbmSimulation sim(config);
  const auto& cfg = sim.config();
  AbmRun out;
  const auto last = static_cast<long>(std::floor(cfg.t_end / cfg.sample_dt + 1e-9));
  for (long k = 0; k <= last; ++k) out.sample_times.push_back(k * cfg.sample_dt);
  if (cfg.t_end - out.sample_times.back() > 1e-9 * cfg.t_end) {
    out.sample_times.push_back(cfg.t_end);
  }
  out.f_series.reserve(out.sample_times.size());
  for (double t : out.sample_times) {
    sim.advance_to(t);
    out.f_series.push_back(sim.state().functional_fraction());
  }
  out.final_state = sim.state();
  return out;
}

EnsembleSummary run_ensemble(const AbmConfig& config,
                             const std::vector<std::uint64_t>& seeds,
                             int threads) {
  if (seeds.size() < 2) {
    throw std::invalid_argument("run_ensemble: need at least 2 replicas");
  }
  config.validate();
  std::vector<AbmRun> runs(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t r) {
    AbmConfig c = config;
    c.seed = seeds[r];
    runs[r] = run(c);
  });

  EnsembleSummary s;
  s.n_replicas = static_cast<int>(seeds.size());
  s.sample_times = runs.front().sample_times;
  const std::size_t nt = s.sample_times.size();
  const double n = s.n_replicas;
  s.mean_f.assign(nt, 0.0);
  s.sd_f.assign(nt, 0.0);
  s.sem_f.assign(nt, 0.0);
  for (std::size_t t = 0; t < nt; ++t) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r.f_series[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.f_series[t] - mean) * (r.f_series[t] - mean);
    s.mean_f[t] = mean;
    s.sd_f[t] = std::sqrt(ss / (n - 1.0));
    s.sem_f[t] = s.sd_f[t] / std::sqrt(n);
  }
  for (auto& r : runs) {
    s.final_f_samples.push_back(r.f_series.back());
    s.replica_f.push_back(std::move(r.f_series));
  }
  return s;
}

EnsembleSummary run_replicas(const AbmConfig& config, int n_replicas,
                             int threads) {
  if (n_replicas < 2) {
    throw std::invalid_argument("run_replicas: n_replicas must be >= 2");
  }
  std::vector<std::uint64_t> seeds(n_replicas);
  for (int i = 0; i < n_replicas; ++i) seeds[i] = replica_seed(config.seed, i);
  return run_ensemble(config, seeds, threads);
}

double series_sd(const std::vector<double>& times, const std::vector<double>& f,
                 double from) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (times[i] < from) continue;
    sum += f[i];
    ++n;
  }
  if (n < 2) return 0.0;
  const double mean = sum / n;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (times[i] < from) continue;
    sq += (f[i] - mean) * (f[i] - mean);
  }
  return std::sqrt(sq / (n - 1.0));
}

}  // namespace ctrap
