#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "ctrap/numerics.hpp"
#include "ctrap/strategy.hpp"

namespace ctrap {

/// Agents re-optimize against the current fraction of functional agents.
struct GlobalBestResponse {};
/// Every agent plays the same fixed strategy.
struct FixedAbmStrategy {
  Strategy strategy;
};
using AbmPolicy = std::variant<GlobalBestResponse, FixedAbmStrategy>;

struct AbmConfig {
  int n_agents = 2;
  ModelParams params{0.1, 0.4, 0.0};
  /// Weight multiplier for a supplier that delivered on the last attempt.
  double r = 1.0;
  /// Preferential-attachment exponent on (1 + customers).
  double xi = 0.0;
  Probability f0{0.5};
  AbmPolicy policy = GlobalBestResponse{};
  double t_end = 1.0;
  double sample_dt = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on n_agents < 2, r < 1, xi < 0,
  /// non-positive times or sample_dt > t_end.
  void validate() const;
};

struct AbmState {
  double time = 0.0;
  std::vector<std::uint8_t> functional;
  /// Suppliers drawn at each agent's last attempt, with multiplicity.
  std::vector<std::vector<int>> suppliers;
  /// Whether suppliers[i][slot] was functional when asked.
  std::vector<std::vector<std::uint8_t>> delivered;
  /// Number of supplier slots, over all agents, that point at j.
  std::vector<int> customer_count;

  int n_agents() const { return static_cast<int>(functional.size()); }
  int functional_count() const;
  double functional_fraction() const;
  /// Customer counts rebuilt from the supplier lists.
  std::vector<int> recount_customers() const;
};

/// w_j = r^{S(j)} (1 + k_j)^xi for j != requester, and 0 for the requester,
/// where S(j) = 1 iff j holds a delivered slot of the requester.
std::vector<double> supplier_weights(const AbmState& state, int requester,
                                     double r, double xi);

/// Derives the seed of replica `index` from a base seed.
std::uint64_t replica_seed(std::uint64_t base, std::uint64_t index);

/// Event-driven simulation: one merged Poisson stream of rate N (1 + eps);
/// each event picks a uniform agent and is a production attempt with
/// probability 1/(1+eps), otherwise an exogenous failure.
class AbmSimulation {
 public:
  explicit AbmSimulation(const AbmConfig& config);

  const AbmState& state() const { return state_; }
  const AbmConfig& config() const { return config_; }

  /// Time of the next pending event.
  double next_event_time() const { return pending_; }

  /// Applies exactly one event and returns its time.
  double step();

  /// Applies every event up to and including time t, then sets the clock to t.
  void advance_to(double t);

 private:
  Strategy strategy_now();
  void attempt(int i);
  void fail(int i);
  int sample_supplier(int requester);
  double uniform01();
  std::uint64_t uniform_index(std::uint64_t n);

  AbmConfig config_;
  AbmState state_;
  std::mt19937_64 rng_;
  double pending_ = 0.0;
  double total_rate_ = 0.0;
  int n_functional_ = 0;
  bool uniform_suppliers_ = true;
  std::vector<double> base_weight_;  // (1 + k_j)^xi
  std::vector<double> cumulative_;
  std::vector<std::uint8_t> sticky_;
  std::vector<std::optional<Strategy>> response_cache_;
};

struct AbmRun {
  std::vector<double> sample_times;
  std::vector<double> f_series;
  AbmState final_state;
};

/// Samples F at 0, sample_dt, 2 sample_dt, ... and at t_end.
AbmRun run(const AbmConfig& config);

struct EnsembleSummary {
  std::vector<double> sample_times;
  std::vector<double> mean_f;
  std::vector<double> sd_f;
  std::vector<double> sem_f;
  int n_replicas = 0;
  std::vector<double> final_f_samples;
  /// F series of every replica, replica-major.
  std::vector<std::vector<double>> replica_f;
};

/// Runs one replica per seed and aggregates in seed order.
EnsembleSummary run_ensemble(const AbmConfig& config,
                             const std::vector<std::uint64_t>& seeds,
                             int threads = 1);

/// n_replicas >= 2 replicas seeded with replica_seed(config.seed, i).
EnsembleSummary run_replicas(const AbmConfig& config, int n_replicas,
                             int threads = 1);

/// Standard deviation of one replica's F series over samples at t >= from.
double series_sd(const std::vector<double>& times,
                 const std::vector<double>& f, double from = 0.0);

}  // namespace ctrap
