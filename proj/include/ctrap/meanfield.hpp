#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ctrap/numerics.hpp"
#include "ctrap/strategy.hpp"

namespace ctrap {

enum class DriftSign { kNegative, kZero, kPositive, kMixed };

std::string to_string(DriftSign s);
DriftSign sign_of(double value);

/// dF/dt = P[Bin(m, f) >= tau] - f (1 + eps), and exactly 0 when tau = 0.
double drift(const Strategy& s, Probability f, double eps);

// Strategy policies for the mean-field dynamics.

/// Re-optimize every `commitment` time units; 0 means at every step.
struct BestResponsePolicy {
  double commitment = 0.0;
};
/// Best response shifted by (s, s) at every step.
struct OvershootPolicy {
  int s = 0;
};
struct FixedPolicy {
  Strategy strategy;
};
using Policy = std::variant<BestResponsePolicy, OvershootPolicy, FixedPolicy>;

std::string describe(const Policy& policy);

/// Strategy the overshoot policy plays at f: best response plus (s, s).
Strategy overshoot_strategy(const ModelParams& p, Probability f, int s);

struct SwitchEvent {
  double time = 0.0;
  /// F at the start of the step where the new strategy took over.
  double f = 0.0;
  Strategy old_strategy;
  Strategy new_strategy;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<double> f_values;
  /// Strategy active on the step that starts at times[i]; the final entry
  /// repeats the last active strategy.
  std::vector<Strategy> strategies;
  std::vector<SwitchEvent> switch_events;
  Policy policy;
};

/// Fixed-step RK4 with the active strategy held constant within each step.
/// F is clamped to [0, 1] after every step. Switch events are reported at
/// step granularity. Throws std::invalid_argument for dt <= 0, t_end <= 0
/// or dt > t_end.
Trajectory integrate(const ModelParams& params, Probability f0,
                     const Policy& policy, double t_end, double dt = 1e-3);

struct PortraitSegment {
  double f_lo = 0.0;
  double f_hi = 0.0;
  Strategy strategy;
  DriftSign drift_sign = DriftSign::kZero;
};

struct PhasePortrait {
  ModelParams params;
  int overshoot = 0;
  std::vector<PortraitSegment> segments;
};

/// Partition of [0, 1] into maximal runs of a single policy strategy
/// (best response, or best response + (s, s) when overshoot = s > 0).
/// Boundaries are bisected to well below 1e-9 in F. Requires
/// resolution >= 100.
PhasePortrait phase_portrait(const ModelParams& params, int resolution,
                             int overshoot = 0);

/// Supremum of initial conditions that drain into the withdrawn state:
/// every F in (0, f_star] either plays (0,0) or has strictly negative drift
/// under the policy. Requires resolution >= 100.
struct TrapBasin {
  Probability f_star;
};
TrapBasin trap_basin(const ModelParams& params, int resolution,
                     int overshoot = 0);

struct DiagramCell {
  double alpha = 0.0;
  double f = 0.0;
  Strategy strategy;
  DriftSign drift_sign = DriftSign::kZero;
};

/// One cell per (alpha, f), alpha-major. Grids must be non-empty and sorted.
std::vector<DiagramCell> phase_diagram(double beta, double eps,
                                       const std::vector<double>& alpha_grid,
                                       const std::vector<double>& f_grid,
                                       int threads = 1);

struct CycleReport {
  bool detected = false;
  std::optional<double> period;
  double f_min = 0.0;
  double f_max = 0.0;
  std::vector<Strategy> strategy_sequence;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Looks for a repeating pattern of (old, new, quantized F) at switch times
/// after `transient`. Throws InsufficientDataError when fewer than two
/// switches remain and F is still moving.
CycleReport detect_cycle(const Trajectory& traj, double transient);

struct SweepPoint {
  double beta = 0.0;
  double f = 0.0;
  int tau_star = 0;
  int buffer = 0;
};

/// tau* and m* - tau* of the best response for each beta and each f above
/// that beta's trap basin. Points inside the basin are dropped.
std::vector<SweepPoint> redundancy_sweep(double alpha, double eps,
                                         const std::vector<double>& betas,
                                         const std::vector<double>& f_grid,
                                         int threads = 1);

}  // namespace ctrap
