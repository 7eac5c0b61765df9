#include "ctrap/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ctrap/parallel.hpp"

namespace ctrap {

namespace {

// Portrait and basin boundaries are bisected until the bracket is this
// narrow, far below the 1e-9 the segment labels need.
constexpr double kBisectionWidth = 1e-13;

// Cycle detection compares F at switch times on this lattice.
constexpr double kCycleQuantum = 1e-4;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Returns a point where pred flips, given pred(lo) && !pred(hi).
template <typename Pred>
std::pair<double, double> bisect(double lo, double hi, Pred&& pred) {
  while (hi - lo > kBisectionWidth) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pred(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, hi};
}

}  // namespace

std::string to_string(DriftSign s) {
  switch (s) {
    case DriftSign::kNegative:
      return "negative";
    case DriftSign::kZero:
      return "zero";
    case DriftSign::kPositive:
      return "positive";
    case DriftSign::kMixed:
      return "mixed";
  }
  return "mixed";
}

DriftSign sign_of(double value) {
  if (value > 0.0) return DriftSign::kPositive;
  if (value < 0.0) return DriftSign::kNegative;
  return DriftSign::kZero;
}

double drift(const Strategy& s, Probability f, double eps) {
  if (s.tau == 0) return 0.0;
  return binomial_tail(s.m, s.tau, f) - f.value() * (1.0 + eps);
}

std::string describe(const Policy& policy) {
  return std::visit(
      Overloaded{
          [](const BestResponsePolicy& p) {
            return "best_response(T=" + std::to_string(p.commitment) + ")";
          },
          [](const OvershootPolicy& p) {
            return "overshoot(s=" + std::to_string(p.s) + ")";
          },
          [](const FixedPolicy& p) {
            return "fixed" + to_string(p.strategy);
          },
      },
      policy);
}

Strategy overshoot_strategy(const ModelParams& p, Probability f, int s) {
  const Strategy br = best_response(p, f);
  return {br.m + s, br.tau + s};
}

Trajectory integrate(const ModelParams& params, Probability f0,
                     const Policy& policy, double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0) || !std::isfinite(t_end) || dt > t_end) {
    throw std::invalid_argument("integrate: need 0 < dt <= t_end");
  }
  std::visit(Overloaded{
                 [](const BestResponsePolicy& p) {
                   if (!(p.commitment >= 0.0)) {
                     throw std::invalid_argument("commitment T must be >= 0");
                   }
                 },
                 [](const OvershootPolicy& p) {
                   if (p.s < 0) {
                     throw std::invalid_argument("overshoot s must be >= 0");
                   }
                 },
                 [](const FixedPolicy& p) {
                   if (p.strategy.m < 0 || p.strategy.tau < 0) {
                     throw std::invalid_argument("fixed strategy must be >= 0");
                   }
                 },
             },
             policy);

  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  const double eps = params.eps();

  Trajectory traj;
  traj.policy = policy;
  traj.times.reserve(steps + 1);
  traj.f_values.reserve(steps + 1);
  traj.strategies.reserve(steps + 1);

  double f = f0.value();
  Strategy active;
  bool have_active = false;
  long next_update = 0;  // index of the next commitment boundary

  for (long k = 0; k < steps; ++k) {
    const double t = k * dt;
    const double h = (k + 1 == steps) ? t_end - t : dt;
    const Probability pf(f);

    Strategy s = std::visit(
        Overloaded{
            [&](const BestResponsePolicy& p) {
              if (p.commitment == 0.0) return best_response(params, pf);
              if (!have_active ||
                  t >= next_update * p.commitment - 1e-9 * dt) {
                while (next_update * p.commitment <= t + 1e-9 * dt) {
                  ++next_update;
                }
                return best_response(params, pf);
              }
              return active;
            },
            [&](const OvershootPolicy& p) {
              return overshoot_strategy(params, pf, p.s);
            },
            [&](const FixedPolicy& p) { return p.strategy; },
        },
        policy);

    if (have_active && s != active) {
      traj.switch_events.push_back({t, f, active, s});
    }
    active = s;
    have_active = true;

    traj.times.push_back(t);
    traj.f_values.push_back(f);
    traj.strategies.push_back(s);

    auto rhs = [&](double x) { return drift(s, Probability(clamp01(x)), eps); };
    const double k1 = rhs(f);
    const double k2 = rhs(f + 0.5 * h * k1);
    const double k3 = rhs(f + 0.5 * h * k2);
    const double k4 = rhs(f + h * k3);
    f = clamp01(f + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  }
  traj.times.push_back(t_end);
  traj.f_values.push_back(f);
  traj.strategies.push_back(active);
  return traj;
}

PhasePortrait phase_portrait(const ModelParams& params, int resolution,
                             int overshoot) {
  if (resolution < 100) {
    throw std::invalid_argument("phase_portrait: resolution must be >= 100");
  }
  if (overshoot < 0) throw std::invalid_argument("overshoot must be >= 0");
  auto policy_at = [&](double f) {
    return overshoot_strategy(params, Probability(f), overshoot);
  };

  PhasePortrait portrait{params, overshoot, {}};
  auto& segs = portrait.segments;

  double seg_lo = 0.0;
  double prev_f = 0.0;
  Strategy cur = policy_at(0.0);
  for (int i = 1; i <= resolution; ++i) {
    const double fi = static_cast<double>(i) / resolution;
    const Strategy si = policy_at(fi);
    // Several switches can fall inside one grid cell; peel them off left
    // to right until the strategy at the right end is reached.
    double a = prev_f;
    while (si != cur) {
      const Strategy from = cur;
      auto [lo, hi] =
          bisect(a, fi, [&](double x) { return policy_at(x) == from; });
      const double boundary = 0.5 * (lo + hi);
      segs.push_back({seg_lo, boundary, cur, DriftSign::kZero});
      seg_lo = boundary;
      cur = policy_at(hi);
      a = hi;
    }
    prev_f = fi;
  }
  segs.push_back({seg_lo, 1.0, cur, DriftSign::kZero});

  constexpr int kSamples = 10;
  for (auto& seg : segs) {
    bool pos = false, neg = false, zero = false;
    for (int j = 0; j < kSamples; ++j) {
      const double x = seg.f_lo + (j + 0.5) / kSamples * (seg.f_hi - seg.f_lo);
      const double d = drift(seg.strategy, Probability(x), params.eps());
      pos |= d > 0.0;
      neg |= d < 0.0;
      zero |= d == 0.0;
    }
    const int kinds = int(pos) + int(neg) + int(zero);
    if (kinds > 1) {
      seg.drift_sign = DriftSign::kMixed;
    } else if (pos) {
      seg.drift_sign = DriftSign::kPositive;
    } else if (neg) {
      seg.drift_sign = DriftSign::kNegative;
    } else {
      seg.drift_sign = DriftSign::kZero;
    }
  }
  return portrait;
}

TrapBasin trap_basin(const ModelParams& params, int resolution,
                     int overshoot) {
  if (resolution < 100) {
    throw std::invalid_argument("trap_basin: resolution must be >= 100");
  }
  if (overshoot < 0) throw std::invalid_argument("overshoot must be >= 0");
  auto trapped = [&](double f) {
    if (f <= 0.0) return true;  // F = 0 is absorbing under every policy
    const Probability pf(f);
    const Strategy s = overshoot_strategy(params, pf, overshoot);
    return s.withdrawn() || drift(s, pf, params.eps()) < 0.0;
  };
  for (int i = 1; i <= resolution; ++i) {
    const double fi = static_cast<double>(i) / resolution;
    if (!trapped(fi)) {
      const double prev = static_cast<double>(i - 1) / resolution;
      auto [lo, hi] = bisect(prev, fi, trapped);
      return {Probability(lo)};
    }
  }
  return {Probability(1.0)};
}

std::vector<DiagramCell> phase_diagram(double beta, double eps,
                                       const std::vector<double>& alpha_grid,
                                       const std::vector<double>& f_grid,
                                       int threads) {
  if (alpha_grid.empty() || f_grid.empty()) {
    throw std::invalid_argument("phase_diagram: empty grid");
  }
  if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end()) ||
      !std::is_sorted(f_grid.begin(), f_grid.end())) {
    throw std::invalid_argument("phase_diagram: grids must be sorted");
  }
  std::vector<ModelParams> rows;
  rows.reserve(alpha_grid.size());
  for (double a : alpha_grid) rows.emplace_back(a, beta, eps);

  const std::size_t nf = f_grid.size();
  std::vector<DiagramCell> cells(alpha_grid.size() * nf);
  parallel_for(cells.size(), threads, [&](std::size_t idx) {
    const ModelParams& p = rows[idx / nf];
    const Probability f(f_grid[idx % nf]);
    const Strategy s = best_response(p, f);
    cells[idx] = {p.alpha(), f.value(), s, sign_of(drift(s, f, eps))};
  });
  return cells;
}

CycleReport detect_cycle(const Trajectory& traj, double transient) {
  if (!(transient >= 0.0)) {
    throw std::invalid_argument("detect_cycle: transient must be >= 0");
  }
  if (traj.times.size() < 2 || traj.times.back() <= transient) {
    throw InsufficientDataError("detect_cycle: nothing after the transient");
  }
  const auto first = static_cast<std::size_t>(
      std::lower_bound(traj.times.begin(), traj.times.end(), transient) -
      traj.times.begin());

  CycleReport report;
  const auto [lo_it, hi_it] = std::minmax_element(
      traj.f_values.begin() + first, traj.f_values.end());
  report.f_min = *lo_it;
  report.f_max = *hi_it;

  std::vector<const SwitchEvent*> events;
  for (const auto& e : traj.switch_events) {
    if (e.time >= transient) events.push_back(&e);
  }

  if (events.size() < 2) {
    // Rate of change over the last unit of time (or the whole window).
    const std::size_t last = traj.times.size() - 1;
    std::size_t j = first;
    const double t_from = traj.times[last] - 1.0;
    while (j + 1 < last && traj.times[j] < t_from) ++j;
    if (j == last) j = first;
    const double span = traj.times[last] - traj.times[j];
    const double rate =
        span > 0.0 ? std::abs(traj.f_values[last] - traj.f_values[j]) / span
                   : 0.0;
    if (rate > 1e-8) {
      throw InsufficientDataError(
          "detect_cycle: fewer than two switches and F has not converged");
    }
    return report;
  }

  struct Token {
    Strategy old_s;
    Strategy new_s;
    long long q;
    bool operator==(const Token&) const = default;
  };
  std::vector<Token> tokens;
  tokens.reserve(events.size());
  for (const auto* e : events) {
    tokens.push_back({e->old_strategy, e->new_strategy,
                      std::llround(e->f / kCycleQuantum)});
  }

  const std::size_t n = tokens.size();
  for (std::size_t p = 1; p <= n / 2; ++p) {
    bool repeats = true;
    for (std::size_t i = n - p; i < n && repeats; ++i) {
      repeats = tokens[i] == tokens[i - p];
    }
    if (!repeats) continue;

    // Earliest start of the p-periodic suffix.
    std::size_t start = n - 2 * p;
    while (start > 0 && tokens[start - 1] == tokens[start - 1 + p]) --start;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t i = start + p; i < n; ++i) {
      total += events[i]->time - events[i - p]->time;
      ++count;
    }
    report.detected = true;
    report.period = total / static_cast<double>(count);
    for (std::size_t i = n - p; i < n; ++i) {
      report.strategy_sequence.push_back(tokens[i].new_s);
    }
    return report;
  }
  return report;
}

std::vector<SweepPoint> redundancy_sweep(double alpha, double eps,
                                         const std::vector<double>& betas,
                                         const std::vector<double>& f_grid,
                                         int threads) {
  if (betas.empty() || f_grid.empty()) {
    throw std::invalid_argument("redundancy_sweep: empty grid");
  }
  std::vector<std::vector<SweepPoint>> per_beta(betas.size());
  parallel_for(betas.size(), threads, [&](std::size_t b) {
    const ModelParams p(alpha, betas[b], eps);
    const double basin = trap_basin(p, 1000).f_star.value();
    for (double f : f_grid) {
      if (f <= basin) continue;
      const Strategy s = best_response(p, Probability(f));
      per_beta[b].push_back({betas[b], f, s.tau, s.buffer()});
    }
  });
  std::vector<SweepPoint> out;
  for (auto& v : per_beta) out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace ctrap
