#include "ctrap/io.hpp"

#include <fmt/format.h>

#include <cmath>

namespace ctrap {

std::string format_real(double x) {
  if (x == 0.0) return "0";  // no "-0"
  return fmt::format("{:.9g}", x);
}

void write_portrait_csv(std::ostream& os, const PhasePortrait& portrait) {
  os << "f_lo,f_hi,m,tau,sign\n";
  for (const auto& s : portrait.segments) {
    os << format_real(s.f_lo) << ',' << format_real(s.f_hi) << ','
       << s.strategy.m << ',' << s.strategy.tau << ',' << to_string(s.drift_sign)
       << '\n';
  }
}

void write_diagram_csv(std::ostream& os, const std::vector<DiagramCell>& cells) {
  os << "alpha,f,m,tau,sign\n";
  for (const auto& c : cells) {
    os << format_real(c.alpha) << ',' << format_real(c.f) << ','
       << c.strategy.m << ',' << c.strategy.tau << ',' << to_string(c.drift_sign)
       << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          std::size_t stride) {
  if (stride == 0) stride = 1;
  os << "t,f,m,tau\n";
  const std::size_t n = traj.times.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i % stride != 0 && i + 1 != n) continue;
    os << format_real(traj.times[i]) << ',' << format_real(traj.f_values[i])
       << ',' << traj.strategies[i].m << ',' << traj.strategies[i].tau << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points) {
  os << "beta,f,tau_star,buffer\n";
  for (const auto& p : points) {
    os << format_real(p.beta) << ',' << format_real(p.f) << ',' << p.tau_star
       << ',' << p.buffer << '\n';
  }
}

void write_ensemble_csv(std::ostream& os, const EnsembleSummary& summary) {
  os << "t,mean_f,sd_f,sem_f\n";
  for (std::size_t i = 0; i < summary.sample_times.size(); ++i) {
    os << format_real(summary.sample_times[i]) << ','
       << format_real(summary.mean_f[i]) << ',' << format_real(summary.sd_f[i])
       << ',' << format_real(summary.sem_f[i]) << '\n';
  }
}

void write_finals_csv(std::ostream& os, const EnsembleSummary& summary) {
  os << "replica,final_f\n";
  for (std::size_t i = 0; i < summary.final_f_samples.size(); ++i) {
    os << i << ',' << format_real(summary.final_f_samples[i]) << '\n';
  }
}

nlohmann::json to_json(const Strategy& s) { return {{"m", s.m}, {"tau", s.tau}}; }

nlohmann::json to_json(const Breakpoints& b) {
  nlohmann::json j;
  j["f_exit_trap"] = b.f_exit_trap.value();
  j["f_11_22"] = b.f_11_22 ? nlohmann::json(b.f_11_22->value()) : nlohmann::json();
  j["f_11_21"] = b.f_11_21 ? nlohmann::json(b.f_11_21->value()) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const CycleReport& c) {
  nlohmann::json seq = nlohmann::json::array();
  for (const auto& s : c.strategy_sequence) seq.push_back(to_json(s));
  return {{"detected", c.detected},
          {"period", c.period ? nlohmann::json(*c.period) : nlohmann::json()},
          {"f_min", c.f_min},
          {"f_max", c.f_max},
          {"strategy_sequence", seq}};
}

nlohmann::json to_json(const FitResult& fit, int skipped_rows) {
  auto finite_or_null = [](double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
  };
  nlohmann::json t = nlohmann::json::array();
  for (double v : fit.t_stats) t.push_back(finite_or_null(v));
  return {{"coefficients", fit.coefficients},
          {"std_errors", fit.std_errors},
          {"t_stats", t},
          {"p_values", fit.p_values},
          {"r_squared", fit.r_squared},
          {"n_obs", fit.n_obs},
          {"skipped_rows", skipped_rows}};
}

}  // namespace ctrap
