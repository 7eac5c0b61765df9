#include "ctrap/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ctrap {

ModelParams::ModelParams(double alpha, double beta, double eps)
    : alpha_(alpha), beta_(beta), eps_(eps) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("alpha must be > 0");
  }
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("beta must lie in (0, 1)");
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("eps must be >= 0");
  }
}

double ModelParams::max_inputs() const {
  return std::pow(alpha_, -1.0 / (1.0 - beta_));
}

std::string to_string(const Strategy& s) {
  return "(" + std::to_string(s.m) + "," + std::to_string(s.tau) + ")";
}

double utility(const Strategy& s, Probability f, const ModelParams& p) {
  const double reward =
      s.tau == 0 ? 0.0
                 : binomial_tail(s.m, s.tau, f) * std::pow(s.tau, p.beta());
  return reward - p.alpha() * s.m;
}

double diagonal_bound(const ModelParams& p, Probability f) {
  const double log_f = std::log(f.value());
  const double b1 = p.beta() - 1.0;
  return b1 / log_f * lambert_w0(p.max_inputs() * log_f / b1);
}

double full_function_optimum(const ModelParams& p) {
  return std::pow(p.beta() / p.alpha(), 1.0 / (1.0 - p.beta()));
}

std::vector<Strategy> candidate_set(const ModelParams& p, Probability f) {
  if (f.value() == 0.0) return {{0, 0}};
  if (f.value() == 1.0) {
    const double gamma = full_function_optimum(p);
    const int lo = static_cast<int>(std::floor(gamma));
    const int hi = static_cast<int>(std::ceil(gamma));
    if (lo == hi) return {{lo, lo}};
    return {{lo, lo}, {hi, hi}};
  }

  const double m_cap = p.max_inputs();
  if (m_cap >= static_cast<double>(1 << 20)) {
    throw std::domain_error("candidate_set: alpha^{-1/(1-beta)} too large");
  }
  const int m_max = static_cast<int>(std::floor(m_cap));
  // The Lambert-W bound is strict in exact arithmetic; the relative slack
  // keeps a diagonal strategy whose utility is barely positive from being
  // dropped by rounding in the bound itself.
  const double diag = diagonal_bound(p, f) * (1.0 + 1e-12);

  std::vector<Strategy> out{{0, 0}};
  for (int m = 1; m <= m_max; ++m) {
    // 0 < tau < m < tau^beta / alpha  <=>  tau > (alpha m)^{1/beta}.
    // The predicate is monotone in tau: find its first tau, then take the rest.
    const double tau_floor = std::pow(p.alpha() * m, 1.0 / p.beta());
    int tau = std::max(1, static_cast<int>(std::floor(tau_floor)) - 1);
    while (tau < m && !(m < std::pow(tau, p.beta()) / p.alpha())) ++tau;
    for (; tau < m; ++tau) out.push_back({m, tau});
    if (m < diag) out.push_back({m, m});
  }
  return out;
}

namespace {

Strategy normalize(Strategy s) { return s.m == 0 ? Strategy{0, 0} : s; }

}  // namespace

BestResponseDetail best_response_detail(const ModelParams& p, Probability f) {
  BestResponseDetail d;
  if (f.value() == 1.0 && p.alpha() >= 1.0) return d;

  bool have_best = false;
  bool have_second = false;
  double second_utility = 0.0;
  // Candidates arrive in lexicographic order, so a strict comparison keeps
  // the smaller strategy on exact ties.
  const auto cands = candidate_set(p, f);
  std::vector<double> gain;  // tau^beta
  for (const Strategy& c : cands) {
    while (static_cast<int>(gain.size()) <= c.tau) {
      gain.push_back(gain.empty() ? 0.0 : std::pow(gain.size(), p.beta()));
    }
  }
  std::vector<double> row;
  int row_m = -1;
  for (const Strategy& raw : cands) {
    const Strategy s = normalize(raw);
    double u = -p.alpha() * s.m;
    if (s.tau > 0) {
      if (s.m != row_m) {
        row = binomial_tail_row(s.m, f);
        row_m = s.m;
      }
      u += row[s.tau] * gain[s.tau];
    }
    if (!have_best || u > d.best_utility) {
      if (have_best) {
        d.runner_up = d.best;
        second_utility = d.best_utility;
        have_second = true;
      }
      d.best = s;
      d.best_utility = u;
      have_best = true;
    } else if (s != d.best && (!have_second || u > second_utility)) {
      d.runner_up = s;
      second_utility = u;
      have_second = true;
    }
  }
  if (have_second) d.gap = d.best_utility - second_utility;
  return d;
}

Strategy best_response(const ModelParams& p, Probability f) {
  return best_response_detail(p, f).best;
}

Breakpoints analytic_breakpoints(const ModelParams& p) {
  Breakpoints b;
  b.f_exit_trap = Probability(std::min(p.alpha(), 1.0));
  const double disc = 1.0 - p.alpha() * std::pow(2.0, p.beta() + 2.0);
  if (disc >= 0.0) {
    b.f_11_22 = Probability(std::pow(2.0, -(p.beta() + 1.0)) *
                            (1.0 - std::sqrt(disc)));
  }
  if (p.alpha() <= 0.25) {
    b.f_11_21 = Probability(0.5 * (1.0 - std::sqrt(1.0 - 4.0 * p.alpha())));
  }
  return b;
}

}  // namespace ctrap
