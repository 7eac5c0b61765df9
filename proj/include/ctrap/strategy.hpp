#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

#include "ctrap/numerics.hpp"

namespace ctrap {

/// Cost per attempted input (alpha > 0), returns-to-complexity exponent
/// (0 < beta < 1) and exogenous failure rate (eps >= 0).
class ModelParams {
 public:
  /// Throws std::invalid_argument when any parameter is out of range.
  ModelParams(double alpha, double beta, double eps = 0.0);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double eps() const { return eps_; }

  /// alpha^{-1/(1-beta)}: no best response with m > 0 reaches this many
  /// attempted inputs.
  double max_inputs() const;

 private:
  double alpha_;
  double beta_;
  double eps_;
};

/// m attempted inputs, of which tau must be delivered for production to
/// succeed.
struct Strategy {
  int m = 0;
  int tau = 0;

  constexpr int buffer() const { return m - tau; }
  constexpr bool withdrawn() const { return m == 0 && tau == 0; }

  friend constexpr auto operator<=>(const Strategy&, const Strategy&) = default;
};

std::string to_string(const Strategy& s);

/// P[Bin(m, f) >= tau] tau^beta - alpha m, with 0^beta taken as 0.
double utility(const Strategy& s, Probability f, const ModelParams& p);

/// Every strategy that can be a best response at f, sorted by (m, tau).
///
/// f = 0 gives {(0,0)}; f = 1 gives the floor and ceiling of
/// gamma = (beta/alpha)^{1/(1-beta)} on the diagonal; otherwise (0,0) plus
/// all 0 < tau < m < tau^beta / alpha with m <= alpha^{-1/(1-beta)}, plus
/// the diagonal m = tau below the Lambert-W bound.
std::vector<Strategy> candidate_set(const ModelParams& p, Probability f);

/// Utility-maximizing candidate. Exact ties go to the lexicographically
/// smaller (m, tau); (0, tau) collapses to (0, 0).
Strategy best_response(const ModelParams& p, Probability f);

/// Best response with the runner-up and the utility gap between them, for
/// diagnosing near-ties.
struct BestResponseDetail {
  Strategy best;
  double best_utility = 0.0;
  std::optional<Strategy> runner_up;
  double gap = 0.0;
};
BestResponseDetail best_response_detail(const ModelParams& p, Probability f);

/// Diagonal bound: m = tau > 0 can beat (0,0) only when m is below this.
/// Defined for 0 < f < 1.
double diagonal_bound(const ModelParams& p, Probability f);

/// gamma = (beta/alpha)^{1/(1-beta)}, the continuous optimum of
/// tau^beta - alpha tau.
double full_function_optimum(const ModelParams& p);

struct Breakpoints {
  /// Indifference between (1,1) and (0,0): f = alpha, clamped to 1.
  Probability f_exit_trap;
  /// Closed form 2^{-(beta+1)} (1 - sqrt(1 - alpha 2^{beta+2})); absent when
  /// the discriminant is negative.
  std::optional<Probability> f_11_22;
  /// Indifference between (1,1) and (2,1), (1 - sqrt(1 - 4 alpha)) / 2,
  /// which is where the best response first carries a buffer. Absent for
  /// alpha > 1/4.
  std::optional<Probability> f_11_21;
};

Breakpoints analytic_breakpoints(const ModelParams& p);

}  // namespace ctrap
