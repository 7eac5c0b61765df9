#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ctrap {

/// Absolute slack allowed when a computed value strays outside [0, 1].
/// Values within the slack are clamped; anything further out is an error.
inline constexpr double kProbabilityTolerance = 1e-12;

/// A real number in [0, 1].
class Probability {
 public:
  constexpr Probability() = default;
  /// Throws std::domain_error for NaN or values further than
  /// kProbabilityTolerance outside [0, 1]; clamps otherwise.
  explicit Probability(double value);

  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }

 private:
  double value_ = 0.0;
};

/// P[Binomial(m, f) >= tau].
///
/// Sums whichever tail is shorter in probability mass, starting from the
/// term closest to the mean and walking outward with the pmf ratio, so no
/// factorials are formed and no large cancellation occurs.
Probability binomial_tail(int m, int tau, Probability f);

/// P[Binomial(m, f) >= tau] for every tau = 0..m+1 in one O(m) pass.
/// Agrees with binomial_tail to rounding.
std::vector<double> binomial_tail_row(int m, Probability f);

/// Principal branch of the Lambert W function: the w >= -1 with w e^w = x.
/// Throws std::domain_error for x < -1/e - 1e-12.
double lambert_w0(double x);

/// Survival function P[T > t] of Student's t with `dof` degrees of freedom.
/// Throws std::domain_error for dof < 1.
Probability student_t_sf(double t, int dof);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
/// Only what student_t_sf needs; a, b > 0 and x in [0, 1].
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace ctrap
