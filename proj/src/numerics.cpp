#include "ctrap/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace ctrap {

Probability::Probability(double value) {
  if (std::isnan(value) || value < -kProbabilityTolerance ||
      value > 1.0 + kProbabilityTolerance) {
    throw std::domain_error("probability out of range: " +
                            std::to_string(value));
  }
  value_ = std::clamp(value, 0.0, 1.0);
}

namespace {

// log(n!) - log(sqrt(2 pi n) (n/e)^n), the error of Stirling's formula.
double stirling_error(double n) {
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  if (n <= 15.0) {
    if (n == 0.0) return 0.0;
    return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n -
           0.5 * std::log(2.0 * std::numbers::pi);
  }
  const double nn = n * n;
  if (n > 500) return (s0 - s1 / nn) / n;
  if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / n;
  if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n;
}

// Deviance term x log(x / np) + np - x, evaluated by series near x = np.
double deviance(double x, double np) {
  if (std::abs(x - np) < 0.1 * (x + np)) {
    double v = (x - np) / (x + np);
    double s = (x - np) * v;
    double ej = 2.0 * x * v;
    const double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double next = s + ej / (2 * j + 1);
      if (next == s) return next;
      s = next;
    }
    return s;
  }
  return x * std::log(x / np) + np - x;
}

// Binomial pmf with relative accuracy near machine precision for large n.
double binomial_pmf(int k, int n, double p, double q) {
  if (k == 0) return std::exp(n * std::log1p(-p));
  if (k == n) return std::exp(n * std::log(p));
  const double x = k;
  const double nd = n;
  const double lc = stirling_error(nd) - stirling_error(x) -
                    stirling_error(nd - x) - deviance(x, nd * p) -
                    deviance(nd - x, nd * q);
  const double lf = std::log(2.0 * std::numbers::pi) + std::log(x) +
                    std::log1p(-x / nd);
  return std::exp(lc - 0.5 * lf);
}

// I_x(a, b) by the modified Lentz continued fraction, with y = 1 - x passed
// separately so callers can avoid forming it by subtraction.
double incomplete_beta_cf(double a, double b, double x, double y) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  const double log_front = a * std::log(x) + b * std::log(y) -
                           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  return std::exp(log_front) * h / a;
}

double incomplete_beta(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) return incomplete_beta_cf(a, b, x, y);
  return 1.0 - incomplete_beta_cf(b, a, y, x);
}

}  // namespace

Probability binomial_tail(int m, int tau, Probability fp) {
  if (m < 0 || tau < 0) {
    throw std::invalid_argument("binomial_tail: negative m or tau");
  }
  const double f = fp.value();
  if (tau == 0) return Probability(1.0);
  if (tau > m) return Probability(0.0);
  if (f == 0.0) return Probability(0.0);
  if (f == 1.0) return Probability(1.0);
  if (tau == m) return Probability(std::pow(f, m));

  const double q = 1.0 - f;
  const double odds = f / q;
  const bool upper = tau > m * f;
  // Terms decrease monotonically away from the mean in both directions.
  int k = upper ? tau : tau - 1;
  double term = binomial_pmf(k, m, f, q);
  double sum = 0.0;
  if (upper) {
    for (; k <= m && term > 0.0; ++k) {
      sum += term;
      if (term < sum * 1e-20) break;
      term *= static_cast<double>(m - k) / (k + 1.0) * odds;
    }
    return Probability(std::min(sum, 1.0));
  }
  for (; k >= 0 && term > 0.0; --k) {
    sum += term;
    if (term < sum * 1e-20) break;
    term *= static_cast<double>(k) / (m - k + 1.0) / odds;
  }
  return Probability(std::max(0.0, 1.0 - sum));
}

std::vector<double> binomial_tail_row(int m, Probability fp) {
  if (m < 0) throw std::invalid_argument("binomial_tail_row: negative m");
  const double f = fp.value();
  std::vector<double> tail(m + 2, 0.0);
  tail[0] = 1.0;
  if (m == 0) return tail;
  if (f == 0.0) return tail;
  if (f == 1.0) {
    std::fill(tail.begin(), tail.end() - 1, 1.0);
    return tail;
  }

  // pmf from the mode outward, so nothing underflows before it matters.
  const double q = 1.0 - f;
  const double odds = f / q;
  const int mode = std::clamp(static_cast<int>(std::floor((m + 1) * f)), 0, m);
  std::vector<double> pmf(m + 1, 0.0);
  pmf[mode] = binomial_pmf(mode, m, f, q);
  for (int k = mode; k < m && pmf[k] > 0.0; ++k) {
    pmf[k + 1] = pmf[k] * static_cast<double>(m - k) / (k + 1.0) * odds;
  }
  for (int k = mode; k > 0 && pmf[k] > 0.0; --k) {
    pmf[k - 1] = pmf[k] * static_cast<double>(k) / (m - k + 1.0) / odds;
  }

  // Same split as binomial_tail: short side summed, long side complemented.
  const double mean = m * f;
  double upper = 0.0;
  for (int tau = m; tau >= 1 && tau > mean; --tau) {
    upper += pmf[tau];
    tail[tau] = std::min(upper, 1.0);
  }
  double lower = 0.0;
  for (int tau = 1; tau <= m && tau <= mean; ++tau) {
    lower += pmf[tau - 1];
    tail[tau] = std::max(0.0, 1.0 - lower);
  }
  return tail;
}

double lambert_w0(double x) {
  constexpr double inv_e = 0.36787944117144233;
  if (std::isnan(x) || x < -inv_e - 1e-12) {
    throw std::domain_error("lambert_w0: argument below -1/e");
  }
  if (x <= -inv_e) return -1.0;
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w;
  if (x < -0.25) {
    // Branch-point series in p = sqrt(2 (e x + 1)).
    const double p = std::sqrt(2.0 * (std::numbers::e * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < 3.0) {
    w = std::log1p(x);
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  // Halley on w - x e^{-w} (w e^w - x scaled by e^{-w}, overflow-free).
  for (int i = 0; i < 50; ++i) {
    const double g = w - x * std::exp(-w);
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double step = g / (wp1 - (w + 2.0) * g / (2.0 * wp1));
    w -= step;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(w))) break;
  }
  return std::max(w, -1.0);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error("regularized_incomplete_beta: bad arguments");
  }
  return incomplete_beta(a, b, x, 1.0 - x);
}

Probability student_t_sf(double t, int dof) {
  if (dof < 1) throw std::domain_error("student_t_sf: dof must be >= 1");
  if (std::isnan(t)) throw std::domain_error("student_t_sf: t is NaN");
  if (t == 0.0) return Probability(0.5);
  if (std::isinf(t)) return Probability(t > 0 ? 0.0 : 1.0);
  const double n = dof;
  const double t2 = t * t;
  // P[|T| > |t|] = I_{n/(n+t^2)}(n/2, 1/2).
  const double two_sided =
      incomplete_beta(0.5 * n, 0.5, n / (n + t2), t2 / (n + t2));
  const double upper = 0.5 * two_sided;
  return Probability(t > 0 ? upper : 1.0 - upper);
}

}  // namespace ctrap
