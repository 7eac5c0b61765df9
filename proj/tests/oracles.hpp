#pragma once

// Brute-force reference implementations used only by tests. Nothing here
// calls into the library's numerics.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

/// tail[m][tau] = P[Bin(m, f) >= tau] for 0 <= tau <= m <= max_m, built by
/// pmf convolution one trial at a time.
inline std::vector<std::vector<long double>> tail_table(int max_m, double f) {
  std::vector<std::vector<long double>> tail(max_m + 1);
  std::vector<long double> pmf{1.0L};
  const long double p = f, q = 1.0L - p;
  for (int m = 0; m <= max_m; ++m) {
    if (m > 0) {
      std::vector<long double> next(m + 1, 0.0L);
      for (int k = 0; k < m; ++k) {
        next[k] += pmf[k] * q;
        next[k + 1] += pmf[k] * p;
      }
      pmf = std::move(next);
    }
    tail[m].assign(m + 2, 0.0L);
    for (int k = m; k >= 0; --k) tail[m][k] = tail[m][k + 1] + pmf[k];
  }
  return tail;
}

/// Sum over all 2^m outcomes.
inline double enumerate_tail(int m, int tau, double f) {
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    const int k = __builtin_popcount(mask);
    if (k >= tau) total += std::pow(f, k) * std::pow(1.0 - f, m - k);
  }
  return total;
}

struct Argmax {
  int m = 0;
  int tau = 0;
  long double utility = 0.0L;
};

/// Exhaustive argmax of P tau^beta - alpha m over 0 <= tau <= m <= box,
/// scanned in (m, tau) order with strict improvement; (0, tau) -> (0, 0).
inline Argmax brute_best_response(double alpha, double beta, double f, int box) {
  const auto tail = tail_table(box, f);
  Argmax best{0, 0, 0.0L};
  bool first = true;
  for (int m = 0; m <= box; ++m) {
    for (int tau = 0; tau <= m; ++tau) {
      const long double gain = tau == 0 ? 0.0L : std::pow((long double)tau, (long double)beta);
      const long double u = tail[m][tau] * gain - (long double)alpha * m;
      if (first || u > best.utility) {
        best = {m, tau, u};
        first = false;
      }
    }
  }
  if (best.m == 0) best.tau = 0;
  return best;
}

// Saturates at INT_MAX for parameter corners where the box is astronomically large.
inline int brute_box(double alpha, double beta) {
  const double box = std::ceil(std::pow(alpha, -1.0 / (1.0 - beta)));
  return box >= 2147483647.0 ? 2147483647 : static_cast<int>(box);
}

inline double t_density(double x, int dof) {
  const double n = dof;
  const double lc = std::lgamma((n + 1) / 2) - std::lgamma(n / 2) - 0.5 * std::log(n * M_PI);
  return std::exp(lc - (n + 1) / 2 * std::log1p(x * x / n));
}

/// P[T > t] by composite Simpson after mapping [t, inf) onto [0, 1) with
/// x = t + y / (1 - y).
inline double t_upper_simpson(double t, int dof, int panels = 200000) {
  const double end = 1.0 - 1e-9;
  auto g = [&](double y) {
    const double d = 1.0 - y;
    return t_density(t + y / d, dof) / (d * d);
  };
  const double h = end / panels;
  double s = g(0.0) + g(end);
  for (int i = 1; i < panels; ++i) s += g(i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace oracle
