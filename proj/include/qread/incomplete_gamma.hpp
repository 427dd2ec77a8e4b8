#ifndef QREAD_INCOMPLETE_GAMMA_HPP
#define QREAD_INCOMPLETE_GAMMA_HPP

// Regularized incomplete gamma functions for integer shape, i.e. Poisson
// tail sums, and the chi-squared quantile used by the receiver test.

#include <cmath>
#include <cstdint>
#include <numbers>

#include "qread/errors.hpp"

namespace qread {

inline constexpr std::int64_t kMaxGammaShape = 100000;

namespace detail {

/// ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)].
inline double stirling_error(double n) {
  if (n <= 15.0) {
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    return std::lgamma(n + 1.0) - (n + 0.5) * std::log(n) + n - half_log_2pi;
  }
  const double n2 = n * n;
  return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0) / n2) / n2) / n2) / n;
}

/// k ln(k / x) + x - k without cancellation near k = x.
inline double poisson_deviance(double k, double x) {
  if (std::abs(k - x) < 0.1 * (k + x)) {
    const double v = (k - x) / (k + x);
    double s = (k - x) * v;
    double ej = 2.0 * k * v;
    const double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return k * std::log(k / x) + x - k;
}

}  // namespace detail

/// ln(e^{-x} x^k / k!).
inline double log_poisson_pmf(std::int64_t k, double x) {
  if (x == 0.0) return k == 0 ? 0.0 : -INFINITY;
  if (k == 0) return -x;
  const double kd = static_cast<double>(k);
  return -detail::stirling_error(kd) - detail::poisson_deviance(kd, x) - 0.5 * std::log(2.0 * std::numbers::pi * kd);
}

struct GammaTails {
  double lower = 0.0;  // P(m, x)
  double upper = 1.0;  // Q(m, x)
};

/// P(m, x) and Q(m, x) for integer m >= 1, each summed on the side where it
/// is the smaller tail so neither loses relative accuracy.
inline GammaTails regularized_gamma_tails(std::int64_t m, double x) {
  require(m >= 1, ErrorKind::InvalidInput, "gamma shape must be a positive integer");
  require(m <= kMaxGammaShape, ErrorKind::UnsupportedRange, "gamma shape above 1e5 is not supported");
  require(x >= 0.0 && !std::isnan(x), ErrorKind::InvalidInput, "gamma argument must be >= 0");
  if (x == 0.0) return {0.0, 1.0};
  if (std::isinf(x)) return {1.0, 0.0};
  GammaTails out;
  if (x < static_cast<double>(m)) {
    // P = sum_{k >= m} pmf(k); ratios x / (k + 1) < 1 shrink the terms.
    const double lead = log_poisson_pmf(m, x);
    double sum = 1.0;
    double term = 1.0;
    for (std::int64_t k = m + 1; k < m + 10000000; ++k) {
      term *= x / static_cast<double>(k);
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    out.lower = std::exp(lead) * sum;
    out.upper = 1.0 - out.lower;
  } else {
    // Q = sum_{k < m} pmf(k), summed downward from the largest term k = m - 1.
    const double lead = log_poisson_pmf(m - 1, x);
    double sum = 1.0;
    double term = 1.0;
    for (std::int64_t k = m - 1; k >= 1; --k) {
      term *= static_cast<double>(k) / x;
      sum += term;
      if (term < 1e-17 * sum) break;
    }
    out.upper = std::exp(lead) * sum;
    out.lower = 1.0 - out.upper;
  }
  return out;
}

/// Gamma(m, x) / Gamma(m) for integer m.
inline double regularized_upper_gamma(std::int64_t m, double x) { return regularized_gamma_tails(m, x).upper; }

/// gamma(m, x) / Gamma(m) for integer m.
inline double regularized_lower_gamma(std::int64_t m, double x) { return regularized_gamma_tails(m, x).lower; }

/// Q with Q(m, Q / 2) = phi: the upper-phi point of the shape-m, scale-2 gamma law.
inline double test_quantile(std::int64_t m, double phi) {
  require(phi > 0.0 && phi < 1.0, ErrorKind::InvalidInput, "significance level must lie in (0,1)");
  double lo = 0.0;
  double hi = static_cast<double>(m) + 1.0;
  int guard = 0;
  while (regularized_upper_gamma(m, hi) > phi) {
    lo = hi;
    hi *= 2.0;
    require(++guard < 200, ErrorKind::NumericalFailure, "quantile bracket search failed");
  }
  for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_upper_gamma(m, mid) > phi)
      lo = mid;
    else
      hi = mid;
  }
  require(hi - lo <= 1e-10 * hi, ErrorKind::NumericalFailure, "quantile bisection did not converge");
  return lo + hi;  // 2 * midpoint
}

}  // namespace qread

#endif  // QREAD_INCOMPLETE_GAMMA_HPP
