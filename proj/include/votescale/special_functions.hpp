#pragma once

// Gamma / beta / regularized incomplete beta kernels.
//
// The incomplete beta has two evaluation paths. Integer shape parameters up to
// kMaxExactShape go through a binomial-tail sum, which is
// the hot path for majority-vote accuracy (a = b = (K+1)/2). Everything else
// uses a modified-Lentz continued fraction.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "votescale/errors.hpp"

namespace votescale {

inline constexpr double kIterationTolerance = 1e-12;
inline constexpr double kMaxExactShape = 500.0;

namespace detail {

inline void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw DomainError(std::string(what) + " must be positive and finite, got " +
                      std::to_string(v));
  }
}

// Lanczos approximation, g = 7, n = 9. Returns ln Gamma(z + 1) for z >= -0.5.
inline double lanczos_log_gamma_1p(double z) {
  static constexpr std::array<double, 9> kCoef = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr double g = 7.0;
  double sum = kCoef[0];
  for (std::size_t i = 1; i < kCoef.size(); ++i) {
    sum += kCoef[i] / (z + static_cast<double>(i));
  }
  const double t = z + g + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(sum);
}

// Stirling series, accurate to ~1e-14 for x >= 15.
inline double stirling_log_gamma(double x) {
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 + inv2 * (1.0 / 1188.0)))));
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

inline double log_gamma_unchecked(double x) {
  if (x < 0.5) return lanczos_log_gamma_1p(x) - std::log(x);
  if (x < 15.0) return lanczos_log_gamma_1p(x - 1.0);
  return stirling_log_gamma(x);
}

inline bool is_exact_shape(double v) {
  return v <= kMaxExactShape && v == std::floor(v);
}

// Pr[Binomial(n, x) >= a] with n = a + b - 1, for 0 < x < 1.
//
// Walks the pmf outward from the mode in ratios relative to the modal term,
// so no log-gamma prefactor (whose absolute error grows with n) enters. The
// smaller of the two tails is divided by the total and complemented if needed.
inline double binomial_upper_tail(double x, long a, long b) {
  const long n = a + b - 1;
  const double odds = x / (1.0 - x);
  const long mode = std::clamp(static_cast<long>(std::floor((n + 1) * x)), 0L, n);
  double upper = mode >= a ? 1.0 : 0.0;
  double lower = mode >= a ? 0.0 : 1.0;
  double t = 1.0;
  for (long j = mode; j < n && t > 0.0; ++j) {
    t *= static_cast<double>(n - j) / static_cast<double>(j + 1) * odds;
    (j + 1 >= a ? upper : lower) += t;
  }
  t = 1.0;
  for (long j = mode; j > 0 && t > 0.0; --j) {
    t *= static_cast<double>(j) / static_cast<double>(n - j + 1) / odds;
    (j - 1 >= a ? upper : lower) += t;
  }
  const double total = upper + lower;
  return upper <= lower ? upper / total : 1.0 - lower / total;
}

// Continued fraction for I_x(a, b), valid when x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr int max_iter = 20000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const double dm = static_cast<double>(m);
    const double m2 = 2.0 * dm;
    double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kIterationTolerance) {
      const double log_front = a * std::log(x) + b * std::log1p(-x) -
                               (log_gamma_unchecked(a) + log_gamma_unchecked(b) -
                                log_gamma_unchecked(a + b));
      return std::exp(log_front) * h / a;
    }
  }
  throw DomainError("reg_inc_beta: continued fraction did not converge");
}

}  // namespace detail

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
  detail::require_positive(x, "log_gamma argument");
  return detail::log_gamma_unchecked(x);
}

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
inline double log_beta(double a, double b) {
  detail::require_positive(a, "log_beta shape a");
  detail::require_positive(b, "log_beta shape b");
  return detail::log_gamma_unchecked(a) + detail::log_gamma_unchecked(b) -
         detail::log_gamma_unchecked(a + b);
}

/// Regularized incomplete beta I_x(a, b).
///
/// For integer a, b <= 500 this equals Pr[Binomial(a + b - 1, x) >= a] and is
/// summed exactly in log space; other shapes use a continued fraction with the
/// usual symmetry switch I_x(a, b) = 1 - I_{1-x}(b, a).
inline double reg_inc_beta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw DomainError("reg_inc_beta: x must lie in [0, 1], got " + std::to_string(x));
  }
  detail::require_positive(a, "reg_inc_beta shape a");
  detail::require_positive(b, "reg_inc_beta shape b");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  double result = 0.0;
  if (detail::is_exact_shape(a) && detail::is_exact_shape(b)) {
    result = detail::binomial_upper_tail(x, static_cast<long>(a), static_cast<long>(b));
  } else if (x < (a + 1.0) / (a + b + 2.0)) {
    result = detail::beta_continued_fraction(x, a, b);
  } else {
    result = 1.0 - detail::beta_continued_fraction(1.0 - x, b, a);
  }
  return std::clamp(result, 0.0, 1.0);
}

}  // namespace votescale
