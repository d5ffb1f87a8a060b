#pragma once

// Closed-form accuracy of Vote on binary queries and bi-level datasets, the
// landscape classifier, and the optimal number of calls.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "votescale/errors.hpp"
#include "votescale/population.hpp"
#include "votescale/special_functions.hpp"

namespace votescale {

/// How the accuracy at an even number of calls is defined.
///
/// TieBreak is the exact accuracy of majority vote with a uniformly random
/// tie-break, which is what the simulator produces; it makes F(2m) = F(2m-1).
/// BetaInterpolation evaluates I_p((K+1)/2, (K+1)/2) at half-integer shapes,
/// a smooth interpolation between odd K that the optimal-K scan uses.
enum class EvenKRule { TieBreak, BetaInterpolation };

struct CurvePoint {
  int k = 1;
  double accuracy = 0.0;
  std::optional<double> std_error;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Accuracy as a function of the number of calls, k strictly increasing.
class PerformanceCurve {
 public:
  PerformanceCurve() = default;
  explicit PerformanceCurve(std::vector<CurvePoint> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& pt = points_[i];
      if (pt.k < 1) throw InputError("curve k must be positive");
      if (i > 0 && pt.k <= points_[i - 1].k) {
        throw InputError("curve k values must be strictly increasing");
      }
      if (!(pt.accuracy >= 0.0 && pt.accuracy <= 1.0)) {
        throw DomainError("curve accuracy out of [0, 1] at k=" + std::to_string(pt.k));
      }
      if (pt.std_error && !(*pt.std_error >= 0.0)) {
        throw DomainError("curve stderr must be nonnegative at k=" + std::to_string(pt.k));
      }
    }
  }

  const std::vector<CurvePoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const CurvePoint& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

  friend bool operator==(const PerformanceCurve&, const PerformanceCurve&) = default;

 private:
  std::vector<CurvePoint> points_;
};

/// Accuracies closer than this count as tied when picking an optimal k, so
/// rounding noise on a flat curve cannot move the optimum.
inline constexpr double kAccuracyTieTolerance = 1e-13;

enum class LandscapeShape { MonotoneIncrease, MonotoneDecrease, InverseU, UShape, Flat };

constexpr std::string_view to_string(LandscapeShape s) {
  switch (s) {
    case LandscapeShape::MonotoneIncrease: return "MonotoneIncrease";
    case LandscapeShape::MonotoneDecrease: return "MonotoneDecrease";
    case LandscapeShape::InverseU: return "InverseU";
    case LandscapeShape::UShape: return "UShape";
    case LandscapeShape::Flat: return "Flat";
  }
  return "?";
}

namespace detail {

inline void require_sorted_distinct(std::span<const int> ks) {
  if (ks.empty()) throw InputError("k grid is empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw InputError("k values must be positive");
    if (i > 0 && ks[i] <= ks[i - 1]) {
      throw InputError("k values must be sorted and distinct");
    }
  }
}

inline void require_regular_bilevel(const BiLevelSpec& spec) {
  if (!(spec.p2() < 0.5 && spec.p1() > 0.5)) {
    throw DomainError("requires p2 < 1/2 < p1");
  }
  if (!(spec.alpha() > 0.0 && spec.alpha() < 1.0)) {
    throw DomainError("requires 0 < alpha < 1");
  }
}

// p1(1-p1) / (p2(1-p2)): the per-step decay ratio of the easy increments
// relative to the hard ones.
inline double variance_ratio(double p1, double p2) {
  return (p1 * (1.0 - p1)) / (p2 * (1.0 - p2));
}

}  // namespace detail

/// Accuracy of Vote with k calls on a binary query whose single call is
/// correct with probability p.
inline double vote_accuracy(double p, int k, EvenKRule rule = EvenKRule::TieBreak) {
  (void)Probability(p);
  if (k < 1) throw InputError("number of calls must be positive");
  if (k % 2 == 1) {
    const double half = (k + 1) / 2;
    return reg_inc_beta(p, half, half);
  }
  if (rule == EvenKRule::BetaInterpolation) {
    const double half = 0.5 * (k + 1);
    return reg_inc_beta(p, half, half);
  }
  // Pr[Bin(k, p) > k/2] + Pr[Bin(k, p) = k/2] / 2.
  const int m = k / 2;
  const double above = reg_inc_beta(p, m + 1, m);
  if (p == 0.0 || p == 1.0) return above;
  const double log_tie = log_gamma(k + 1.0) - 2.0 * log_gamma(m + 1.0) +
                         m * (std::log(p) + std::log1p(-p));
  return std::clamp(above + 0.5 * std::exp(log_tie), 0.0, 1.0);
}

/// alpha * F(p1, k) + (1 - alpha) * F(p2, k).
inline double bilevel_accuracy(const BiLevelSpec& spec, int k,
                               EvenKRule rule = EvenKRule::TieBreak) {
  const double a = spec.alpha();
  double acc = 0.0;
  if (a > 0.0) acc += a * vote_accuracy(spec.p1(), k, rule);
  if (a < 1.0) acc += (1.0 - a) * vote_accuracy(spec.p2(), k, rule);
  return std::clamp(acc, 0.0, 1.0);
}

/// Delta F(m): its sign is the sign of F(2m+1) - F(2m-1).
inline double delta_f(const BiLevelSpec& spec, int m) {
  detail::require_regular_bilevel(spec);
  if (m < 1) throw DomainError("delta_f requires m >= 1");
  const double a = spec.alpha();
  const double p1 = spec.p1();
  const double p2 = spec.p2();
  const double lead = a * (2.0 * p1 - 1.0) / ((1.0 - a) * (1.0 - 2.0 * p2));
  return lead * std::pow(detail::variance_ratio(p1, p2), m) - 1.0;
}

/// t = p2(1-p2)(1/2-p2) / (p1(1-p1)(p1-1/2)) + 1. Delta F(1) = 0 exactly when
/// alpha = 1 - 1/t.
inline double threshold_t(double p1, double p2) {
  (void)Probability(p1);
  (void)Probability(p2);
  if (!(p2 < 0.5 && p1 > 0.5)) throw DomainError("threshold_t requires p2 < 1/2 < p1");
  return p2 * (1.0 - p2) * (0.5 - p2) / (p1 * (1.0 - p1) * (p1 - 0.5)) + 1.0;
}

/// Shape of F(K) over odd K.
///
/// Follows the sign analysis of Delta F(m): with r = p1(1-p1)/(p2(1-p2)),
/// Delta F(m) + 1 is geometric in m, so the increments change sign at most
/// once. r < 1 (p1 + p2 > 1) ends decreasing, r > 1 ends increasing; the sign
/// of Delta F(1) decides whether there is a turn.
inline LandscapeShape landscape_shape(const BiLevelSpec& spec) {
  constexpr double zero_tol = 1e-12;
  const double a = spec.alpha();
  const double p1 = spec.p1();
  const double p2 = spec.p2();

  auto level_sign = [](double p) {
    if (p == 0.0 || p == 1.0 || p == 0.5) return 0;
    return p > 0.5 ? 1 : -1;
  };
  const int s1 = a > 0.0 ? level_sign(p1) : 0;
  const int s2 = a < 1.0 ? level_sign(p2) : 0;
  if (s1 >= 0 && s2 >= 0) {
    return (s1 + s2 == 0) ? LandscapeShape::Flat : LandscapeShape::MonotoneIncrease;
  }
  if (s1 <= 0 && s2 <= 0) return LandscapeShape::MonotoneDecrease;

  // Here 0 < alpha < 1 and p2 < 1/2 < p1.
  const double d1 = delta_f(spec, 1);
  if (std::fabs(p1 + p2 - 1.0) <= zero_tol) {
    if (std::fabs(d1) <= zero_tol) return LandscapeShape::Flat;
    return d1 > 0.0 ? LandscapeShape::MonotoneIncrease : LandscapeShape::MonotoneDecrease;
  }
  const double r = detail::variance_ratio(p1, p2);
  if (r < 1.0) return d1 > 0.0 ? LandscapeShape::InverseU : LandscapeShape::MonotoneDecrease;
  return d1 < 0.0 ? LandscapeShape::UShape : LandscapeShape::MonotoneIncrease;
}

/// K* = 2 log(alpha/(1-alpha) (2p1-1)/(1-2p2)) / log(p2(1-p2) / (p1(1-p1))).
/// Empty when p2 < 1/2 < p1, 0 < alpha < 1, p1 + p2 != 1 does not hold.
inline std::optional<double> continuous_optimal_k(const BiLevelSpec& spec) {
  const double a = spec.alpha();
  const double p1 = spec.p1();
  const double p2 = spec.p2();
  if (!(p2 < 0.5 && p1 > 0.5 && a > 0.0 && a < 1.0)) return std::nullopt;
  if (std::fabs(p1 + p2 - 1.0) <= 1e-12) return std::nullopt;
  const double denom = std::log((p2 * (1.0 - p2)) / (p1 * (1.0 - p1)));
  const double num = std::log(a / (1.0 - a) * (2.0 * p1 - 1.0) / (1.0 - 2.0 * p2));
  return 2.0 * num / denom;
}

struct OptimalK {
  int k = 1;                          // scan argmax, authoritative
  std::optional<double> continuous;   // closed-form K*, when defined
  std::optional<int> rounded;         // nearest integer to K*, clamped to >= 1
  bool cross_checked = false;         // InverseU regime with K* inside the scan range
  bool consistent = true;             // scan lands on floor(K*) or ceil(K*)
  std::vector<double> curve;          // accuracy at k = 1..k_max
};

/// argmax_{1 <= k <= k_max} F(k; D), ties (within kAccuracyTieTolerance)
/// resolved to the smallest k.
///
/// In the InverseU regime the closed-form K* is cross-checked against the scan:
/// the scan optimum must be one of the two integers bracketing K*.
inline OptimalK optimal_k(const BiLevelSpec& spec, int k_max,
                          EvenKRule rule = EvenKRule::BetaInterpolation) {
  if (k_max < 1) throw InputError("k_max must be positive");
  OptimalK out;
  out.curve.reserve(static_cast<std::size_t>(k_max));
  double best = -1.0;
  for (int k = 1; k <= k_max; ++k) {
    const double f = bilevel_accuracy(spec, k, rule);
    out.curve.push_back(f);
    if (f > best + kAccuracyTieTolerance) {
      best = f;
      out.k = k;
    }
  }
  out.continuous = continuous_optimal_k(spec);
  if (out.continuous) {
    out.rounded = std::max(1, static_cast<int>(std::lround(*out.continuous)));
    const bool inverse_u = landscape_shape(spec) == LandscapeShape::InverseU;
    if (inverse_u && *out.continuous <= static_cast<double>(k_max)) {
      out.cross_checked = true;
      const double lo = std::max(1.0, std::floor(*out.continuous));
      const double hi = std::max(1.0, std::ceil(*out.continuous));
      out.consistent = (out.k == static_cast<int>(lo) || out.k == static_cast<int>(hi));
    }
  }
  return out;
}

inline PerformanceCurve exact_curve(const BiLevelSpec& spec, std::span<const int> ks,
                                    EvenKRule rule = EvenKRule::TieBreak) {
  detail::require_sorted_distinct(ks);
  std::vector<CurvePoint> pts;
  pts.reserve(ks.size());
  for (int k : ks) pts.push_back({k, bilevel_accuracy(spec, k, rule), std::nullopt});
  return PerformanceCurve(std::move(pts));
}

inline std::vector<int> k_range(int k_min, int k_max, int step = 1) {
  std::vector<int> ks;
  for (int k = k_min; k <= k_max; k += step) ks.push_back(k);
  return ks;
}

}  // namespace votescale
