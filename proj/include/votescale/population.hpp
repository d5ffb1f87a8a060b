#pragma once

// Query model: answer distributions, filters, difficulty indicators and the
// bi-level synthetic dataset.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "votescale/errors.hpp"

namespace votescale {

inline constexpr double kProbabilitySumTolerance = 1e-9;

/// A real number in [0, 1].
class Probability {
 public:
  constexpr Probability() = default;
  explicit Probability(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw DomainError("probability out of [0, 1]: " + std::to_string(value));
    }
  }
  constexpr double value() const { return value_; }
  constexpr operator double() const { return value_; }

 private:
  double value_ = 0.0;
};

/// Categorical distribution of a single generator call on one query, plus the
/// index of the true answer.
class AnswerDistribution {
 public:
  AnswerDistribution(std::vector<std::string> labels, std::vector<double> probs,
                     std::size_t true_index)
      : labels_(std::move(labels)), probs_(std::move(probs)), true_index_(true_index) {
    if (labels_.size() < 2) throw InputError("answer space needs at least two labels");
    if (labels_.size() != probs_.size()) {
      throw InputError("labels and probabilities differ in length");
    }
    if (true_index_ >= labels_.size()) throw InputError("true_index out of range");
    std::unordered_set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size()) throw InputError("answer labels must be distinct");
    double total = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("answer probability out of [0, 1]");
      total += p;
    }
    if (std::fabs(total - 1.0) > kProbabilitySumTolerance) {
      throw DomainError("answer probabilities sum to " + std::to_string(total));
    }
  }

  /// Two-answer space {"correct", "incorrect"} with the first one true.
  static AnswerDistribution binary(double p_correct) {
    const Probability p(p_correct);
    return AnswerDistribution({"correct", "incorrect"}, {p.value(), 1.0 - p.value()}, 0);
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t true_index() const { return true_index_; }
  std::size_t size() const { return labels_.size(); }
  double p_true() const { return probs_[true_index_]; }
  const std::string& true_label() const { return labels_[true_index_]; }

 private:
  std::vector<std::string> labels_;
  std::vector<double> probs_;
  std::size_t true_index_;
};

/// Filter abstracted to the probability that it keeps a correct answer and the
/// probability that it keeps an incorrect one.
struct FilterModel {
  Probability keep_correct;
  Probability keep_incorrect;
};

/// D_{alpha, p1, p2}: a fraction alpha of queries answered correctly per call
/// with probability p1, the rest with probability p2. Stored with p1 >= p2.
class BiLevelSpec {
 public:
  BiLevelSpec(double alpha, double p1, double p2)
      : alpha_(alpha), p1_(std::max(p1, p2)), p2_(std::min(p1, p2)) {
    // Validate the raw values through the Probability constructors.
    (void)Probability(p1);
    (void)Probability(p2);
  }

  double alpha() const { return alpha_; }
  double p1() const { return p1_; }
  double p2() const { return p2_; }

 private:
  Probability alpha_;
  Probability p1_;
  Probability p2_;
};

/// Signed difficulty d(x): positive means more calls drive accuracy to 0,
/// negative means they drive it to 1.
class DifficultyIndicator {
 public:
  explicit DifficultyIndicator(double value) : value_(value) {
    if (!(std::fabs(value) <= 1.0 + 1e-12)) {
      throw DomainError("difficulty indicator out of [-1, 1]: " + std::to_string(value));
    }
    value_ = std::clamp(value, -1.0, 1.0);
  }
  double value() const { return value_; }

 private:
  double value_;
};

inline DifficultyIndicator difficulty_vote(const AnswerDistribution& dist) {
  double best_wrong = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (i != dist.true_index()) best_wrong = std::max(best_wrong, dist.probs()[i]);
  }
  return DifficultyIndicator(best_wrong - dist.p_true());
}

/// Answer distribution conditioned on the filter keeping the answer.
inline AnswerDistribution kept_posterior(const AnswerDistribution& dist,
                                         const FilterModel& filter) {
  const double kc = filter.keep_correct;
  const double ki = filter.keep_incorrect;
  std::vector<double> weighted(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    weighted[i] = dist.probs()[i] * (i == dist.true_index() ? kc : ki);
  }
  const double kept = std::accumulate(weighted.begin(), weighted.end(), 0.0);
  if (!(kept > 0.0)) {
    throw DegenerateFilterError("filter keeps no answer with positive probability");
  }
  for (double& w : weighted) w /= kept;
  return AnswerDistribution(dist.labels(), std::move(weighted), dist.true_index());
}

inline DifficultyIndicator difficulty_filter_vote(const AnswerDistribution& dist,
                                                  const FilterModel& filter) {
  return difficulty_vote(kept_posterior(dist, filter));
}

/// lim_{K -> inf} accuracy: 0 for difficult queries, 1 for easy ones.
inline Probability asymptotic_accuracy(DifficultyIndicator d) {
  if (d.value() == 0.0) {
    throw TieAtInfinityError("difficulty indicator is zero; limit accuracy undefined");
  }
  return Probability(d.value() > 0.0 ? 0.0 : 1.0);
}

/// Whether Filter-Vote has a strictly lower difficulty than Vote on a binary
/// query. Indicator differences within 1e-12 count as equal.
inline bool filter_helps(const AnswerDistribution& dist, const FilterModel& filter) {
  if (dist.size() != 2) {
    throw UnsupportedError("filter_helps is defined for binary answer spaces only");
  }
  if (!(dist.p_true() > 0.0 && dist.p_true() < 1.0)) {
    throw DomainError("filter_helps requires 0 < Pr[true answer] < 1");
  }
  const double dv = difficulty_vote(dist).value();
  const double df = difficulty_filter_vote(dist, filter).value();
  return df < dv - 1e-12;
}

}  // namespace votescale
