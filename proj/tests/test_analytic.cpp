#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "oracles.hpp"
#include "paper_table.hpp"
#include "votescale/analytic.hpp"

namespace vs = votescale;
using vs::EvenKRule;
using vs::LandscapeShape;

TEST(VoteAccuracy, Examples) {
  for (double p : {0.0, 0.13, 0.5, 0.77, 1.0}) {
    EXPECT_NEAR(vs::vote_accuracy(p, 1), p, 1e-15);
    EXPECT_NEAR(vs::vote_accuracy(p, 2), p, 1e-15);
  }
  for (int k = 1; k <= 40; ++k) EXPECT_NEAR(vs::vote_accuracy(0.5, k), 0.5, 1e-12);
  EXPECT_NEAR(vs::vote_accuracy(0.85, 3), 0.93925, 1e-12);
}

TEST(VoteAccuracy, MatchesEnumeration) {
  for (int k = 1; k <= 16; ++k) {
    for (double p : {0.05, 0.3, 0.45, 0.5, 0.62, 0.9}) {
      EXPECT_NEAR(vs::vote_accuracy(p, k), vs::oracle::enumerate_vote_accuracy(p, k), 1e-12)
          << "p=" << p << " k=" << k;
    }
  }
}

TEST(VoteAccuracy, EvenKCollapsesUnderTieBreak) {
  // A tie at 2m is a coin flip, which is what dropping one of 2m votes does.
  for (int m = 1; m <= 30; ++m) {
    for (double p : {0.1, 0.35, 0.6, 0.95}) {
      EXPECT_NEAR(vs::vote_accuracy(p, 2 * m), vs::vote_accuracy(p, 2 * m - 1), 1e-12);
    }
  }
}

TEST(VoteAccuracy, BetaInterpolationAgreesAtOddKAndLiesBetween) {
  for (double p : {0.2, 0.7}) {
    for (int k = 1; k <= 41; k += 2) {
      EXPECT_EQ(vs::vote_accuracy(p, k, EvenKRule::BetaInterpolation), vs::vote_accuracy(p, k));
    }
    for (int k = 2; k <= 40; k += 2) {
      const double lo = vs::vote_accuracy(p, k - 1);
      const double hi = vs::vote_accuracy(p, k + 1);
      const double mid = vs::vote_accuracy(p, k, EvenKRule::BetaInterpolation);
      EXPECT_GE(mid, std::min(lo, hi) - 1e-15);
      EXPECT_LE(mid, std::max(lo, hi) + 1e-15);
    }
  }
}

TEST(VoteAccuracy, Limits) {
  for (double p : {0.6, 0.75, 0.95}) EXPECT_GT(vs::vote_accuracy(p, 1001), 1.0 - 1e-6);
  for (double p : {0.05, 0.25, 0.4}) EXPECT_LT(vs::vote_accuracy(p, 1001), 1e-6);
}

TEST(VoteAccuracy, RejectsBadInput) {
  EXPECT_THROW(vs::vote_accuracy(0.5, 0), vs::InputError);
  EXPECT_THROW(vs::vote_accuracy(1.5, 3), vs::DomainError);
}

TEST(BilevelAccuracy, Examples) {
  const vs::BiLevelSpec a(0.4, 0.85, 0.4);
  EXPECT_NEAR(vs::bilevel_accuracy(a, 1), 0.4 * 0.85 + 0.6 * 0.4, 1e-15);
  EXPECT_NEAR(vs::bilevel_accuracy(a, 3), 0.58690, 1e-12);
  EXPECT_NEAR(vs::bilevel_accuracy(vs::BiLevelSpec(0.5, 0.75, 0.4), 3), 0.597875, 1e-12);
}

TEST(DeltaF, Examples) {
  const vs::BiLevelSpec a(0.4, 0.85, 0.4);
  EXPECT_NEAR(vs::delta_f(a, 1), (2.0 / 3.0) * 3.5 * 0.53125 - 1.0, 1e-12);
  EXPECT_NEAR(vs::delta_f(a, 1), 0.2395833333333333, 1e-12);
  EXPECT_NEAR(vs::delta_f(a, 200), -1.0, 1e-12);

  // At alpha = 1 - 1/t the first increment vanishes.
  for (auto [p1, p2] : {std::pair{0.85, 0.4}, {0.85, 0.1}, {0.7, 0.2}}) {
    const double alpha = 1.0 - 1.0 / vs::threshold_t(p1, p2);
    EXPECT_NEAR(vs::delta_f(vs::BiLevelSpec(alpha, p1, p2), 1), 0.0, 1e-12);
  }
}

TEST(DeltaF, DomainErrors) {
  EXPECT_THROW(vs::delta_f(vs::BiLevelSpec(0.0, 0.8, 0.3), 1), vs::DomainError);
  EXPECT_THROW(vs::delta_f(vs::BiLevelSpec(0.5, 0.8, 0.6), 1), vs::DomainError);
  EXPECT_THROW(vs::delta_f(vs::BiLevelSpec(0.5, 0.8, 0.3), 0), vs::DomainError);
}

TEST(ThresholdT, Examples) {
  EXPECT_NEAR(vs::threshold_t(0.85, 0.4), 0.024 / 0.044625 + 1.0, 1e-12);
  EXPECT_NEAR(vs::threshold_t(0.85, 0.4), 1.537815126, 1e-9);
  EXPECT_NEAR(1.0 - 1.0 / vs::threshold_t(0.85, 0.4), 0.349726776, 1e-6);
  EXPECT_NEAR(vs::threshold_t(0.85, 0.1), 1.806722689, 1e-9);
  EXPECT_NEAR(1.0 - 1.0 / vs::threshold_t(0.85, 0.1), 0.4465116279, 1e-9);
  for (double p1 : {0.55, 0.7, 0.99}) EXPECT_NEAR(vs::threshold_t(p1, 1.0 - p1), 2.0, 1e-12);
  EXPECT_THROW(vs::threshold_t(0.4, 0.3), vs::DomainError);
}

TEST(LandscapeShape, PublishedNarrative) {
  EXPECT_EQ(vs::landscape_shape({0.6, 0.85, 0.1}), LandscapeShape::MonotoneIncrease);
  EXPECT_EQ(vs::landscape_shape({0.4, 0.85, 0.1}), LandscapeShape::UShape);
  EXPECT_EQ(vs::landscape_shape({0.4, 0.85, 0.4}), LandscapeShape::InverseU);
  EXPECT_EQ(vs::landscape_shape({0.2, 0.85, 0.4}), LandscapeShape::MonotoneDecrease);
}

TEST(LandscapeShape, DegenerateInputs) {
  EXPECT_EQ(vs::landscape_shape({1.0, 0.7, 0.2}), LandscapeShape::MonotoneIncrease);
  EXPECT_EQ(vs::landscape_shape({0.0, 0.7, 0.2}), LandscapeShape::MonotoneDecrease);
  EXPECT_EQ(vs::landscape_shape({1.0, 0.5, 0.5}), LandscapeShape::Flat);
  EXPECT_EQ(vs::landscape_shape({0.5, 0.7, 0.3}), LandscapeShape::Flat);
  EXPECT_EQ(vs::landscape_shape({0.6, 0.7, 0.3}), LandscapeShape::MonotoneIncrease);
  EXPECT_EQ(vs::landscape_shape({0.4, 0.7, 0.3}), LandscapeShape::MonotoneDecrease);
  EXPECT_EQ(vs::landscape_shape({0.5, 0.9, 0.7}), LandscapeShape::MonotoneIncrease);
  EXPECT_EQ(vs::landscape_shape({0.5, 0.3, 0.1}), LandscapeShape::MonotoneDecrease);
}

TEST(LandscapeShape, AgreesWithSignInspectionOnCoarseGrid) {
  const auto odd = vs::k_range(1, 201, 2);
  int checked = 0;
  for (double alpha = 0.1; alpha < 0.95; alpha += 0.2) {
    for (double p1 = 0.55; p1 < 0.96; p1 += 0.1) {
      for (double p2 = 0.05; p2 < 0.46; p2 += 0.1) {
        const vs::BiLevelSpec spec(alpha, p1, p2);
        const double turn = vs::oracle::bilevel_turn_index(alpha, p1, p2);
        if (turn > 100) continue;  // turn lies past the inspected window
        std::vector<double> values;
        for (const auto& pt : vs::exact_curve(spec, odd)) values.push_back(pt.accuracy);
        EXPECT_EQ(vs::to_string(vs::landscape_shape(spec)),
                  vs::oracle::shape_by_sign_inspection(values))
            << alpha << " " << p1 << " " << p2;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(DeltaF, RecurrenceConsistency) {
  for (double alpha : {0.2, 0.5, 0.8}) {
    for (auto [p1, p2] : {std::pair{0.85, 0.4}, {0.65, 0.1}, {0.95, 0.45}}) {
      const vs::BiLevelSpec spec(alpha, p1, p2);
      for (int m = 1; m <= 50; ++m) {
        const double lhs =
            vs::bilevel_accuracy(spec, 2 * m + 1) - vs::bilevel_accuracy(spec, 2 * m - 1);
        const long double scale = (1 - alpha) * std::pow((long double)p2 * (1 - p2), m) *
                                  (1 - 2.0L * p2) / (m * vs::oracle::beta_integer(m, m));
        EXPECT_NEAR(lhs, static_cast<double>(scale * vs::delta_f(spec, m)), 1e-10)
            << alpha << " " << p1 << " " << p2 << " m=" << m;
      }
    }
  }
}

TEST(OptimalK, PublishedTable) {
  for (const auto& row : vs::testdata::kOptimalKTable) {
    const auto res = vs::optimal_k({row.alpha, row.p1, row.p2}, 100);
    EXPECT_EQ(res.k, row.optimal_k) << row.alpha << " " << row.p1 << " " << row.p2;
    EXPECT_TRUE(res.consistent);
    if (res.cross_checked) {
      EXPECT_EQ(*res.rounded, res.k) << row.alpha << " " << row.p1 << " " << row.p2;
    }
  }
}

TEST(OptimalK, ContinuousValues) {
  EXPECT_NEAR(*vs::continuous_optimal_k({0.4, 0.85, 0.4}), 2.679, 1e-3);
  EXPECT_NEAR(*vs::continuous_optimal_k({0.5, 0.75, 0.4}), 7.42, 1e-2);
  EXPECT_NEAR(*vs::continuous_optimal_k({0.6, 0.65, 0.4}), 30.3, 1e-1);
  EXPECT_FALSE(vs::continuous_optimal_k({0.5, 0.7, 0.3}).has_value());
  EXPECT_FALSE(vs::continuous_optimal_k({1.0, 0.7, 0.3}).has_value());
}

TEST(OptimalK, CrossCheckHoldsAcrossInverseUGrid) {
  for (double alpha = 0.05; alpha < 0.96; alpha += 0.05) {
    for (double p1 = 0.55; p1 < 0.96; p1 += 0.05) {
      for (double p2 = 0.05; p2 < 0.46; p2 += 0.05) {
        const auto res = vs::optimal_k({alpha, p1, p2}, 100);
        EXPECT_TRUE(res.consistent) << alpha << " " << p1 << " " << p2 << " k=" << res.k;
      }
    }
  }
}

TEST(OptimalK, TiesGoToSmallestK) {
  // Flat curve: every k ties.
  EXPECT_EQ(vs::optimal_k({1.0, 0.5, 0.5}, 50).k, 1);
  // Monotone increase reaches the cap.
  EXPECT_EQ(vs::optimal_k({0.9, 0.7, 0.1}, 25).k, 25);
}

TEST(ExactCurve, Examples) {
  const std::vector<int> one{1};
  const auto c1 = vs::exact_curve({0.3, 0.9, 0.2}, one);
  ASSERT_EQ(c1.size(), 1u);
  EXPECT_NEAR(c1[0].accuracy, 0.3 * 0.9 + 0.7 * 0.2, 1e-15);
  EXPECT_FALSE(c1[0].std_error.has_value());

  const std::vector<int> ks{1, 3};
  const auto c2 = vs::exact_curve({0.4, 0.85, 0.4}, ks);
  EXPECT_NEAR(c2[0].accuracy, 0.58, 1e-15);
  EXPECT_NEAR(c2[1].accuracy, 0.58690, 1e-12);

  for (const auto& pt : vs::exact_curve({1.0, 0.5, 0.5}, vs::k_range(1, 30))) {
    EXPECT_NEAR(pt.accuracy, 0.5, 1e-12);
  }
}

TEST(ExactCurve, RejectsBadGrid) {
  const std::vector<int> unsorted{3, 1};
  const std::vector<int> dup{1, 1};
  const std::vector<int> empty;
  const vs::BiLevelSpec spec(0.5, 0.7, 0.3);
  EXPECT_THROW(vs::exact_curve(spec, unsorted), vs::InputError);
  EXPECT_THROW(vs::exact_curve(spec, dup), vs::InputError);
  EXPECT_THROW(vs::exact_curve(spec, empty), vs::InputError);
}

TEST(PerformanceCurve, Invariants) {
  using P = vs::CurvePoint;
  EXPECT_THROW(vs::PerformanceCurve({P{2, 0.5, {}}, P{2, 0.5, {}}}), vs::InputError);
  EXPECT_THROW(vs::PerformanceCurve({P{0, 0.5, {}}}), vs::InputError);
  EXPECT_THROW(vs::PerformanceCurve({P{1, 1.5, {}}}), vs::DomainError);
  EXPECT_THROW(vs::PerformanceCurve({P{1, 0.5, -0.1}}), vs::DomainError);
}
