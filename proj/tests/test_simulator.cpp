#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "votescale/analytic.hpp"
#include "votescale/simulator.hpp"

namespace vs = votescale;
using vs::Strategy;

namespace {

vs::SyntheticPopulation single(double p, std::optional<vs::FilterModel> f = std::nullopt) {
  return vs::SyntheticPopulation({{vs::AnswerDistribution::binary(p), 1.0, f}});
}

vs::TraceRecord binary_record(std::string id, int correct, int total) {
  vs::TraceRecord r;
  r.id = std::move(id);
  r.true_answer = "yes";
  for (int i = 0; i < total; ++i) r.answers.push_back(i < correct ? "yes" : "no");
  return r;
}

}  // namespace

TEST(RandomStream, DeterministicAndKeyed) {
  vs::RandomStream a(vs::SeedSpec{5}, {1, 2, 3});
  vs::RandomStream b(vs::SeedSpec{5}, {1, 2, 3});
  vs::RandomStream c(vs::SeedSpec{5}, {1, 2, 4});
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs |= x != c();
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(a.draws(), 100u);
}

TEST(RandomStream, BelowIsUniform) {
  vs::RandomStream s(42);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[s.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 4 * std::sqrt(n / 7.0));
}

TEST(SampleAnswers, PointMass) {
  const vs::AnswerDistribution d({"a", "b", "c"}, {0.0, 1.0, 0.0}, 1);
  vs::RandomStream s(1);
  for (auto idx : vs::sample_answers(d, 25, s)) EXPECT_EQ(idx, 1u);
}

TEST(SampleAnswers, LawOfLargeNumbers) {
  const auto d = vs::AnswerDistribution::binary(0.7);
  vs::RandomStream s(vs::SeedSpec{3}, {0});
  const int n = 100000;
  const auto draws = vs::sample_answers(d, n, s);
  ASSERT_EQ(draws.size(), static_cast<std::size_t>(n));
  double freq = 0.0;
  for (auto i : draws) freq += i == 0 ? 1.0 : 0.0;
  freq /= n;
  EXPECT_NEAR(freq, 0.7, 3 * std::sqrt(0.7 * 0.3 / n));
}

TEST(SampleAnswers, RejectsNonPositiveK) {
  vs::RandomStream s(1);
  EXPECT_THROW(vs::sample_answers(vs::AnswerDistribution::binary(0.5), 0, s), vs::InputError);
}

TEST(MajorityVote, Examples) {
  vs::RandomStream s(9);
  const std::vector<std::string> aab{"A", "A", "B"};
  const std::vector<std::string> a{"A"};
  EXPECT_EQ(vs::majority_vote(aab, s), "A");
  EXPECT_EQ(vs::majority_vote(a, s), "A");
  EXPECT_EQ(s.draws(), 0u);  // no tie, no draw
  EXPECT_THROW(vs::majority_vote(std::vector<std::string>{}, s), vs::InputError);
}

TEST(MajorityVote, TieIsUniform) {
  const std::vector<std::string> ab{"B", "A"};
  const int n = 100000;
  int a_wins = 0;
  for (int i = 0; i < n; ++i) {
    vs::RandomStream s(vs::SeedSpec{77}, {static_cast<std::uint64_t>(i)});
    a_wins += vs::majority_vote(ab, s) == "A";
  }
  EXPECT_NEAR(a_wins / double(n), 0.5, 3 * 0.00158);
}

TEST(FilterVote, Examples) {
  vs::RandomStream s(4);
  const std::vector<std::string> abb{"A", "B", "B"};
  EXPECT_EQ(vs::filter_vote(abb, std::vector<std::uint8_t>{1, 0, 0}, s), "A");
  EXPECT_EQ(vs::filter_vote(abb, std::vector<std::uint8_t>{0, 0, 0}, s), "B");
  const std::vector<std::string> aabb{"A", "A", "B", "B"};
  EXPECT_EQ(vs::filter_vote(aabb, std::vector<std::uint8_t>{1, 1, 1, 0}, s), "A");
  EXPECT_THROW(vs::filter_vote(abb, std::vector<std::uint8_t>{1, 0}, s), vs::InputError);
}

TEST(SyntheticPopulation, Validation) {
  EXPECT_THROW(vs::SyntheticPopulation({}), vs::InputError);
  EXPECT_THROW(
      vs::SyntheticPopulation({{vs::AnswerDistribution::binary(0.5), 0.4, std::nullopt}}),
      vs::InputError);
  EXPECT_EQ(vs::SyntheticPopulation::from_bilevel({1.0, 0.7, 0.2}).queries().size(), 1u);
  EXPECT_EQ(vs::SyntheticPopulation::from_bilevel({0.3, 0.7, 0.2}).queries().size(), 2u);
}

TEST(SimulateCurve, PointMassQuery) {
  const auto curve = vs::simulate_curve(single(1.0), Strategy::Vote, vs::k_range(1, 9), 200,
                                        vs::SeedSpec{1});
  for (const auto& pt : curve) {
    EXPECT_EQ(pt.accuracy, 1.0);
    EXPECT_EQ(*pt.std_error, 0.0);
  }
}

TEST(SimulateCurve, AgreesWithExactCurve) {
  const vs::BiLevelSpec spec(0.5, 0.75, 0.4);
  const std::vector<int> ks{1, 3, 5, 15};
  const auto sim = vs::simulate_curve(vs::SyntheticPopulation::from_bilevel(spec),
                                      Strategy::Vote, ks, 10000, vs::SeedSpec{20240601});
  const auto exact = vs::exact_curve(spec, ks);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    EXPECT_LE(std::fabs(sim[i].accuracy - exact[i].accuracy), 3 * *sim[i].std_error)
        << "k=" << ks[i];
  }
  EXPECT_NEAR(exact[1].accuracy, 0.597875, 1e-12);
}

TEST(SimulateCurve, AgreementOnGridOfSpecs) {
  // At least 99% of cells within 3 standard errors.
  const std::vector<int> ks{1, 2, 3, 5, 10, 21};
  int cells = 0;
  int inside = 0;
  std::uint64_t seed = 100;
  for (double alpha : {0.2, 0.5, 0.8}) {
    for (double p1 : {0.6, 0.75, 0.9}) {
      for (double p2 : {0.1, 0.25, 0.4}) {
        const vs::BiLevelSpec spec(alpha, p1, p2);
        const auto sim = vs::simulate_curve(vs::SyntheticPopulation::from_bilevel(spec),
                                            Strategy::Vote, ks, 10000, vs::SeedSpec{seed++});
        const auto exact = vs::exact_curve(spec, ks);
        for (std::size_t i = 0; i < ks.size(); ++i) {
          // Standard error from the exact level accuracies: the sample estimate
          // collapses to 0 when every run on both levels agrees.
          const double f1 = vs::vote_accuracy(p1, ks[i]);
          const double f2 = vs::vote_accuracy(p2, ks[i]);
          const double se = std::sqrt((alpha * alpha * f1 * (1 - f1) +
                                       (1 - alpha) * (1 - alpha) * f2 * (1 - f2)) / 10000);
          ++cells;
          inside += std::fabs(sim[i].accuracy - exact[i].accuracy) <= 3 * se;
        }
      }
    }
  }
  EXPECT_GE(inside, 0.99 * cells)
      << inside << " of " << cells;
}

TEST(SimulateCurve, FilterDrivesHardQueryToOne) {
  const vs::FilterModel f{vs::Probability(0.9), vs::Probability(0.3)};
  const std::vector<int> ks{1, 201};
  const auto curve =
      vs::simulate_curve(single(0.4, f), Strategy::FilterVote, ks, 2000, vs::SeedSpec{8});
  // One answer is voted on whether or not the filter keeps it.
  EXPECT_NEAR(curve[0].accuracy, 0.4, 3 * *curve[0].std_error);
  EXPECT_GT(curve[1].accuracy, 0.99);
  const auto vote = vs::simulate_curve(single(0.4, f), Strategy::Vote, ks, 2000, vs::SeedSpec{8});
  EXPECT_LT(vote[1].accuracy, 0.01);
}

TEST(SimulateCurve, FilterVoteWithUnitKeepEqualsVote) {
  const vs::FilterModel f{vs::Probability(1.0), vs::Probability(1.0)};
  const vs::AnswerDistribution d({"a", "b", "c"}, {0.4, 0.35, 0.25}, 0);
  const vs::PopulationQuery q{d, 1.0, f};
  for (std::uint64_t run = 0; run < 500; ++run) {
    for (int k : {1, 2, 4, 7}) {
      EXPECT_EQ(vs::simulate_once(q, Strategy::Vote, k, vs::SeedSpec{3}, 0, run, 0),
                vs::simulate_once(q, Strategy::FilterVote, k, vs::SeedSpec{3}, 0, run, 0));
    }
  }
}

TEST(SimulateCurve, IndependentOfThreadCount) {
  std::vector<vs::PopulationQuery> qs;
  const vs::FilterModel f{vs::Probability(0.8), vs::Probability(0.4)};
  for (int i = 0; i < 10; ++i) {
    const double p = 0.2 + 0.06 * i;
    qs.push_back({vs::AnswerDistribution({"x", "y", "z"}, {p, (1 - p) * 0.7, (1 - p) * 0.3}, 0),
                  0.1, f});
  }
  const vs::SyntheticPopulation pop(qs);
  const auto ks = vs::k_range(1, 12);
  for (auto strategy : {Strategy::Vote, Strategy::FilterVote}) {
    const auto one = vs::simulate_curve(pop, strategy, ks, 300, vs::SeedSpec{99}, 1);
    const auto many = vs::simulate_curve(pop, strategy, ks, 300, vs::SeedSpec{99}, 7);
    EXPECT_EQ(one, many);
  }
}

TEST(SimulateCurve, MonotoneDifficultyEffect) {
  const std::vector<int> ks{1, 101};
  const auto easy = vs::simulate_curve(single(0.6), Strategy::Vote, ks, 10000, vs::SeedSpec{5});
  EXPECT_GT(easy[1].accuracy - easy[0].accuracy, 3 * (*easy[0].std_error + *easy[1].std_error));
  const auto hard = vs::simulate_curve(single(0.4), Strategy::Vote, ks, 10000, vs::SeedSpec{5});
  EXPECT_GT(hard[0].accuracy - hard[1].accuracy, 3 * (*hard[0].std_error + *hard[1].std_error));
}

TEST(SimulateCurve, ConfigurationErrors) {
  const std::vector<int> ks{1, 3};
  EXPECT_THROW(vs::simulate_curve(single(0.5), Strategy::FilterVote, ks, 10, {}),
               vs::ConfigurationError);
  EXPECT_THROW(vs::simulate_curve(single(0.5), Strategy::Vote, ks, 0, {}), vs::InputError);
  const std::vector<int> bad{3, 1};
  EXPECT_THROW(vs::simulate_curve(single(0.5), Strategy::Vote, bad, 10, {}), vs::InputError);
}

TEST(ResponseTrace, Validation) {
  EXPECT_THROW(vs::ResponseTrace({binary_record("a", 1, 2), binary_record("a", 1, 2)}),
               vs::InputError);
  EXPECT_THROW(vs::ResponseTrace({binary_record("a", 0, 0)}), vs::InputError);
  auto r = binary_record("a", 1, 2);
  r.keep = std::vector<std::uint8_t>{1};
  EXPECT_THROW(vs::ResponseTrace({r}), vs::InputError);
}

TEST(ResampleTrace, AllCorrectAndAllWrong) {
  const auto ks = vs::k_range(1, 20);
  const vs::ResponseTrace right({binary_record("r", 400, 400)});
  const vs::ResponseTrace wrong({binary_record("w", 0, 400)});
  for (const auto& pt : vs::resample_curve_from_trace(right, Strategy::Vote, ks, 100, {}))
    EXPECT_EQ(pt.accuracy, 1.0);
  for (const auto& pt : vs::resample_curve_from_trace(wrong, Strategy::Vote, ks, 100, {}))
    EXPECT_EQ(pt.accuracy, 0.0);
}

TEST(ResampleTrace, BootstrapMatchesEmpiricalFrequency) {
  const vs::ResponseTrace trace({binary_record("q", 280, 400)});
  const std::vector<int> ks{1};
  const int runs = 10000;
  const auto curve =
      vs::resample_curve_from_trace(trace, Strategy::Vote, ks, runs, vs::SeedSpec{12});
  EXPECT_NEAR(curve[0].accuracy, 0.70, 3 * std::sqrt(0.21 / runs));
}

TEST(ResampleTrace, TruthAbsentFromAnswers) {
  vs::TraceRecord r;
  r.id = "x";
  r.true_answer = "zzz";
  r.answers = {"a", "b", "a"};
  const std::vector<int> ks{1, 5};
  for (const auto& pt :
       vs::resample_curve_from_trace(vs::ResponseTrace({r}), Strategy::Vote, ks, 50, {}))
    EXPECT_EQ(pt.accuracy, 0.0);
}

TEST(ResampleTrace, FilterFlagsTravelWithAnswers) {
  // Only the correct answers are kept, so Filter-Vote is always right.
  auto r = binary_record("q", 100, 400);
  r.keep = std::vector<std::uint8_t>(400, 0);
  for (int i = 0; i < 100; ++i) (*r.keep)[i] = 1;
  const vs::ResponseTrace trace({r});
  const std::vector<int> ks{15, 41};
  const auto curve = vs::resample_curve_from_trace(trace, Strategy::FilterVote, ks, 500, {});
  EXPECT_GT(curve[0].accuracy, 0.98);  // fails only when no kept answer is drawn
  EXPECT_EQ(curve[1].accuracy, 1.0);
}

TEST(ResampleTrace, Errors) {
  const std::vector<int> ks{1};
  const vs::ResponseTrace trace({binary_record("q", 1, 2)});
  EXPECT_THROW(vs::resample_curve_from_trace(trace, Strategy::FilterVote, ks, 10, {}),
               vs::ConfigurationError);
  EXPECT_THROW(vs::resample_curve_from_trace(vs::ResponseTrace(), Strategy::Vote, ks, 10, {}),
               vs::InputError);
}

TEST(ResampleTrace, IndependentOfThreadCount) {
  std::vector<vs::TraceRecord> rs;
  for (int i = 0; i < 12; ++i) rs.push_back(binary_record("r" + std::to_string(i), 10 * i, 120));
  const vs::ResponseTrace trace(rs);
  const auto ks = vs::k_range(1, 9, 2);
  EXPECT_EQ(vs::resample_curve_from_trace(trace, Strategy::Vote, ks, 200, {7}, 1),
            vs::resample_curve_from_trace(trace, Strategy::Vote, ks, 200, {7}, 5));
}
