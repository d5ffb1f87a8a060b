#pragma once

// Monte Carlo execution of Vote and Filter-Vote on synthetic populations and
// on recorded response traces.
//
// Stream layout per (query, run, k-index):
//   answer lane: k categorical draws, then tie-break draws (only on ties)
//   filter lane: one Bernoulli keep draw per sampled answer
// Keeping the filter on its own lane makes Filter-Vote with keep probabilities
// (1, 1) reproduce Vote run-for-run.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "votescale/analytic.hpp"
#include "votescale/errors.hpp"
#include "votescale/population.hpp"
#include "votescale/random.hpp"

namespace votescale {

enum class Strategy { Vote, FilterVote };

constexpr std::string_view to_string(Strategy s) {
  return s == Strategy::Vote ? "vote" : "filter-vote";
}

struct PopulationQuery {
  AnswerDistribution dist;
  double weight = 1.0;
  std::optional<FilterModel> filter;
};

class SyntheticPopulation {
 public:
  explicit SyntheticPopulation(std::vector<PopulationQuery> queries)
      : queries_(std::move(queries)) {
    if (queries_.empty()) throw InputError("population has no queries");
    double total = 0.0;
    for (const auto& q : queries_) {
      if (!(q.weight > 0.0) || !std::isfinite(q.weight)) {
        throw InputError("query weights must be positive");
      }
      total += q.weight;
    }
    if (std::fabs(total - 1.0) > kProbabilitySumTolerance) {
      throw InputError("query weights sum to " + std::to_string(total));
    }
  }

  /// Two binary queries with weights (alpha, 1 - alpha); a zero-weight level
  /// is dropped.
  static SyntheticPopulation from_bilevel(const BiLevelSpec& spec,
                                          std::optional<FilterModel> filter = std::nullopt) {
    std::vector<PopulationQuery> qs;
    if (spec.alpha() > 0.0) {
      qs.push_back({AnswerDistribution::binary(spec.p1()), spec.alpha(), filter});
    }
    if (spec.alpha() < 1.0) {
      qs.push_back({AnswerDistribution::binary(spec.p2()), 1.0 - spec.alpha(), filter});
    }
    return SyntheticPopulation(std::move(qs));
  }

  const std::vector<PopulationQuery>& queries() const { return queries_; }

 private:
  std::vector<PopulationQuery> queries_;
};

/// Pre-collected answers for one query. keep[i] is the filter verdict on
/// answers[i].
struct TraceRecord {
  std::string id;
  std::string true_answer;
  std::vector<std::string> answers;
  std::optional<std::vector<std::uint8_t>> keep;
  std::optional<double> weight;
};

class ResponseTrace {
 public:
  ResponseTrace() = default;
  explicit ResponseTrace(std::vector<TraceRecord> records) : records_(std::move(records)) {
    std::unordered_set<std::string> ids;
    for (const auto& r : records_) {
      if (!ids.insert(r.id).second) throw InputError("duplicate trace id: " + r.id);
      if (r.answers.empty()) throw InputError("trace record " + r.id + " has no answers");
      if (r.keep) {
        if (r.keep->size() != r.answers.size()) {
          throw InputError("trace record " + r.id + ": keep and answers differ in length");
        }
        for (auto f : *r.keep) {
          if (f > 1) throw InputError("trace record " + r.id + ": keep flags must be 0 or 1");
        }
      }
      if (r.weight && !(*r.weight > 0.0)) {
        throw InputError("trace record " + r.id + ": weight must be positive");
      }
    }
  }

  const std::vector<TraceRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

 private:
  std::vector<TraceRecord> records_;
};

/// k i.i.d. draws from dist, returned as indices into dist.labels().
inline std::vector<std::size_t> sample_answers(const AnswerDistribution& dist, int k,
                                               RandomStream& stream) {
  if (k < 1) throw InputError("sample_answers requires k >= 1");
  const auto& probs = dist.probs();
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
  }
  std::vector<std::size_t> out(static_cast<std::size_t>(k));
  for (auto& slot : out) {
    const double u = stream.uniform();
    double cum = 0.0;
    slot = last_positive;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) {
        slot = i;
        break;
      }
    }
  }
  return out;
}

/// A most frequent label. Tied labels are ordered ascending and one is picked
/// uniformly with a single draw from the stream; no draw happens without a tie.
template <class Label>
Label majority_vote(std::span<const Label> answers, RandomStream& stream) {
  if (answers.empty()) throw InputError("majority_vote needs at least one answer");
  std::vector<Label> sorted(answers.begin(), answers.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> tied;  // start offsets of modal runs
  std::size_t best = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const std::size_t run = j - i;
    if (run > best) {
      best = run;
      tied.assign(1, i);
    } else if (run == best) {
      tied.push_back(i);
    }
    i = j;
  }
  if (tied.size() == 1) return sorted[tied.front()];
  return sorted[tied[stream.below(tied.size())]];
}

template <class Label>
Label majority_vote(const std::vector<Label>& answers, RandomStream& stream) {
  return majority_vote(std::span<const Label>(answers), stream);
}

/// Majority over the kept answers; over all answers when nothing is kept.
template <class Label>
Label filter_vote(std::span<const Label> answers, std::span<const std::uint8_t> keep_flags,
                  RandomStream& stream) {
  if (answers.size() != keep_flags.size()) {
    throw InputError("filter_vote: answers and keep flags differ in length");
  }
  std::vector<Label> kept;
  kept.reserve(answers.size());
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (keep_flags[i] != 0) kept.push_back(answers[i]);
  }
  if (kept.empty()) return majority_vote(answers, stream);
  return majority_vote(std::span<const Label>(kept), stream);
}

template <class Label>
Label filter_vote(const std::vector<Label>& answers, const std::vector<std::uint8_t>& flags,
                  RandomStream& stream) {
  return filter_vote(std::span<const Label>(answers), std::span<const std::uint8_t>(flags),
                     stream);
}

namespace detail {

inline constexpr std::uint64_t kAnswerLane = 0;
inline constexpr std::uint64_t kFilterLane = 1;

// Runs task(i) for i in [0, n) on `threads` workers (0 = hardware concurrency).
template <class Task>
void parallel_for(std::size_t n, unsigned threads, Task&& task) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        try {
          for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) task(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next.store(n);
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Weighted accuracy and binomial standard error from per-query success counts.
inline PerformanceCurve aggregate_counts(std::span<const int> ks,
                                         const std::vector<std::vector<std::int64_t>>& correct,
                                         std::span<const double> weights, int runs) {
  std::vector<CurvePoint> pts;
  pts.reserve(ks.size());
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    double acc = 0.0;
    double var = 0.0;
    for (std::size_t q = 0; q < weights.size(); ++q) {
      const double f = static_cast<double>(correct[q][ki]) / runs;
      acc += weights[q] * f;
      var += weights[q] * weights[q] * f * (1.0 - f) / runs;
    }
    pts.push_back({ks[ki], std::clamp(acc, 0.0, 1.0), std::sqrt(var)});
  }
  return PerformanceCurve(std::move(pts));
}

}  // namespace detail

/// Final answer index of one synthetic run.
inline std::size_t simulate_once(const PopulationQuery& query, Strategy strategy, int k,
                                 SeedSpec seed, std::uint64_t query_index,
                                 std::uint64_t run_index, std::uint64_t k_index) {
  RandomStream answer_stream(seed, {query_index, run_index, k_index, detail::kAnswerLane});
  const auto answers = sample_answers(query.dist, k, answer_stream);
  if (strategy == Strategy::Vote) return majority_vote(answers, answer_stream);

  if (!query.filter) throw ConfigurationError("Filter-Vote requires a filter model");
  RandomStream filter_stream(seed, {query_index, run_index, k_index, detail::kFilterLane});
  std::vector<std::uint8_t> flags(answers.size());
  const std::size_t truth = query.dist.true_index();
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const double keep = answers[i] == truth ? query.filter->keep_correct.value()
                                            : query.filter->keep_incorrect.value();
    flags[i] = filter_stream.bernoulli(keep) ? 1 : 0;
  }
  return filter_vote(answers, flags, answer_stream);
}

/// Accuracy of the strategy at each k, averaged over `runs` independent runs
/// per query and weighted across queries.
inline PerformanceCurve simulate_curve(const SyntheticPopulation& pop, Strategy strategy,
                                       std::span<const int> ks, int runs, SeedSpec seed,
                                       unsigned threads = 0) {
  detail::require_sorted_distinct(ks);
  if (runs < 1) throw InputError("runs must be positive");
  const auto& queries = pop.queries();
  if (strategy == Strategy::FilterVote) {
    for (const auto& q : queries) {
      if (!q.filter) throw ConfigurationError("Filter-Vote requires a filter on every query");
    }
  }
  std::vector<std::vector<std::int64_t>> correct(queries.size(),
                                                 std::vector<std::int64_t>(ks.size(), 0));
  const std::size_t tasks = queries.size() * ks.size();
  detail::parallel_for(tasks, threads, [&](std::size_t t) {
    const std::size_t q = t / ks.size();
    const std::size_t ki = t % ks.size();
    std::int64_t hits = 0;
    for (int run = 0; run < runs; ++run) {
      const auto answer = simulate_once(queries[q], strategy, ks[ki], seed, q,
                                        static_cast<std::uint64_t>(run), ki);
      if (answer == queries[q].dist.true_index()) ++hits;
    }
    correct[q][ki] = hits;
  });
  std::vector<double> weights;
  weights.reserve(queries.size());
  for (const auto& q : queries) weights.push_back(q.weight);
  return detail::aggregate_counts(ks, correct, weights, runs);
}

namespace detail {

// Per-record success counts of the trace bootstrap, indexed [record][k-index].
inline std::vector<std::vector<std::int64_t>> resample_counts(const ResponseTrace& trace,
                                                              Strategy strategy,
                                                              std::span<const int> ks,
                                                              int runs, SeedSpec seed,
                                                              unsigned threads) {
  if (trace.empty()) throw InputError("trace has no records");
  require_sorted_distinct(ks);
  if (runs < 1) throw InputError("runs must be positive");
  const auto& records = trace.records();
  if (strategy == Strategy::FilterVote) {
    for (const auto& r : records) {
      if (!r.keep) {
        throw ConfigurationError("Filter-Vote needs keep flags; record " + r.id +
                                 " has none");
      }
    }
  }

  // Answers become ranks in lexicographic label order, so tie-breaking over
  // indices orders labels the same way a string vote would.
  struct Encoded {
    std::vector<std::uint32_t> answers;
    std::uint32_t truth;
  };
  std::vector<Encoded> encoded;
  encoded.reserve(records.size());
  for (const auto& r : records) {
    std::map<std::string, std::uint32_t> ids;
    for (const auto& a : r.answers) ids.emplace(a, 0);
    std::uint32_t next = 0;
    for (auto& [label, id] : ids) id = next++;
    Encoded e;
    e.answers.reserve(r.answers.size());
    for (const auto& a : r.answers) e.answers.push_back(ids.at(a));
    const auto it = ids.find(r.true_answer);
    e.truth = it == ids.end() ? std::numeric_limits<std::uint32_t>::max() : it->second;
    encoded.push_back(std::move(e));
  }

  std::vector<std::vector<std::int64_t>> correct(records.size(),
                                                 std::vector<std::int64_t>(ks.size(), 0));
  const std::size_t tasks = records.size() * ks.size();
  parallel_for(tasks, threads, [&](std::size_t t) {
    const std::size_t q = t / ks.size();
    const std::size_t ki = t % ks.size();
    const auto& enc = encoded[q];
    const auto& keep = records[q].keep;
    const int k = ks[ki];
    std::vector<std::uint32_t> picked(static_cast<std::size_t>(k));
    std::vector<std::uint8_t> flags(static_cast<std::size_t>(k));
    std::int64_t hits = 0;
    for (int run = 0; run < runs; ++run) {
      RandomStream stream(seed, {q, static_cast<std::uint64_t>(run), ki, kAnswerLane});
      for (int j = 0; j < k; ++j) {
        const std::size_t idx = stream.below(enc.answers.size());
        picked[static_cast<std::size_t>(j)] = enc.answers[idx];
        if (keep) flags[static_cast<std::size_t>(j)] = (*keep)[idx];
      }
      const std::uint32_t answer = strategy == Strategy::Vote
                                       ? majority_vote(picked, stream)
                                       : filter_vote(picked, flags, stream);
      if (answer == enc.truth) ++hits;
    }
    correct[q][ki] = hits;
  });
  return correct;
}

}  // namespace detail

/// Bootstrap accuracy from a trace: each run draws k answers with replacement
/// from a record (keep flags travel with their answers). Records are averaged
/// uniformly.
inline PerformanceCurve resample_curve_from_trace(const ResponseTrace& trace,
                                                  Strategy strategy, std::span<const int> ks,
                                                  int runs, SeedSpec seed,
                                                  unsigned threads = 0) {
  const auto correct = detail::resample_counts(trace, strategy, ks, runs, seed, threads);
  const std::vector<double> weights(trace.size(), 1.0 / static_cast<double>(trace.size()));
  return detail::aggregate_counts(ks, correct, weights, runs);
}

/// The same bootstrap, reported separately for every record.
inline std::vector<PerformanceCurve> resample_record_curves(const ResponseTrace& trace,
                                                            Strategy strategy,
                                                            std::span<const int> ks, int runs,
                                                            SeedSpec seed,
                                                            unsigned threads = 0) {
  const auto correct = detail::resample_counts(trace, strategy, ks, runs, seed, threads);
  std::vector<PerformanceCurve> curves;
  curves.reserve(correct.size());
  const std::vector<double> unit{1.0};
  for (const auto& row : correct) {
    curves.push_back(detail::aggregate_counts(ks, {row}, unit, runs));
  }
  return curves;
}

}  // namespace votescale
