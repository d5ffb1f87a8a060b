#pragma once

// Parametric accuracy model
//
//   hard item:  G(K) = exp(-c1 K - c2 sqrt(K) + c3)
//   easy item:  G(K) = 1 - exp(-c1 K - c2 sqrt(K) + c3)
//
// and the estimation pipeline: classify each item by its majority answer, fit
// (c1, c2, c3) per item, aggregate with item weights.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "votescale/analytic.hpp"
#include "votescale/errors.hpp"
#include "votescale/population.hpp"
#include "votescale/simulator.hpp"

namespace votescale {

struct ItemFit {
  bool hard = false;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;

  friend bool operator==(const ItemFit&, const ItemFit&) = default;
};

struct WeightedFit {
  std::string id;
  ItemFit fit;
  double weight = 1.0;

  friend bool operator==(const WeightedFit&, const WeightedFit&) = default;
};

class ScalingModel {
 public:
  ScalingModel() = default;
  explicit ScalingModel(std::vector<WeightedFit> fits) : fits_(std::move(fits)) {
    if (fits_.empty()) throw InputError("scaling model has no items");
    double total = 0.0;
    for (const auto& f : fits_) {
      if (!(f.fit.c1 >= 0.0 && f.fit.c2 >= 0.0) || !std::isfinite(f.fit.c1) ||
          !std::isfinite(f.fit.c2) || !std::isfinite(f.fit.c3)) {
        throw DomainError("item " + f.id + ": c1, c2 must be finite and nonnegative");
      }
      if (!(f.weight > 0.0)) throw InputError("item " + f.id + ": weight must be positive");
      total += f.weight;
    }
    if (std::fabs(total - 1.0) > kProbabilitySumTolerance) {
      throw InputError("scaling model weights sum to " + std::to_string(total));
    }
  }

  const std::vector<WeightedFit>& fits() const { return fits_; }

  friend bool operator==(const ScalingModel&, const ScalingModel&) = default;

 private:
  std::vector<WeightedFit> fits_;
};

struct TrainPoint {
  double k = 1.0;
  double accuracy = 0.0;
};

struct FitOptions {
  double clamp_eps = 1e-6;
  bool polish = true;
  int max_polish_steps = 50;
};

inline double g_item(double k, const ItemFit& fit) {
  const double e =
      std::clamp(std::exp(-fit.c1 * k - fit.c2 * std::sqrt(k) + fit.c3), 0.0, 1.0);
  return fit.hard ? e : 1.0 - e;
}

/// True when the majority answer (ties to the lexicographically smallest
/// label) differs from the true answer.
inline bool classify_item(std::span<const std::string> samples,
                          const std::string& true_answer) {
  if (samples.empty()) throw InputError("classify_item needs at least one sample");
  std::vector<std::string> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::string* majority = nullptr;
  std::size_t best = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    if (j - i > best) {
      best = j - i;
      majority = &sorted[i];
    }
    i = j;
  }
  return *majority != true_answer;
}

inline bool classify_item(const std::vector<std::string>& samples,
                          const std::string& true_answer) {
  return classify_item(std::span<const std::string>(samples), true_answer);
}

namespace detail {

struct LinearFit {
  std::array<double, 3> c{};
  double residual = 0.0;
};

// Least squares of y on the columns of `design` selected by `free`; the other
// coefficients are pinned to zero.
inline LinearFit solve_subset(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                              const std::array<bool, 3>& free) {
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < 3; ++j) {
    if (free[static_cast<std::size_t>(j)]) cols.push_back(j);
  }
  Eigen::MatrixXd sub(design.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    sub.col(static_cast<Eigen::Index>(j)) = design.col(cols[j]);
  }
  const Eigen::VectorXd x = sub.colPivHouseholderQr().solve(y);
  LinearFit out;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.c[static_cast<std::size_t>(cols[j])] = x(static_cast<Eigen::Index>(j));
  }
  out.residual = (sub * x - y).squaredNorm();
  return out;
}

// min ||A c - y||^2 subject to c1, c2 >= 0 with c3 free. With two bounded
// coefficients the active set is one of four; every feasible candidate is
// solved and the best kept, which is the exact constrained optimum.
inline LinearFit nonnegative_log_fit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  constexpr std::array<std::array<bool, 3>, 4> kActiveSets = {{
      {true, true, true}, {false, true, true}, {true, false, true}, {false, false, true}}};
  std::optional<LinearFit> best;
  for (const auto& free : kActiveSets) {
    LinearFit fit = solve_subset(design, y, free);
    if (fit.c[0] < 0.0 || fit.c[1] < 0.0) continue;
    if (!best || fit.residual < best->residual) best = fit;
    // An interior unconstrained optimum is the global one.
    if (free[0] && free[1]) break;
  }
  return *best;
}

inline double squared_loss(std::span<const TrainPoint> train, std::span<const double> target,
                           const ItemFit& fit) {
  double loss = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double r = g_item(train[i].k, fit) - target[i];
    loss += r * r;
  }
  return loss;
}

// Levenberg-damped Gauss-Newton on the squared loss in accuracy space, with
// c1, c2 projected back onto [0, inf). Only loss-decreasing steps are taken.
inline ItemFit polish_fit(std::span<const TrainPoint> train, std::span<const double> target,
                          ItemFit fit, int max_steps) {
  double loss = squared_loss(train, target, fit);
  double lambda = 1e-3;
  const auto n = static_cast<Eigen::Index>(train.size());
  for (int step = 0; step < max_steps && loss > 0.0; ++step) {
    Eigen::MatrixXd jac(n, 3);
    Eigen::VectorXd res(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double k = train[static_cast<std::size_t>(i)].k;
      const double e = std::exp(-fit.c1 * k - fit.c2 * std::sqrt(k) + fit.c3);
      const double sign = fit.hard ? 1.0 : -1.0;
      jac(i, 0) = -sign * e * k;
      jac(i, 1) = -sign * e * std::sqrt(k);
      jac(i, 2) = sign * e;
      res(i) = g_item(k, fit) - target[static_cast<std::size_t>(i)];
    }
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d grad = jac.transpose() * res;
    bool improved = false;
    for (int attempt = 0; attempt < 12 && !improved; ++attempt) {
      Eigen::Matrix3d damped = jtj;
      for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      const Eigen::Vector3d delta = damped.ldlt().solve(-grad);
      ItemFit trial = fit;
      trial.c1 = std::max(0.0, fit.c1 + delta(0));
      trial.c2 = std::max(0.0, fit.c2 + delta(1));
      trial.c3 = fit.c3 + delta(2);
      const double trial_loss = squared_loss(train, target, trial);
      if (std::isfinite(trial_loss) && trial_loss < loss) {
        const double gain = loss - trial_loss;
        fit = trial;
        loss = trial_loss;
        lambda = std::max(lambda / 3.0, 1e-12);
        improved = true;
        if (gain <= 1e-15 * std::max(loss, 1e-30)) return fit;
      } else {
        lambda *= 4.0;
      }
    }
    if (!improved) break;
  }
  return fit;
}

}  // namespace detail

/// Fit (c1, c2, c3) for one item on observed (k, accuracy) pairs.
///
/// Observations are clamped into [eps, 1 - eps] and mapped to log space, where
/// the model is linear in the basis (-k, -sqrt(k), 1); that system is solved
/// with c1, c2 >= 0 and then optionally refined on the squared loss in
/// accuracy space.
inline ItemFit fit_item(std::span<const TrainPoint> train, bool hard,
                        const FitOptions& options = {}) {
  std::set<double> distinct;
  for (const auto& pt : train) {
    if (!(pt.k >= 1.0) || !std::isfinite(pt.k)) throw InputError("training k must be >= 1");
    if (!(pt.accuracy >= 0.0 && pt.accuracy <= 1.0)) {
      throw DomainError("observed accuracy out of [0, 1]");
    }
    distinct.insert(pt.k);
  }
  if (distinct.size() < 3) {
    throw UnderdeterminedError("fit_item needs at least 3 distinct k values, got " +
                               std::to_string(distinct.size()));
  }

  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  std::vector<double> target(train.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pt = train[static_cast<std::size_t>(i)];
    const double v = std::clamp(pt.accuracy, options.clamp_eps, 1.0 - options.clamp_eps);
    target[static_cast<std::size_t>(i)] = v;
    design(i, 0) = -pt.k;
    design(i, 1) = -std::sqrt(pt.k);
    design(i, 2) = 1.0;
    y(i) = hard ? std::log(v) : std::log1p(-v);
  }
  const auto lin = detail::nonnegative_log_fit(design, y);
  ItemFit fit{hard, lin.c[0], lin.c[1], lin.c[2]};
  if (options.polish && options.max_polish_steps > 0) {
    fit = detail::polish_fit(train, target, fit, options.max_polish_steps);
  }
  return fit;
}

inline ItemFit fit_item(const std::vector<TrainPoint>& train, bool hard,
                        const FitOptions& options = {}) {
  return fit_item(std::span<const TrainPoint>(train), hard, options);
}

/// Training material for one item. `hard` overrides sample-based
/// classification when the difficulty sign is known, as in synthetic data.
struct ItemTrainingData {
  std::string id;
  std::vector<std::string> samples;
  std::string true_answer;
  std::optional<bool> hard;
  std::vector<TrainPoint> train;
  std::optional<double> weight;
};

/// Classify and fit every item, then assemble a model with uniform weights, or
/// with the items' own weights (normalized) when all of them carry one.
inline ScalingModel fit_dataset(std::span<const ItemTrainingData> items,
                                const FitOptions& options = {}) {
  if (items.empty()) throw InputError("fit_dataset needs at least one item");
  const bool weighted = std::all_of(items.begin(), items.end(),
                                    [](const auto& it) { return it.weight.has_value(); });
  double total_weight = 0.0;
  if (weighted) {
    for (const auto& it : items) total_weight += *it.weight;
  }
  std::vector<WeightedFit> fits;
  fits.reserve(items.size());
  for (const auto& it : items) {
    try {
      bool hard = false;
      if (it.hard) {
        hard = *it.hard;
      } else if (!it.samples.empty()) {
        hard = classify_item(it.samples, it.true_answer);
      } else {
        throw InputError("no classification samples");
      }
      const double w = weighted ? *it.weight / total_weight
                                : 1.0 / static_cast<double>(items.size());
      fits.push_back({it.id, fit_item(it.train, hard, options), w});
    } catch (const UnderdeterminedError& e) {
      throw UnderdeterminedError("item " + it.id + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("item " + it.id + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("item " + it.id + ": " + e.what());
    }
  }
  return ScalingModel(std::move(fits));
}

inline ScalingModel fit_dataset(const std::vector<ItemTrainingData>& items,
                                const FitOptions& options = {}) {
  return fit_dataset(std::span<const ItemTrainingData>(items), options);
}

/// Weighted mean of the item curves at each k.
inline PerformanceCurve predict(const ScalingModel& model, std::span<const int> ks) {
  detail::require_sorted_distinct(ks);
  std::vector<CurvePoint> pts;
  pts.reserve(ks.size());
  for (int k : ks) {
    double acc = 0.0;
    for (const auto& f : model.fits()) acc += f.weight * g_item(k, f.fit);
    pts.push_back({k, std::clamp(acc, 0.0, 1.0), std::nullopt});
  }
  return PerformanceCurve(std::move(pts));
}

/// argmax of the predicted curve over 1..k_max, ties to the smallest k.
inline int predict_optimal_k(const ScalingModel& model, int k_max) {
  if (k_max < 1) throw InputError("k_max must be positive");
  const auto curve = predict(model, k_range(1, k_max));
  int best_k = 1;
  double best = -1.0;
  for (const auto& pt : curve) {
    if (pt.accuracy > best + kAccuracyTieTolerance) {
      best = pt.accuracy;
      best_k = pt.k;
    }
  }
  return best_k;
}

inline double curve_mse(const PerformanceCurve& predicted, const PerformanceCurve& reference) {
  if (predicted.size() != reference.size() || predicted.empty()) {
    throw InputError("curve_mse: k grids differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i].k != reference[i].k) throw InputError("curve_mse: k grids differ");
    const double d = predicted[i].accuracy - reference[i].accuracy;
    sum += d * d;
  }
  return sum / static_cast<double>(predicted.size());
}

/// Per-level fit of a bi-level dataset from its closed-form curves on
/// `train_ks`. Levels are labelled by the sign of their difficulty.
inline ScalingModel fit_bilevel(const BiLevelSpec& spec, std::span<const int> train_ks,
                                EvenKRule rule = EvenKRule::BetaInterpolation,
                                const FitOptions& options = {}) {
  detail::require_sorted_distinct(train_ks);
  std::vector<ItemTrainingData> items;
  auto add_level = [&](std::string id, double p, double weight) {
    ItemTrainingData item;
    item.id = std::move(id);
    item.hard = p <= 0.5;
    item.weight = weight;
    for (int k : train_ks) item.train.push_back({double(k), vote_accuracy(p, k, rule)});
    items.push_back(std::move(item));
  };
  if (spec.alpha() > 0.0) add_level("easy", spec.p1(), spec.alpha());
  if (spec.alpha() < 1.0) add_level("hard", spec.p2(), 1.0 - spec.alpha());
  return fit_dataset(items, options);
}

/// Fit from a response trace: every record is classified on its own answers
/// (kept answers under Filter-Vote) and trained on its bootstrap curve.
inline ScalingModel fit_trace(const ResponseTrace& trace, Strategy strategy,
                              std::span<const int> train_ks, int runs, SeedSpec seed,
                              const FitOptions& options = {}, unsigned threads = 0) {
  const auto curves = resample_record_curves(trace, strategy, train_ks, runs, seed, threads);
  std::vector<ItemTrainingData> items;
  items.reserve(trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& rec = trace.records()[i];
    ItemTrainingData item;
    item.id = rec.id;
    item.true_answer = rec.true_answer;
    item.weight = rec.weight;
    if (strategy == Strategy::FilterVote) {
      for (std::size_t j = 0; j < rec.answers.size(); ++j) {
        if ((*rec.keep)[j] != 0) item.samples.push_back(rec.answers[j]);
      }
    }
    if (item.samples.empty()) item.samples = rec.answers;
    for (const auto& pt : curves[i]) item.train.push_back({double(pt.k), pt.accuracy});
    items.push_back(std::move(item));
  }
  return fit_dataset(items, options);
}

}  // namespace votescale
