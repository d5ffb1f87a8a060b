#pragma once

// Command-line front end. parse_args validates flags into a Command; execute
// runs it. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "votescale/analytic.hpp"
#include "votescale/io.hpp"
#include "votescale/population.hpp"
#include "votescale/scaling_law.hpp"
#include "votescale/simulator.hpp"

namespace votescale::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Carries the rendered help text for --help.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BiLevelArgs {
  double alpha = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;

  BiLevelSpec spec() const { return BiLevelSpec(alpha, p1, p2); }
};

struct ExactCmd {
  BiLevelArgs level;
  std::vector<int> ks;
  EvenKRule rule = EvenKRule::TieBreak;
};

struct ShapeCmd {
  BiLevelArgs level;
};

struct OptimalKCmd {
  BiLevelArgs level;
  int k_max = 100;
  EvenKRule rule = EvenKRule::BetaInterpolation;
};

struct SimulateCmd {
  BiLevelArgs level;
  std::vector<int> ks;
  int runs = 1000;
  SeedSpec seed;
  Strategy strategy = Strategy::Vote;
  std::optional<FilterModel> filter;
  unsigned threads = 0;
};

struct ResampleCmd {
  std::string trace_path;
  std::vector<int> ks;
  int runs = 1000;
  SeedSpec seed;
  Strategy strategy = Strategy::Vote;
  unsigned threads = 0;
};

struct FitCmd {
  std::optional<std::string> trace_path;
  std::optional<BiLevelArgs> level;
  std::vector<int> train_ks;
  int runs = 1000;
  SeedSpec seed;
  Strategy strategy = Strategy::Vote;
  EvenKRule rule = EvenKRule::BetaInterpolation;
  bool polish = true;
  unsigned threads = 0;
};

struct PredictCmd {
  std::string model_path;
  std::vector<int> ks;
  bool report_optimum = false;
};

struct Command {
  std::variant<ExactCmd, ShapeCmd, OptimalKCmd, SimulateCmd, ResampleCmd, FitCmd, PredictCmd>
      action;
  std::optional<std::string> out_path;
  CurveFormat format = CurveFormat::Csv;
};

namespace detail {

inline std::vector<int> resolve_ks(const std::vector<int>& ks, std::optional<int> k_max,
                                   const char* flag = "--ks") {
  if (!ks.empty()) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      if (ks[i] < 1) throw UsageError(std::string(flag) + ": values must be positive");
      if (i > 0 && ks[i] <= ks[i - 1]) {
        throw UsageError(std::string(flag) + ": values must be strictly increasing");
      }
    }
    return ks;
  }
  return k_range(1, k_max.value_or(100));
}

inline const std::map<std::string, Strategy>& strategy_names() {
  static const std::map<std::string, Strategy> names{{"vote", Strategy::Vote},
                                                     {"filter-vote", Strategy::FilterVote}};
  return names;
}

inline const std::map<std::string, EvenKRule>& even_k_names() {
  static const std::map<std::string, EvenKRule> names{
      {"tie-break", EvenKRule::TieBreak}, {"beta", EvenKRule::BetaInterpolation}};
  return names;
}

}  // namespace detail

/// Parse a command line (without the program name).
inline Command parse_args(const std::vector<std::string>& argv) {
  CLI::App app{"Accuracy of majority-vote inference systems versus the number of calls",
               "votescale"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Command cmd;
  std::string out_path;
  std::string format = "csv";
  auto add_common_output = [&](CLI::App* sub) {
    sub->add_option("--out", out_path, "Output path (default: standard output)");
    sub->add_option("--format", format, "Curve format")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  BiLevelArgs level;
  auto add_level = [&](CLI::App* sub, bool required) {
    auto* a = sub->add_option("--alpha", level.alpha, "Fraction of easy queries")
                  ->check(CLI::Range(0.0, 1.0));
    auto* p1 = sub->add_option("--p1", level.p1, "Per-call accuracy on easy queries")
                   ->check(CLI::Range(0.0, 1.0));
    auto* p2 = sub->add_option("--p2", level.p2, "Per-call accuracy on hard queries")
                   ->check(CLI::Range(0.0, 1.0));
    if (required) {
      a->required();
      p1->required();
      p2->required();
    }
    return std::array<CLI::Option*, 3>{a, p1, p2};
  };

  std::vector<int> ks;
  std::optional<int> k_max;
  auto add_ks = [&](CLI::App* sub) {
    sub->add_option("--ks", ks, "Comma-separated numbers of calls")->delimiter(',');
    sub->add_option("--k-max", k_max, "Use k = 1..K")->check(CLI::PositiveNumber);
  };

  int runs = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string strategy = "vote";
  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--runs", runs, "Monte Carlo runs per query and k")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--strategy", strategy, "vote or filter-vote")
        ->check(CLI::IsMember({"vote", "filter-vote"}));
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)");
  };

  std::string even_k = "";
  auto add_even_k = [&](CLI::App* sub) {
    sub->add_option("--even-k", even_k, "Even-K accuracy: tie-break or beta")
        ->check(CLI::IsMember({"tie-break", "beta"}));
  };

  auto* exact = app.add_subcommand("exact", "Closed-form accuracy curve of a bi-level dataset");
  add_level(exact, true);
  add_ks(exact);
  add_even_k(exact);
  add_common_output(exact);

  auto* shape = app.add_subcommand("shape", "Classify the accuracy landscape");
  add_level(shape, true);
  add_common_output(shape);

  auto* optimal = app.add_subcommand("optimal-k", "Number of calls maximizing accuracy");
  add_level(optimal, true);
  add_ks(optimal);
  add_even_k(optimal);
  add_common_output(optimal);

  double keep_correct = -1.0;
  double keep_incorrect = -1.0;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo accuracy on a bi-level dataset");
  add_level(simulate, true);
  add_ks(simulate);
  add_sim(simulate);
  auto* kc_opt = simulate->add_option("--keep-correct", keep_correct,
                                      "Filter keep probability for correct answers")
                     ->check(CLI::Range(0.0, 1.0));
  auto* ki_opt = simulate->add_option("--keep-incorrect", keep_incorrect,
                                      "Filter keep probability for incorrect answers")
                     ->check(CLI::Range(0.0, 1.0));
  add_common_output(simulate);

  std::string trace_path;
  auto* resample = app.add_subcommand("resample", "Bootstrap accuracy from a response trace");
  resample->add_option("--trace", trace_path, "Trace JSONL file")->required();
  add_ks(resample);
  add_sim(resample);
  add_common_output(resample);

  std::vector<int> train_ks;
  bool no_polish = false;
  auto* fit = app.add_subcommand("fit", "Fit the scaling model; writes model JSON");
  auto* fit_trace_opt = fit->add_option("--trace", trace_path, "Trace JSONL file");
  auto fit_level = add_level(fit, false);
  fit->add_option("--train-ks", train_ks, "Comma-separated training k values")
      ->delimiter(',')
      ->required();
  add_sim(fit);
  add_even_k(fit);
  fit->add_flag("--no-polish", no_polish, "Skip the Gauss-Newton refinement");
  add_common_output(fit);

  std::string model_path;
  bool report_optimum = false;
  auto* predict_cmd = app.add_subcommand("predict", "Evaluate a fitted model");
  predict_cmd->add_option("--model", model_path, "Model JSON file")->required();
  add_ks(predict_cmd);
  predict_cmd->add_flag("--optimum", report_optimum,
                        "Print the predicted optimal k to the error stream");
  add_common_output(predict_cmd);

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    throw HelpRequested(parsed.empty() ? app.help() : parsed.front()->help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  auto rule_or = [&](EvenKRule fallback) {
    return even_k.empty() ? fallback : detail::even_k_names().at(even_k);
  };
  const Strategy strat = detail::strategy_names().at(strategy);

  if (exact->parsed()) {
    cmd.action = ExactCmd{level, detail::resolve_ks(ks, k_max), rule_or(EvenKRule::TieBreak)};
  } else if (shape->parsed()) {
    cmd.action = ShapeCmd{level};
  } else if (optimal->parsed()) {
    if (!ks.empty()) throw UsageError("optimal-k: use --k-max, not --ks");
    cmd.action = OptimalKCmd{level, k_max.value_or(100), rule_or(EvenKRule::BetaInterpolation)};
  } else if (simulate->parsed()) {
    SimulateCmd s{level, detail::resolve_ks(ks, k_max), runs, SeedSpec{seed}, strat,
                  std::nullopt, threads};
    if (strat == Strategy::FilterVote) {
      if (kc_opt->count() == 0) {
        throw UsageError("--keep-correct is required when --strategy is filter-vote");
      }
      if (ki_opt->count() == 0) {
        throw UsageError("--keep-incorrect is required when --strategy is filter-vote");
      }
      s.filter = FilterModel{Probability(keep_correct), Probability(keep_incorrect)};
    }
    cmd.action = s;
  } else if (resample->parsed()) {
    cmd.action = ResampleCmd{trace_path, detail::resolve_ks(ks, k_max), runs, SeedSpec{seed},
                             strat, threads};
  } else if (fit->parsed()) {
    FitCmd f;
    const bool has_level = std::any_of(fit_level.begin(), fit_level.end(),
                                       [](const CLI::Option* o) { return o->count() > 0; });
    if (fit_trace_opt->count() > 0 && has_level) {
      throw UsageError("fit: --trace and --alpha/--p1/--p2 are mutually exclusive");
    }
    if (fit_trace_opt->count() > 0) {
      f.trace_path = trace_path;
    } else {
      for (const auto* o : fit_level) {
        if (o->count() == 0) {
          throw UsageError("fit: " + o->get_name() + " is required without --trace");
        }
      }
      f.level = level;
    }
    f.train_ks = detail::resolve_ks(train_ks, std::nullopt, "--train-ks");
    if (f.train_ks.size() < 3) throw UsageError("--train-ks: at least 3 values are required");
    f.runs = runs;
    f.seed = SeedSpec{seed};
    f.strategy = strat;
    f.rule = rule_or(EvenKRule::BetaInterpolation);
    f.polish = !no_polish;
    f.threads = threads;
    cmd.action = f;
  } else {
    cmd.action = PredictCmd{model_path, detail::resolve_ks(ks, k_max), report_optimum};
  }
  if (!out_path.empty()) cmd.out_path = out_path;
  cmd.format = format == "json" ? CurveFormat::Json : CurveFormat::Csv;
  return cmd;
}

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return in;
}

inline void write_shape(std::ostream& out, const BiLevelSpec& spec, CurveFormat format) {
  const auto shape = landscape_shape(spec);
  std::optional<double> t;
  if (spec.p2() < 0.5 && spec.p1() > 0.5) t = threshold_t(spec.p1(), spec.p2());
  if (format == CurveFormat::Json) {
    nlohmann::json obj{{"shape", std::string(to_string(shape))}};
    obj["t"] = t ? nlohmann::json(std::stod(format_number(*t))) : nlohmann::json(nullptr);
    obj["threshold"] =
        t ? nlohmann::json(std::stod(format_number(1.0 - 1.0 / *t))) : nlohmann::json(nullptr);
    out << obj.dump() << '\n';
    return;
  }
  out << to_string(shape) << " t=" << (t ? format_number(*t) : "NA")
      << " threshold=" << (t ? format_number(1.0 - 1.0 / *t) : "NA") << '\n';
}

inline void write_optimal(std::ostream& out, const OptimalK& opt, CurveFormat format) {
  std::vector<CurvePoint> pts;
  for (std::size_t i = 0; i < opt.curve.size(); ++i) {
    pts.push_back({static_cast<int>(i) + 1, opt.curve[i], std::nullopt});
  }
  const PerformanceCurve curve(std::move(pts));
  if (format == CurveFormat::Json) {
    nlohmann::json obj;
    obj["optimal_k"] = opt.k;
    obj["continuous_k"] = opt.continuous
                              ? nlohmann::json(std::stod(format_number(*opt.continuous)))
                              : nlohmann::json(nullptr);
    obj["rounded_k"] = opt.rounded ? nlohmann::json(*opt.rounded) : nlohmann::json(nullptr);
    obj["curve"] = curve_to_json(curve);
    out << obj.dump(2) << '\n';
    return;
  }
  out << "optimal_k=" << opt.k
      << " continuous_k=" << (opt.continuous ? format_number(*opt.continuous) : "NA")
      << " rounded_k=" << (opt.rounded ? std::to_string(*opt.rounded) : "NA") << '\n';
  write_curve_csv(out, curve);
}

}  // namespace detail

/// Run a parsed command. Data goes to `out`, diagnostics to `err`.
inline int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  std::ofstream file;
  std::ostream* sink = &out;
  if (cmd.out_path) {
    file.open(*cmd.out_path);
    if (!file) {
      err << "votescale: cannot open " << *cmd.out_path << " for writing\n";
      return kExitFailure;
    }
    sink = &file;
  }
  try {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, ExactCmd>) {
            write_curve(*sink, exact_curve(c.level.spec(), c.ks, c.rule), cmd.format);
          } else if constexpr (std::is_same_v<T, ShapeCmd>) {
            detail::write_shape(*sink, c.level.spec(), cmd.format);
          } else if constexpr (std::is_same_v<T, OptimalKCmd>) {
            const auto opt = optimal_k(c.level.spec(), c.k_max, c.rule);
            if (!opt.consistent) {
              err << "votescale: warning: scan optimum " << opt.k
                  << " is not adjacent to the closed-form K*\n";
            }
            detail::write_optimal(*sink, opt, cmd.format);
          } else if constexpr (std::is_same_v<T, SimulateCmd>) {
            const auto pop = SyntheticPopulation::from_bilevel(c.level.spec(), c.filter);
            write_curve(*sink, simulate_curve(pop, c.strategy, c.ks, c.runs, c.seed, c.threads),
                        cmd.format);
          } else if constexpr (std::is_same_v<T, ResampleCmd>) {
            auto in = detail::open_input(c.trace_path);
            const auto trace = read_trace_jsonl(in);
            write_curve(*sink,
                        resample_curve_from_trace(trace, c.strategy, c.ks, c.runs, c.seed,
                                                  c.threads),
                        cmd.format);
          } else if constexpr (std::is_same_v<T, FitCmd>) {
            FitOptions options;
            options.polish = c.polish;
            ScalingModel model;
            if (c.trace_path) {
              auto in = detail::open_input(*c.trace_path);
              const auto trace = read_trace_jsonl(in);
              model = fit_trace(trace, c.strategy, c.train_ks, c.runs, c.seed, options,
                                c.threads);
            } else {
              model = fit_bilevel(c.level->spec(), c.train_ks, c.rule, options);
            }
            write_model(*sink, model);
          } else if constexpr (std::is_same_v<T, PredictCmd>) {
            auto in = detail::open_input(c.model_path);
            const auto model = read_model(in);
            write_curve(*sink, predict(model, c.ks), cmd.format);
            if (c.report_optimum) {
              err << "predicted optimal k: " << predict_optimal_k(model, c.ks.back()) << '\n';
            }
          }
        },
        cmd.action);
  } catch (const std::exception& e) {
    err << "votescale: " << e.what() << '\n';
    return kExitFailure;
  }
  sink->flush();
  return kExitOk;
}

/// parse_args + execute with exit-code mapping.
inline int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Command cmd;
  try {
    cmd = parse_args(argv);
  } catch (const HelpRequested& help) {
    out << help.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "votescale: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "votescale: " << e.what() << '\n';
    return kExitUsage;
  }
  return execute(cmd, out, err);
}

}  // namespace votescale::cli
