#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/fact_prob.hpp"
#include "fpv/grid.hpp"
#include "fpv/ground.hpp"
#include "fpv/pddl.hpp"
#include "fpv/recognition.hpp"
#include "fpv/sexpr.hpp"

namespace fpv::bench {

inline constexpr std::string_view kPlaceholder = "<HYPOTHESIS>";

using Hypothesis = std::vector<pddl::Literal>;

/// One goal-recognition problem as laid out on disk.
struct RecognitionInstance {
  std::string name;
  std::string domain_text;
  std::string template_text;
  std::string domain_source = "domain.pddl";
  std::string template_source = "template.pddl";
  std::vector<Hypothesis> hypotheses;
  std::size_t true_goal_index = 0;
  std::vector<pddl::Atom> observations;
};

namespace detail {

inline std::string read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InstanceError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline bool blank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

inline pddl::Atom ground_atom(const sexpr::Node &node) {
  if (!node.is_list || node.children.empty())
    throw ParseError("expected a parenthesized atom", node.line, node.column);
  pddl::Atom atom;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const auto &c = node.children[i];
    if (!c.is_atom())
      throw ParseError("nested expression inside atom", c.line, c.column);
    if (i == 0)
      atom.predicate = c.atom;
    else
      atom.args.push_back(c.atom);
  }
  return atom;
}

} // namespace detail

/// Parses one hypothesis line: comma-separated ground literals such as
/// "(at p1 l3), (not (at p2 l1))".
inline Hypothesis parse_hypothesis(std::string_view line) {
  std::string text(line);
  std::replace(text.begin(), text.end(), ',', ' ');
  Hypothesis out;
  for (const auto &node : sexpr::read_all(text)) {
    if (node.has_head("not")) {
      if (node.children.size() != 2)
        throw ParseError("'not' takes exactly one atom", node.line,
                         node.column);
      out.push_back({detail::ground_atom(node.children[1]), true});
    } else {
      out.push_back({detail::ground_atom(node), false});
    }
  }
  if (out.empty())
    throw ParseError("empty hypothesis", 1, 1);
  return out;
}

/// Canonical, order-insensitive text of a hypothesis.
inline std::string normalize_hypothesis(const Hypothesis &h) {
  std::vector<std::string> parts;
  for (const auto &lit : h)
    parts.push_back(pddl::to_string(lit));
  std::sort(parts.begin(), parts.end());
  parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i)
    out += (i ? ", " : "") + parts[i];
  return out;
}

inline pddl::Atom parse_observation(std::string_view line) {
  return detail::ground_atom(sexpr::read_one(line));
}

/// File locations of one instance. Observations and the real hypothesis
/// are optional so that estimation-only tools can reuse the loader.
struct InstancePaths {
  std::filesystem::path domain;
  std::filesystem::path problem_template;
  std::filesystem::path hyps;
  std::optional<std::filesystem::path> obs;
  std::optional<std::filesystem::path> real_hyp;

  /// The standard <dir>/{domain.pddl, template.pddl, hyps.dat, obs.dat,
  /// real_hyp.dat} layout.
  static InstancePaths in_directory(const std::filesystem::path &dir) {
    return {dir / "domain.pddl", dir / "template.pddl", dir / "hyps.dat",
            dir / "obs.dat", dir / "real_hyp.dat"};
  }
};

inline RecognitionInstance load_instance(const InstancePaths &paths) {
  RecognitionInstance inst;
  inst.domain_text = detail::read_file(paths.domain);
  inst.template_text = detail::read_file(paths.problem_template);
  inst.domain_source = paths.domain.string();
  inst.template_source = paths.problem_template.string();

  std::vector<std::string> keys;
  const auto hyp_lines = detail::lines_of(detail::read_file(paths.hyps));
  for (std::size_t i = 0; i < hyp_lines.size(); ++i) {
    if (detail::blank(hyp_lines[i]))
      continue;
    try {
      inst.hypotheses.push_back(parse_hypothesis(hyp_lines[i]));
    } catch (const ParseError &e) {
      throw InstanceError(paths.hyps.string() + " line " +
                          std::to_string(i + 1) + ": " + e.what());
    }
    keys.push_back(normalize_hypothesis(inst.hypotheses.back()));
  }
  if (inst.hypotheses.empty())
    throw InstanceError(paths.hyps.string() + " lists no hypotheses");

  if (paths.obs) {
    const auto obs_lines = detail::lines_of(detail::read_file(*paths.obs));
    for (std::size_t i = 0; i < obs_lines.size(); ++i) {
      if (detail::blank(obs_lines[i]))
        continue;
      try {
        inst.observations.push_back(parse_observation(obs_lines[i]));
      } catch (const ParseError &e) {
        throw InstanceError(paths.obs->string() + " line " +
                            std::to_string(i + 1) + ": " + e.what());
      }
    }
    if (inst.observations.empty())
      throw InstanceError(paths.obs->string() + " lists no observations");
  }

  if (paths.real_hyp) {
    std::string real;
    for (const auto &line :
         detail::lines_of(detail::read_file(*paths.real_hyp)))
      if (!detail::blank(line)) {
        real = line;
        break;
      }
    if (real.empty())
      throw InstanceError(paths.real_hyp->string() + " is empty");
    const std::string key = normalize_hypothesis(parse_hypothesis(real));
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end())
      throw InstanceError("real hypothesis " + key +
                          " not found among the hypotheses");
    inst.true_goal_index = static_cast<std::size_t>(it - keys.begin());
  }
  return inst;
}

/// Loads an instance directory; every file of the layout is required.
inline RecognitionInstance load_instance(const std::filesystem::path &dir) {
  auto inst = load_instance(InstancePaths::in_directory(dir));
  inst.name = dir.filename().string();
  if (inst.name.empty())
    inst.name = dir.parent_path().filename().string();
  return inst;
}

/// Replaces every "<HYPOTHESIS>" in a problem template.
inline std::string substitute_hypothesis(std::string text,
                                         std::string_view replacement) {
  for (std::size_t at = text.find(kPlaceholder); at != std::string::npos;
       at = text.find(kPlaceholder, at + replacement.size()))
    text.replace(at, kPlaceholder.size(), replacement);
  return text;
}

/// An instance parsed, compiled and grounded, with observations resolved to
/// ground actions.
struct PreparedInstance {
  GroundProblem problem;
  std::vector<ObservationEvent> observations;
  std::size_t true_goal_index = 0;
};

inline PreparedInstance prepare_instance(const RecognitionInstance &inst) {
  pddl::DomainAst domain;
  pddl::ProblemAst problem;
  try {
    domain = pddl::parse_domain(inst.domain_text);
  } catch (const Error &e) {
    throw InstanceError(inst.domain_source + ": " + e.what());
  }
  try {
    problem = pddl::parse_problem(substitute_hypothesis(inst.template_text, ""),
                                  domain);
  } catch (const Error &e) {
    throw InstanceError(inst.template_source + ": " + e.what());
  }
  const auto task = pddl::compile_negations(domain, problem, inst.hypotheses);
  PreparedInstance out;
  out.problem = ground(task.domain, task.problem, inst.hypotheses);
  out.true_goal_index = inst.true_goal_index;
  for (const auto &atom : inst.observations) {
    const std::string name = canonical_name(atom.predicate, atom.args);
    auto id = out.problem.find_action(name);
    if (!id)
      throw InstanceError("observed action " + name +
                          " is not a ground action of the task");
    out.observations.push_back(ObservationEvent::of_action(*id));
  }
  return out;
}

/// ⌊T·λ⌋, robust to λ values like 0.3 that are not exact in binary.
inline std::size_t prefix_length(std::size_t total, double lambda) {
  const double raw = static_cast<double>(total) * lambda;
  const auto len = static_cast<std::size_t>(std::floor(raw + 1e-9));
  return std::min(len, total);
}

/// Mean over instances of [true goal ∈ recognized] / |recognized|.
inline double precision(std::span<const std::vector<std::size_t>> recognized,
                        std::span<const std::size_t> truths) {
  if (recognized.empty())
    throw Error("precision of an empty dataset");
  if (recognized.size() != truths.size())
    throw LengthMismatch(recognized.size(), truths.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < recognized.size(); ++i) {
    const auto &set = recognized[i];
    if (set.empty())
      throw Error("recognized goal set must be nonempty");
    if (std::find(set.begin(), set.end(), truths[i]) != set.end())
      sum += 1.0 / static_cast<double>(set.size());
  }
  return sum / static_cast<double>(recognized.size());
}

/// Mean size of the recognized goal sets.
inline double spread(std::span<const std::vector<std::size_t>> recognized) {
  if (recognized.empty())
    throw Error("spread of an empty dataset");
  double sum = 0.0;
  for (const auto &set : recognized)
    sum += static_cast<double>(set.size());
  return sum / static_cast<double>(recognized.size());
}

inline std::vector<double> default_lambdas() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
}

struct BenchOptions {
  std::vector<double> lambdas = default_lambdas();
  std::size_t n_samples = 10;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;
  std::size_t threads = 1;
  Aggregation aggregation = Aggregation::EmpiricalUnion;
};

struct LambdaStats {
  double lambda = 0.0;
  double precision_mean = 0.0;
  double precision_std = 0.0;
  double spread_mean = 0.0;
  double spread_std = 0.0;
  double baseline_precision = 0.0;
  double baseline_spread = 0.0;
};

struct InstanceResult {
  std::string name;
  std::size_t goal_count = 0;
  std::size_t true_goal_index = 0;
  std::size_t observation_count = 0;
  /// recognized[r][k]: goals recognized in repeat r at lambdas[k].
  std::vector<std::vector<std::vector<std::size_t>>> recognized;
  /// Untimed online trace of the first repeat.
  RecognitionTrace trace;
};

struct InstanceFailure {
  std::string name;
  std::string error;
};

struct TimingSummary {
  double estimation_ns_per_goal = 0.0;
  double recognition_ns_per_step = 0.0;
  std::size_t goals_estimated = 0;
  std::size_t steps_recognized = 0;
};

struct EvaluationReport {
  BenchOptions options;
  std::vector<LambdaStats> per_lambda;
  std::vector<InstanceResult> instances;
  std::vector<InstanceFailure> failures;
  TimingSummary timing;
};

namespace detail {

inline double mean(const std::vector<double> &xs) {
  return xs.empty() ? 0.0
                    : std::accumulate(xs.begin(), xs.end(), 0.0) /
                          static_cast<double>(xs.size());
}

/// Population standard deviation.
inline double stddev(const std::vector<double> &xs) {
  if (xs.size() < 2 ||
      std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) ==
          xs.end())
    return 0.0;
  const double m = mean(xs);
  double sq = 0.0;
  for (double x : xs)
    sq += (x - m) * (x - m);
  return std::sqrt(sq / static_cast<double>(xs.size()));
}

struct InstanceRun {
  std::optional<InstanceResult> result;
  std::optional<InstanceFailure> failure;
  double estimation_ns = 0.0;
  double recognition_ns = 0.0;
};

inline InstanceRun run_instance(const std::filesystem::path &dir,
                                const BenchOptions &options) {
  InstanceRun run;
  const std::string name = dir.filename().string();
  try {
    const auto prepared = prepare_instance(load_instance(dir));
    const auto &problem = prepared.problem;
    InstanceResult result;
    result.name = name;
    result.goal_count = problem.goals.size();
    result.true_goal_index = prepared.true_goal_index;
    result.observation_count = prepared.observations.size();
    for (std::size_t r = 0; r < options.repeats; ++r) {
      EstimateOptions est{options.n_samples,
                          r == 0 ? options.seed
                                 : derive_seed(options.seed, {r}),
                          options.aggregation};
      const auto t0 = std::chrono::steady_clock::now();
      const auto tables = estimate_all(problem, est);
      run.estimation_ns += static_cast<double>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(
              std::chrono::steady_clock::now() - t0)
              .count());
      if (tables[prepared.true_goal_index].unreachable)
        throw InstanceError("true goal is relaxed-unreachable");

      auto trace =
          recognize_online(problem, tables, prepared.observations, true);
      std::vector<std::vector<std::size_t>> at_lambda;
      for (double lambda : options.lambdas) {
        const std::size_t len =
            prefix_length(prepared.observations.size(), lambda);
        if (len == 0) {
          std::vector<std::size_t> all(problem.goals.size());
          std::iota(all.begin(), all.end(), std::size_t{0});
          at_lambda.push_back(std::move(all));
        } else {
          at_lambda.push_back(trace.steps[len - 1].result.recognized);
        }
      }
      result.recognized.push_back(std::move(at_lambda));
      for (auto &step : trace.steps) {
        run.recognition_ns += static_cast<double>(step.elapsed_ns);
        step.elapsed_ns = 0;
      }
      if (r == 0)
        result.trace = std::move(trace);
    }
    run.result = std::move(result);
  } catch (const std::exception &e) {
    run.failure = InstanceFailure{name, e.what()};
  }
  return run;
}

} // namespace detail

/// Instance directories directly under `root`, sorted by name.
inline std::vector<std::filesystem::path>
list_instances(const std::filesystem::path &root) {
  if (!std::filesystem::is_directory(root))
    throw InstanceError("dataset root " + root.string() +
                        " is not a directory");
  std::vector<std::filesystem::path> dirs;
  for (const auto &entry : std::filesystem::directory_iterator(root))
    if (entry.is_directory())
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

/// Runs online recognition on every instance under `root` for each λ and
/// aggregates precision and spread, alongside the uniform baseline that
/// always answers with every goal.
inline EvaluationReport run_benchmark(const std::filesystem::path &root,
                                      const BenchOptions &options = {}) {
  if (options.n_samples == 0 || options.repeats == 0)
    throw Error("n_samples and repeats must be positive");
  for (double l : options.lambdas)
    if (!(l >= 0.0 && l <= 1.0))
      throw Error("lambda values must lie in [0, 1]");
  const auto dirs = list_instances(root);
  if (dirs.empty())
    throw InstanceError("dataset root " + root.string() +
                        " contains no instances");

  std::vector<detail::InstanceRun> runs(dirs.size());
  const std::size_t threads =
      std::max<std::size_t>(1, std::min(options.threads, dirs.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < dirs.size(); ++i)
      runs[i] = detail::run_instance(dirs[i], options);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < threads; ++w)
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < dirs.size(); i += threads)
          runs[i] = detail::run_instance(dirs[i], options);
      });
    for (auto &t : workers)
      t.join();
  }

  EvaluationReport report;
  report.options = options;
  double est_ns = 0.0, rec_ns = 0.0;
  for (auto &run : runs) {
    if (run.failure) {
      report.failures.push_back(std::move(*run.failure));
      continue;
    }
    est_ns += run.estimation_ns;
    rec_ns += run.recognition_ns;
    report.timing.goals_estimated +=
        run.result->goal_count * options.repeats;
    report.timing.steps_recognized +=
        run.result->observation_count * options.repeats;
    report.instances.push_back(std::move(*run.result));
  }
  if (report.timing.goals_estimated > 0)
    report.timing.estimation_ns_per_goal =
        est_ns / static_cast<double>(report.timing.goals_estimated);
  if (report.timing.steps_recognized > 0)
    report.timing.recognition_ns_per_step =
        rec_ns / static_cast<double>(report.timing.steps_recognized);
  if (report.instances.empty())
    return report;

  std::vector<std::size_t> truths;
  for (const auto &inst : report.instances)
    truths.push_back(inst.true_goal_index);
  for (std::size_t k = 0; k < options.lambdas.size(); ++k) {
    LambdaStats stats;
    stats.lambda = options.lambdas[k];
    std::vector<double> precisions, spreads;
    for (std::size_t r = 0; r < options.repeats; ++r) {
      std::vector<std::vector<std::size_t>> sets;
      for (const auto &inst : report.instances)
        sets.push_back(inst.recognized[r][k]);
      precisions.push_back(precision(sets, truths));
      spreads.push_back(spread(sets));
    }
    stats.precision_mean = detail::mean(precisions);
    stats.precision_std = detail::stddev(precisions);
    stats.spread_mean = detail::mean(spreads);
    stats.spread_std = detail::stddev(spreads);
    std::vector<std::vector<std::size_t>> uniform;
    for (const auto &inst : report.instances) {
      std::vector<std::size_t> all(inst.goal_count);
      std::iota(all.begin(), all.end(), std::size_t{0});
      uniform.push_back(std::move(all));
    }
    stats.baseline_precision = precision(uniform, truths);
    stats.baseline_spread = spread(uniform);
    report.per_lambda.push_back(stats);
  }
  return report;
}

struct ProfileOptions {
  std::size_t grid_side = 61;
  std::vector<std::size_t> observation_counts = {5, 25, 50, 100};
  std::vector<std::size_t> goal_counts = {5, 10};
  std::size_t n_samples = 10;
  std::uint64_t seed = 0;
  /// Timing repetitions; the fastest repetition is reported.
  std::size_t repetitions = 5;
};

struct TimingRow {
  std::size_t goals = 0;
  std::size_t observations = 0;
  double estimation_ns_total = 0.0;
  double estimation_ns_per_goal = 0.0;
  double recognition_ns_per_step = 0.0;
};

/// Open square grid with the agent in the top-left corner and `goals`
/// candidate goals spread along the anti-diagonal at distance `distance`.
inline grid::GridSpec profile_grid(std::size_t side, std::size_t goals,
                                   std::size_t distance) {
  if (distance > 2 * (side - 1) || distance < side - 1)
    throw Error("goal distance does not fit the grid");
  grid::GridSpec spec;
  spec.width = spec.height = side;
  spec.start = 1;
  const std::size_t lo = distance - (side - 1); // smallest row on diagonal
  const std::size_t span = (side - 1) - lo;
  for (std::size_t k = 0; k < goals; ++k) {
    const std::size_t row =
        lo + (goals == 1 ? span / 2 : k * span / (goals - 1));
    const std::size_t col = distance - row;
    spec.goals.push_back(row * side + col + 1);
  }
  std::sort(spec.goals.begin(), spec.goals.end());
  spec.goals.erase(std::unique(spec.goals.begin(), spec.goals.end()),
                   spec.goals.end());
  if (spec.goals.size() != goals)
    throw Error("grid too small for the requested goal count");
  spec.true_goal = goals / 2;
  return spec;
}

/// Separates the one-time estimation cost from the per-observation
/// recognition cost on generated grids of growing goal and observation
/// counts.
inline std::vector<TimingRow> timing_profile(const ProfileOptions &options) {
  using clock = std::chrono::steady_clock;
  const std::size_t max_obs =
      options.observation_counts.empty()
          ? 0
          : *std::max_element(options.observation_counts.begin(),
                              options.observation_counts.end());
  const std::size_t distance = std::max<std::size_t>(
      max_obs, options.grid_side); // goals at least max_obs steps away
  std::vector<TimingRow> rows;
  for (std::size_t goals : options.goal_counts) {
    const grid::GridSpec spec = profile_grid(options.grid_side, goals, distance);
    RecognitionInstance inst;
    inst.domain_text = grid::domain_pddl();
    inst.template_text = grid::template_pddl(spec);
    for (std::size_t g : spec.goals)
      inst.hypotheses.push_back(parse_hypothesis(grid::hypothesis_line(g)));
    inst.true_goal_index = spec.true_goal;
    for (const auto &line : grid::observation_lines(spec, options.seed))
      inst.observations.push_back(parse_observation(line));
    const auto prepared = prepare_instance(inst);

    const EstimateOptions est{options.n_samples, options.seed,
                              Aggregation::EmpiricalUnion};
    double best_est = std::numeric_limits<double>::infinity();
    std::vector<FactProbabilityTable> tables;
    for (std::size_t r = 0; r < std::max<std::size_t>(1, options.repetitions);
         ++r) {
      const auto t0 = clock::now();
      tables = estimate_all(prepared.problem, est);
      best_est = std::min(
          best_est,
          static_cast<double>(
              std::chrono::duration_cast<std::chrono::nanoseconds>(
                  clock::now() - t0)
                  .count()));
    }

    for (std::size_t n_obs : options.observation_counts) {
      const std::size_t used = std::min(n_obs, prepared.observations.size());
      const std::span<const ObservationEvent> prefix(
          prepared.observations.data(), used);
      double best_step = std::numeric_limits<double>::infinity();
      if (used == 0)
        best_step = 0.0;
      // Short prefixes are replayed more often so every measurement covers
      // a comparable amount of work.
      const std::size_t replays =
          used == 0 ? 0 : std::max<std::size_t>(1, max_obs / used);
      for (std::size_t r = 0; used > 0 && r < options.repetitions; ++r) {
        double total = 0.0;
        for (std::size_t k = 0; k < replays; ++k) {
          const auto trace =
              recognize_online(prepared.problem, tables, prefix, true);
          for (const auto &s : trace.steps)
            total += static_cast<double>(s.elapsed_ns);
        }
        best_step = std::min(best_step,
                             total / static_cast<double>(used * replays));
      }
      TimingRow row;
      row.goals = goals;
      row.observations = used;
      row.estimation_ns_total = best_est;
      row.estimation_ns_per_goal = best_est / static_cast<double>(goals);
      row.recognition_ns_per_step = best_step;
      rows.push_back(row);
    }
  }
  return rows;
}

} // namespace fpv::bench
