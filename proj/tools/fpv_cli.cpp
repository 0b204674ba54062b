#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpv/fpv.hpp"

namespace fs = std::filesystem;

namespace {

struct InstanceFlags {
  std::string domain, problem_template, hyps, obs, real;

  void add_to(CLI::App &cmd, bool with_obs) {
    cmd.add_option("--domain", domain, "Domain PDDL file")->required();
    cmd.add_option("--template", problem_template,
                   "Problem template with the <HYPOTHESIS> placeholder")
        ->required();
    cmd.add_option("--hyps", hyps, "Candidate goals, one per line")
        ->required();
    if (with_obs) {
      cmd.add_option("--obs", obs, "Observed actions, one per line")
          ->required();
      cmd.add_option("--real", real, "True goal (optional)");
    }
  }

  fpv::bench::PreparedInstance load() const {
    fpv::bench::InstancePaths paths{domain, problem_template, hyps, {}, {}};
    if (!obs.empty())
      paths.obs = obs;
    if (!real.empty())
      paths.real_hyp = real;
    return fpv::bench::prepare_instance(fpv::bench::load_instance(paths));
  }
};

void write_tables(const fs::path &dir, const fpv::GroundProblem &problem,
                  const std::vector<fpv::FactProbabilityTable> &tables,
                  const std::vector<std::string> &header) {
  fs::create_directories(dir);
  for (const auto &t : tables) {
    const fs::path file = dir / ("goal_" + std::to_string(t.goal_index) + ".csv");
    std::ofstream out(file);
    if (!out)
      throw fpv::Error("cannot write " + file.string());
    auto comments = header;
    comments.push_back("goal " + std::to_string(t.goal_index) + ": " +
                       problem.goal_names.at(t.goal_index));
    if (t.unreachable)
      comments.push_back("goal is relaxed-unreachable");
    fpv::write_table_csv(out, problem, t, comments);
  }
}

std::string join(const std::vector<std::size_t> &xs) {
  std::string out;
  for (std::size_t x : xs)
    out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

void emit(const std::string &text, const std::string &output) {
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output);
  if (!out)
    throw fpv::Error("cannot write " + output);
  out << text;
}

std::string format_step(const fpv::RecognitionStep &step) {
  std::ostringstream out;
  out << "t=" << step.result.t << " recognized=" << join(step.result.recognized)
      << " h=";
  for (std::size_t g = 0; g < step.result.heuristic.size(); ++g)
    out << (g ? "," : "") << step.result.heuristic[g];
  out << '\n';
  return out.str();
}

std::vector<std::size_t> parse_cells(const std::string &text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty())
      continue;
    if (item.front() == 'c')
      item.erase(0, 1);
    try {
      out.push_back(std::stoul(item));
    } catch (const std::exception &) {
      throw fpv::Error("bad cell '" + item + "'");
    }
  }
  return out;
}

void gen_grid(const fs::path &dir, fpv::grid::GridSpec spec,
              std::size_t num_goals, std::uint64_t seed) {
  const std::size_t cells = fpv::grid::cell_count(spec);
  if (spec.width == 0 || spec.height == 0)
    throw fpv::Error("grid must be non-empty");
  for (std::size_t c : spec.blocked)
    if (c == 0 || c > cells)
      throw fpv::Error("blocked cell out of range: " + std::to_string(c));
  if (spec.start == 0 || spec.start > cells || spec.blocked.count(spec.start))
    throw fpv::Error("start cell must be an open cell of the grid");
  const auto dist = fpv::grid::distances(spec, spec.start);
  if (spec.goals.empty()) {
    std::vector<std::size_t> open;
    for (std::size_t c = 1; c <= cells; ++c)
      if (c != spec.start && dist[c])
        open.push_back(c);
    if (open.size() < num_goals)
      throw fpv::Error("not enough reachable cells for " +
                       std::to_string(num_goals) + " goals");
    fpv::Rng rng(fpv::derive_seed(seed, {1}));
    for (std::size_t k = 0; k < num_goals; ++k) {
      const std::size_t i = k + rng.index(open.size() - k);
      std::swap(open[k], open[i]);
      spec.goals.push_back(open[k]);
    }
  }
  for (std::size_t g : spec.goals)
    if (g == 0 || g > cells || !dist[g])
      throw fpv::Error("goal cell unreachable: " + std::to_string(g));
  if (spec.true_goal >= spec.goals.size())
    throw fpv::Error("true goal index out of range");

  fs::create_directories(dir);
  auto write = [&](const char *name, const std::string &text) {
    std::ofstream out(dir / name);
    if (!out)
      throw fpv::Error("cannot write " + (dir / name).string());
    out << text;
  };
  write("domain.pddl", fpv::grid::domain_pddl());
  write("template.pddl", fpv::grid::template_pddl(spec));
  std::string hyps;
  for (std::size_t g : spec.goals)
    hyps += fpv::grid::hypothesis_line(g) + "\n";
  write("hyps.dat", hyps);
  std::string obs;
  for (const auto &line :
       fpv::grid::observation_lines(spec, fpv::derive_seed(seed, {2})))
    obs += line + "\n";
  write("obs.dat", obs);
  write("real_hyp.dat",
        fpv::grid::hypothesis_line(spec.goals[spec.true_goal]) + "\n");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Goal recognition with fact probability vectors"};
  app.require_subcommand(1);

  std::size_t n_samples = 10;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string aggregation = "empirical-union";
  std::string output;
  std::string format = "json";
  auto add_sampling = [&](CLI::App &cmd) {
    cmd.add_option("--n-samples", n_samples, "Supporter samples per goal")
        ->check(CLI::PositiveNumber);
    cmd.add_option("--seed", seed, "Random seed");
    cmd.add_option("--aggregation", aggregation)
        ->check(CLI::IsMember({"empirical-union", "noisy-or"}));
    cmd.add_option("--threads", threads)->check(CLI::PositiveNumber);
  };

  // estimate
  InstanceFlags est_flags;
  auto *estimate = app.add_subcommand("estimate", "Write estimated fact tables");
  est_flags.add_to(*estimate, false);
  add_sampling(*estimate);
  estimate->add_option("--output", output, "Output directory")->required();
  estimate->add_option("--format", format)->check(CLI::IsMember({"csv"}));

  // oracle
  InstanceFlags ora_flags;
  std::size_t max_states = 1'000'000;
  auto *oracle = app.add_subcommand("oracle", "Write exact fact tables");
  ora_flags.add_to(*oracle, false);
  oracle->add_option("--max-states", max_states, "State expansion cap")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--output", output, "Output directory")->required();
  oracle->add_option("--format", format)->check(CLI::IsMember({"csv"}));

  // recognize
  InstanceFlags rec_flags;
  std::optional<double> at_lambda;
  bool timing = false;
  auto *recognize = app.add_subcommand("recognize", "Online goal recognition");
  rec_flags.add_to(*recognize, true);
  add_sampling(*recognize);
  recognize->add_option("--at-lambda", at_lambda,
                        "Report only the prefix of this observed fraction")
      ->check(CLI::Range(0.0, 1.0));
  recognize->add_flag("--timing", timing, "Record per-step wall-clock time");
  recognize->add_option("--format", format)
      ->check(CLI::IsMember({"json", "text"}));
  recognize->add_option("--output", output, "Output file (default stdout)");

  // bench
  std::string dataset;
  std::vector<double> lambdas = fpv::bench::default_lambdas();
  std::size_t repeats = 1;
  bool profile = false;
  auto *bench = app.add_subcommand("bench", "Evaluate a dataset of instances");
  bench->add_option("--dataset", dataset, "Directory of instance directories");
  add_sampling(*bench);
  bench->add_option("--lambdas", lambdas, "Observed fractions")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  bench->add_option("--output", output, "Output directory")->required();
  bench->add_flag("--profile", profile,
                  "Also write timing.csv from generated grid instances");

  // gen-grid
  fpv::grid::GridSpec spec;
  spec.width = spec.height = 10;
  std::string blocked, goals;
  std::size_t num_goals = 2;
  bool example = false;
  auto *gen = app.add_subcommand("gen-grid", "Generate a grid instance");
  gen->add_option("--output", output, "Output directory")->required();
  gen->add_option("--width", spec.width)->check(CLI::PositiveNumber);
  gen->add_option("--height", spec.height)->check(CLI::PositiveNumber);
  gen->add_option("--blocked", blocked, "Comma-separated blocked cells");
  gen->add_option("--start", spec.start);
  gen->add_option("--goals", goals, "Comma-separated goal cells");
  gen->add_option("--num-goals", num_goals, "Random goals when --goals is absent")
      ->check(CLI::PositiveNumber);
  gen->add_option("--true-goal", spec.true_goal, "Index of the true goal");
  gen->add_option("--seed", seed);
  gen->add_flag("--example", example, "The 5x5 two-goal example world");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const fpv::EstimateOptions est{n_samples, seed,
                                   fpv::parse_aggregation(aggregation)};
    if (*estimate) {
      const auto prepared = est_flags.load();
      const auto tables = fpv::estimate_all(prepared.problem, est, threads);
      write_tables(output, prepared.problem, tables,
                   {"method: estimate",
                    "aggregation: " + aggregation,
                    "n_samples: " + std::to_string(n_samples),
                    "seed: " + std::to_string(seed)});
    } else if (*oracle) {
      const auto prepared = ora_flags.load();
      std::vector<fpv::FactProbabilityTable> tables;
      for (std::size_t g = 0; g < prepared.problem.goals.size(); ++g)
        tables.push_back(
            fpv::exact_oracle(prepared.problem, g, {max_states}));
      write_tables(output, prepared.problem, tables, {"method: oracle"});
    } else if (*recognize) {
      const auto prepared = rec_flags.load();
      const auto tables = fpv::estimate_all(prepared.problem, est, threads);
      const auto trace = fpv::recognize_online(
          prepared.problem, tables, prepared.observations, timing);
      nlohmann::json doc;
      std::string text;
      if (at_lambda) {
        const std::size_t len = fpv::bench::prefix_length(
            prepared.observations.size(), *at_lambda);
        fpv::RecognitionStep step;
        if (len == 0)
          step.result = fpv::OnlineRecognizer(prepared.problem, tables).current();
        else
          step = trace.steps[len - 1];
        doc = {{"lambda", *at_lambda}, {"step", fpv::to_json(step)}};
        text = format_step(step);
      } else {
        doc = fpv::to_json(trace);
        for (const auto &s : trace.steps)
          text += format_step(s);
      }
      doc["goals"] = prepared.problem.goal_names;
      if (!rec_flags.real.empty())
        doc["true_goal"] = prepared.true_goal_index;
      emit(format == "json" ? doc.dump(2) + "\n" : text, output);
    } else if (*bench) {
      if (dataset.empty() && !profile)
        throw fpv::Error("bench needs --dataset or --profile");
      const fs::path dir = output;
      fs::create_directories(dir);
      if (!dataset.empty()) {
        fpv::bench::BenchOptions options;
        options.lambdas = lambdas;
        options.n_samples = n_samples;
        options.seed = seed;
        options.repeats = repeats;
        options.threads = threads;
        options.aggregation = est.aggregation;
        const auto report = fpv::bench::run_benchmark(dataset, options);
        std::ofstream(dir / "report.json")
            << fpv::bench::to_json(report).dump(2) << '\n';
        std::ofstream csv(dir / "precision.csv");
        fpv::bench::write_precision_csv(csv, report);
        for (const auto &f : report.failures)
          std::cerr << "fpv: instance " << f.name << " failed: " << f.error
                    << '\n';
      }
      if (profile) {
        fpv::bench::ProfileOptions options;
        options.n_samples = n_samples;
        options.seed = seed;
        std::ofstream csv(dir / "timing.csv");
        fpv::bench::write_timing_csv(csv, fpv::bench::timing_profile(options));
      }
    } else if (*gen) {
      if (example) {
        spec = fpv::grid::example_world();
      } else {
        for (std::size_t c : parse_cells(blocked))
          spec.blocked.insert(c);
        spec.goals = parse_cells(goals);
      }
      gen_grid(output, spec, num_goals, seed);
    }
  } catch (const fpv::Error &e) {
    std::cerr << "fpv: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception &e) {
    std::cerr << "fpv: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
