#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("fpv-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Run fpv_run(const std::string &args) {
  static int counter = 0;
  const fs::path dir = scratch("run" + std::to_string(counter++));
  const std::string cmd = std::string(FPV_CLI) + " " + args + " >" +
                          (dir / "out").string() + " 2>" +
                          (dir / "err").string();
  Run r;
  const int status = std::system(cmd.c_str());
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(dir / "out");
  r.err = slurp(dir / "err");
  return r;
}

std::string instance_args(const std::string &name, bool with_obs = false) {
  const fs::path d = fpv::test::fixture(name);
  std::string s = "--domain " + (d / "domain.pddl").string() + " --template " +
                  (d / "template.pddl").string() + " --hyps " +
                  (d / "hyps.dat").string();
  if (with_obs)
    s += " --obs " + (d / "obs.dat").string() + " --real " +
         (d / "real_hyp.dat").string();
  return s;
}

int data_rows(const std::string &csv) {
  std::stringstream in(csv);
  std::string line;
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#' && line.rfind("fact_name", 0) != 0)
      ++rows;
  return rows;
}

} // namespace

TEST(Cli, EstimateWritesOneTablePerGoal) {
  const auto out = scratch("estimate");
  const auto r = fpv_run("estimate " + instance_args("grid") + " --output " +
                         out.string() + " --aggregation noisy-or");
  ASSERT_EQ(r.code, 0) << r.err;
  for (int g = 0; g < 2; ++g) {
    const auto csv = slurp(out / ("goal_" + std::to_string(g) + ".csv"));
    EXPECT_EQ(data_rows(csv), 25);
    EXPECT_NE(csv.find("# aggregation: noisy-or"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(out / "goal_2.csv"));
}

TEST(Cli, InvalidPddlNamesFileAndLine) {
  const auto dir = scratch("bad");
  std::ofstream(dir / "domain.pddl") << "(define (domain grid)\n  (:predicates (p)\n";
  const auto g = fpv::test::fixture("grid");
  const auto r = fpv_run("estimate --domain " + (dir / "domain.pddl").string() +
                         " --template " + (g / "template.pddl").string() +
                         " --hyps " + (g / "hyps.dat").string() +
                         " --output " + (dir / "out").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("domain.pddl"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST(Cli, RecognizeGridEndsInG1) {
  const auto r = fpv_run("recognize " + instance_args("grid", true));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  const auto &steps = j.at("steps");
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps.back().at("recognized"), nlohmann::json::array({0}));
  EXPECT_EQ(j.at("true_goal"), 0);
}

TEST(Cli, RecognizeAtLambdaZeroTiesAllGoals) {
  const auto r = fpv_run("recognize " + instance_args("logistics", true) +
                         " --at-lambda 0.0");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("step").at("recognized"), nlohmann::json::array({0, 1, 2}));
  EXPECT_EQ(j.at("step").at("t"), 0);
}

TEST(Cli, RecognizeIsByteIdentical) {
  const std::string args =
      "recognize " + instance_args("logistics", true) + " --seed 7";
  const auto a = fpv_run(args);
  const auto b = fpv_run(args + " --threads 3");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, fpv_run(args).out);
}

TEST(Cli, OracleMatchesReference) {
  const auto out = scratch("oracle");
  const auto r =
      fpv_run("oracle " + instance_args("grid") + " --output " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto problem = fpv::test::load_fixture("grid").problem;
  const auto want = fpv::test::reference_tables(problem);
  for (std::size_t g = 0; g < 2; ++g) {
    std::ifstream in(out / ("goal_" + std::to_string(g) + ".csv"));
    EXPECT_EQ(fpv::read_table_csv(in, problem, g).p, want[g].p);
  }
}

TEST(Cli, OracleCapExitsWithTwo) {
  const auto r = fpv_run("oracle " + instance_args("grid") +
                         " --max-states 10 --output " +
                         scratch("cap").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("cap"), std::string::npos);
}

TEST(Cli, OracleUniquePlanIsZeroOne) {
  const auto out = scratch("unique");
  ASSERT_EQ(fpv_run("oracle " + instance_args("chain") + " --output " +
                    out.string())
                .code,
            0);
  const auto csv = slurp(out / "goal_0.csv");
  std::stringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("fact_name", 0) == 0)
      continue;
    const auto value = line.substr(line.find(',') + 1, 3);
    EXPECT_TRUE(value == "0.0" || value == "1.0") << line;
  }
}

TEST(Cli, BenchWritesReports) {
  const auto out = scratch("bench");
  const auto r = fpv_run("bench --dataset " + std::string(FPV_FIXTURES_DIR) +
                         " --repeats 20 --output " + out.string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = slurp(out / "precision.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,spread");
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report.at("options").at("repeats"), 20);
  EXPECT_TRUE(report.at("per_lambda")[0].contains("precision_std"));
  EXPECT_TRUE(report.at("per_lambda")[0].contains("spread_std"));
  EXPECT_EQ(report.at("counts").at("succeeded"), 3);
}

TEST(Cli, BenchEmptyDatasetExitsWithOne) {
  const auto r = fpv_run("bench --dataset " + scratch("empty").string() +
                         " --output " + scratch("empty-out").string());
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, GenGridExampleMatchesFixture) {
  const auto out = scratch("gen");
  ASSERT_EQ(fpv_run("gen-grid --example --output " + out.string()).code, 0);
  const auto fixture = fpv::test::fixture("grid");
  for (const char *f : {"domain.pddl", "template.pddl", "hyps.dat", "real_hyp.dat"})
    EXPECT_EQ(slurp(out / f), slurp(fixture / f)) << f;
  const auto r = fpv_run("gen-grid --width 6 --height 4 --num-goals 3 --seed 5 "
                         "--output " + (out / "random").string());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto inst = fpv::bench::prepare_instance(
      fpv::bench::load_instance(out / "random"));
  EXPECT_EQ(inst.problem.goals.size(), 3u);
  EXPECT_FALSE(inst.observations.empty());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(fpv_run("--help").code, 0);
  EXPECT_EQ(fpv_run("").code, 1);
  EXPECT_EQ(fpv_run("estimate --bogus").code, 1);
  EXPECT_EQ(fpv_run("estimate " + instance_args("grid") +
                    " --n-samples 0 --output /tmp/x")
                .code,
            1);
}
