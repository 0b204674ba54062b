#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fpv/fpv.hpp"

namespace fpv::test {

inline std::filesystem::path fixture(const std::string &name) {
  return std::filesystem::path(FPV_FIXTURES_DIR) / name;
}

inline bench::PreparedInstance load_fixture(const std::string &name) {
  return bench::prepare_instance(bench::load_instance(fixture(name)));
}

inline std::vector<std::string> fixture_names() {
  return {"chain", "grid", "logistics"};
}

/// Grounds an inline domain/problem pair.
inline GroundProblem ground_text(const std::string &domain_text,
                                 const std::string &problem_text) {
  const auto domain = pddl::parse_domain(domain_text);
  const auto problem = pddl::parse_problem(problem_text, domain);
  const auto task = pddl::compile_negations(domain, problem);
  return ground(task.domain, task.problem);
}

/// Builds a grid instance directly from a spec, one goal per goal cell.
inline GroundProblem ground_grid(const grid::GridSpec &spec) {
  bench::RecognitionInstance inst;
  inst.domain_text = grid::domain_pddl();
  inst.template_text = grid::template_pddl(spec);
  for (std::size_t g : spec.goals)
    inst.hypotheses.push_back(
        bench::parse_hypothesis(grid::hypothesis_line(g)));
  return bench::prepare_instance(inst).problem;
}

/// Reference probabilities for the example grid keyed by cell name: {p(G1), p(G2)}.
inline std::map<std::string, std::pair<double, double>> reference_probs() {
  std::ifstream in(std::filesystem::path(FPV_TEST_DATA_DIR) / "grid_reference.csv");
  std::map<std::string, std::pair<double, double>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell, a, b;
    std::getline(ss, cell, ',');
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    rows[cell] = {std::stod(a), std::stod(b)};
  }
  return rows;
}

/// Reference probability tables for the grid fixture's two goals.
inline std::vector<FactProbabilityTable>
reference_tables(const GroundProblem &problem) {
  std::vector<FactProbabilityTable> tables(2);
  for (std::size_t g = 0; g < 2; ++g) {
    tables[g].goal_index = g;
    tables[g].p.assign(problem.fact_count(), 0.0);
  }
  for (const auto &[cell, probs] : reference_probs()) {
    const FactId f = problem.find_fact("(is-at " + cell + ")").value();
    tables[0].p[f] = probs.first;
    tables[1].p[f] = probs.second;
  }
  return tables;
}

inline ActionId action_id(const GroundProblem &problem,
                          const std::string &name) {
  return problem.find_action(name).value();
}

inline FactId fact_id(const GroundProblem &problem, const std::string &name) {
  return problem.find_fact(name).value();
}

} // namespace fpv::test
