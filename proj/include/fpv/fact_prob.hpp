#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <exception>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/ground.hpp"
#include "fpv/relaxed_graph.hpp"
#include "fpv/supporters.hpp"

namespace fpv {

/// How per-sample supporter sets are turned into fact probabilities.
enum class Aggregation {
  /// Fraction of sampled sets containing at least one supporter of f.
  EmpiricalUnion,
  /// 1 - Π (1 - P(a)) over supporters a of f, with P(a) the fraction of
  /// sampled sets containing a.
  NoisyOr,
};

inline std::string_view to_string(Aggregation a) {
  return a == Aggregation::NoisyOr ? "noisy-or" : "empirical-union";
}

inline Aggregation parse_aggregation(std::string_view text) {
  if (text == "empirical-union")
    return Aggregation::EmpiricalUnion;
  if (text == "noisy-or")
    return Aggregation::NoisyOr;
  throw Error("unknown aggregation '" + std::string(text) + "'");
}

/// Per-goal probability that each fact is observed on the way from s0 to
/// the goal.
struct FactProbabilityTable {
  std::size_t goal_index = 0;
  std::vector<double> p;
  bool unreachable = false;

  std::size_t size() const noexcept { return p.size(); }

  double observed(FactId f) const {
    if (f >= p.size())
      throw UnknownId("unknown fact id " + std::to_string(f));
    return p[f];
  }
};

inline double not_observed(const FactProbabilityTable &table, FactId f) {
  return 1.0 - table.observed(f);
}

struct EstimateOptions {
  std::size_t n_samples = 10;
  std::uint64_t seed = 0;
  Aggregation aggregation = Aggregation::EmpiricalUnion;
};

/// Turns already drawn goal-level supporter sets into a probability table.
inline FactProbabilityTable
aggregate_samples(const GroundProblem &problem, std::size_t goal_index,
                  const std::vector<SupporterSampleSet> &samples,
                  Aggregation aggregation) {
  FactProbabilityTable table;
  table.goal_index = goal_index;
  table.p.assign(problem.fact_count(), 0.0);
  const auto n = static_cast<double>(samples.size());

  if (aggregation == Aggregation::EmpiricalUnion) {
    std::vector<std::size_t> hits(problem.fact_count(), 0);
    std::vector<std::size_t> stamp(problem.fact_count(),
                                   std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      for (ActionId a : samples[i].actions) {
        for (FactId f : problem.actions[a].add) {
          if (stamp[f] != i) {
            stamp[f] = i;
            ++hits[f];
          }
        }
      }
    }
    for (FactId f = 0; f < problem.fact_count(); ++f)
      table.p[f] = static_cast<double>(hits[f]) / n;
  } else {
    std::map<ActionId, std::size_t> occurrences;
    for (const auto &s : samples)
      for (ActionId a : s.actions)
        ++occurrences[a];
    std::vector<double> miss(problem.fact_count(), 1.0);
    for (const auto &[a, k] : occurrences)
      for (FactId f : problem.actions[a].add)
        miss[f] *= 1.0 - static_cast<double>(k) / n;
    for (FactId f = 0; f < problem.fact_count(); ++f)
      table.p[f] = 1.0 - miss[f];
  }
  for (FactId f : problem.s0)
    table.p[f] = 1.0;
  return table;
}

/// Estimates the observation probability of every fact for one goal from N
/// sampled supporter sets. Relaxed-unreachable goals get probability one on
/// s0 and zero elsewhere, with the table flagged.
inline FactProbabilityTable estimate(const GroundProblem &problem,
                                     std::size_t goal_index,
                                     const EstimateOptions &options = {}) {
  if (options.n_samples == 0)
    throw Error("number of samples must be positive");
  if (goal_index >= problem.goals.size())
    throw UnknownId("unknown goal index " + std::to_string(goal_index));
  const RelaxedPlanningGraph rpg =
      build_rpg(problem, problem.goals[goal_index]);
  if (!rpg.goal_reachable) {
    FactProbabilityTable table;
    table.goal_index = goal_index;
    table.p.assign(problem.fact_count(), 0.0);
    for (FactId f : problem.s0)
      table.p[f] = 1.0;
    table.unreachable = true;
    return table;
  }
  const auto samples = sample_goal_supporters(
      problem, rpg, goal_index, options.n_samples, options.seed);
  return aggregate_samples(problem, goal_index, samples, options.aggregation);
}

/// Tables for every goal. Goals are distributed over `threads` workers;
/// results do not depend on the thread count.
inline std::vector<FactProbabilityTable>
estimate_all(const GroundProblem &problem, const EstimateOptions &options = {},
             std::size_t threads = 1) {
  const std::size_t goals = problem.goals.size();
  std::vector<FactProbabilityTable> tables(goals);
  threads = std::max<std::size_t>(1, std::min(threads, goals));
  if (threads == 1) {
    for (std::size_t g = 0; g < goals; ++g)
      tables[g] = estimate(problem, g, options);
    return tables;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t g = w; g < goals; g += threads)
          tables[g] = estimate(problem, g, options);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto &t : workers)
    t.join();
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
  return tables;
}

struct OracleOptions {
  std::size_t max_states = 1'000'000;
};

namespace detail {

struct StateHash {
  std::size_t operator()(const std::vector<std::uint64_t> &bits) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (std::uint64_t w : bits)
      h = splitmix64(h ^ w);
    return static_cast<std::size_t>(h);
  }
};

class BitState {
public:
  explicit BitState(std::size_t facts) : words_((facts + 63) / 64, 0) {}
  bool test(FactId f) const { return (words_[f / 64] >> (f % 64)) & 1U; }
  void set(FactId f) { words_[f / 64] |= std::uint64_t{1} << (f % 64); }
  void reset(FactId f) { words_[f / 64] &= ~(std::uint64_t{1} << (f % 64)); }
  const std::vector<std::uint64_t> &words() const { return words_; }

private:
  std::vector<std::uint64_t> words_;
};

inline bool costs_equal(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b))
    return a == b;
  return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

} // namespace detail

/// Exact observation probabilities under an agent that picks uniformly
/// among all cost-optimal plans (real, non-relaxed semantics). p[f] is the
/// fraction of optimal plans that have f in s0 or in the add list of one of
/// their actions.
inline FactProbabilityTable exact_oracle(const GroundProblem &problem,
                                         std::size_t goal_index,
                                         const OracleOptions &options = {}) {
  if (goal_index >= problem.goals.size())
    throw UnknownId("unknown goal index " + std::to_string(goal_index));
  const FactSet &goal = problem.goals[goal_index];
  const std::size_t n_facts = problem.fact_count();

  std::vector<detail::BitState> states;
  std::unordered_map<std::vector<std::uint64_t>, std::size_t, detail::StateHash>
      ids;
  std::vector<double> g_value;
  std::vector<bool> expanded;
  struct Edge {
    std::size_t from, to;
    ActionId action;
  };
  std::vector<Edge> edges;

  auto intern = [&](detail::BitState s) {
    auto [it, fresh] = ids.emplace(s.words(), states.size());
    if (fresh) {
      states.push_back(std::move(s));
      g_value.push_back(std::numeric_limits<double>::infinity());
      expanded.push_back(false);
    }
    return it->second;
  };
  auto is_goal = [&](const detail::BitState &s) {
    return std::all_of(goal.begin(), goal.end(),
                       [&](FactId f) { return s.test(f); });
  };

  detail::BitState init(n_facts);
  for (FactId f : problem.s0)
    init.set(f);
  const std::size_t root = intern(init);
  g_value[root] = 0.0;

  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  open.push({0.0, root});
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> goal_states;
  std::size_t expansions = 0;

  while (!open.empty()) {
    const auto [g, id] = open.top();
    open.pop();
    if (expanded[id] || g > g_value[id])
      continue;
    if (g > best && !detail::costs_equal(g, best))
      break;
    expanded[id] = true;
    if (is_goal(states[id])) {
      best = std::min(best, g);
      goal_states.push_back(id);
      continue; // plans end at the first goal state they reach
    }
    if (++expansions > options.max_states)
      throw CapExceeded(options.max_states);
    const detail::BitState s = states[id]; // states may reallocate below
    for (const auto &a : problem.actions) {
      if (!std::all_of(a.pre.begin(), a.pre.end(),
                       [&](FactId f) { return s.test(f); }))
        continue;
      detail::BitState next = s;
      for (FactId f : a.del)
        next.reset(f);
      for (FactId f : a.add)
        next.set(f);
      const std::size_t to = intern(std::move(next));
      const double cost = g + a.cost;
      edges.push_back({id, to, a.id});
      if (cost < g_value[to] && !detail::costs_equal(cost, g_value[to])) {
        g_value[to] = cost;
        open.push({cost, to});
      }
    }
  }
  if (goal_states.empty())
    throw UnreachableGoal("goal " + problem.goal_names.at(goal_index) +
                          " is unreachable");

  // Keep only edges on optimal paths and count plans over the resulting DAG.
  std::vector<Edge> dag;
  for (const auto &e : edges)
    if (std::isfinite(g_value[e.to]) &&
        detail::costs_equal(g_value[e.from] + problem.actions[e.action].cost,
                            g_value[e.to]) &&
        (g_value[e.to] < best || detail::costs_equal(g_value[e.to], best)))
      dag.push_back(e);

  const std::size_t n_states = states.size();
  std::vector<std::vector<std::size_t>> out_edges(n_states);
  std::vector<std::size_t> indegree(n_states, 0);
  for (std::size_t k = 0; k < dag.size(); ++k) {
    out_edges[dag[k].from].push_back(k);
    ++indegree[dag[k].to];
  }
  std::vector<std::size_t> order;
  std::vector<std::size_t> frontier;
  for (std::size_t s = 0; s < n_states; ++s)
    if (indegree[s] == 0)
      frontier.push_back(s);
  while (!frontier.empty()) {
    const std::size_t s = frontier.back();
    frontier.pop_back();
    order.push_back(s);
    for (std::size_t k : out_edges[s])
      if (--indegree[dag[k].to] == 0)
        frontier.push_back(dag[k].to);
  }
  if (order.size() != n_states)
    throw Error("zero-cost cycle among optimal plans: plan count is infinite");

  std::vector<bool> optimal_goal(n_states, false);
  for (std::size_t s : goal_states)
    if (detail::costs_equal(g_value[s], best))
      optimal_goal[s] = true;

  // Number of optimal plans, optionally avoiding every action that adds
  // `banned`.
  auto count_plans = [&](std::optional<FactId> banned) {
    std::vector<double> paths(n_states, 0.0);
    paths[root] = 1.0;
    double total = 0.0;
    for (std::size_t s : order) {
      if (paths[s] == 0.0)
        continue;
      if (optimal_goal[s]) {
        total += paths[s];
        continue;
      }
      for (std::size_t k : out_edges[s]) {
        const auto &add = problem.actions[dag[k].action].add;
        if (banned && contains(add, *banned))
          continue;
        paths[dag[k].to] += paths[s];
      }
    }
    return total;
  };

  const double total = count_plans(std::nullopt);
  FactProbabilityTable table;
  table.goal_index = goal_index;
  table.p.assign(n_facts, 0.0);
  std::vector<bool> added(n_facts, false);
  for (const auto &e : dag)
    for (FactId f : problem.actions[e.action].add)
      added[f] = true;
  for (FactId f = 0; f < n_facts; ++f)
    if (added[f])
      table.p[f] = (total - count_plans(f)) / total;
  for (FactId f : problem.s0)
    table.p[f] = 1.0;
  return table;
}

namespace detail {

inline std::string format_probability(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  std::string text(buf, ptr);
  if (text.find_first_of(".e") == std::string::npos)
    text += ".0";
  return text;
}

} // namespace detail

/// Writes "fact_name,p_observed,p_not_observed" rows in fact-id order,
/// preceded by '#' comment lines from `comments`.
inline void write_table_csv(std::ostream &out, const GroundProblem &problem,
                            const FactProbabilityTable &table,
                            const std::vector<std::string> &comments = {}) {
  for (const auto &c : comments)
    out << "# " << c << '\n';
  out << "fact_name,p_observed,p_not_observed\n";
  for (FactId f = 0; f < table.size(); ++f)
    out << problem.facts[f].name << ','
        << detail::format_probability(table.p[f]) << ','
        << detail::format_probability(not_observed(table, f)) << '\n';
}

/// Reads a table written by write_table_csv (or authored by hand), mapping
/// rows to fact ids by name. Facts without a row get probability 0.
inline FactProbabilityTable read_table_csv(std::istream &in,
                                           const GroundProblem &problem,
                                           std::size_t goal_index) {
  FactProbabilityTable table;
  table.goal_index = goal_index;
  table.p.assign(problem.fact_count(), 0.0);
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == '#')
      continue;
    if (header) {
      header = false;
      if (line.rfind("fact_name", 0) == 0)
        continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos)
      throw Error("malformed table row at line " + std::to_string(line_no));
    const std::string name = line.substr(0, c1);
    const std::string value = line.substr(c1 + 1, c2 == std::string::npos
                                                      ? std::string::npos
                                                      : c2 - c1 - 1);
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), p);
    if (ec != std::errc() || p < 0.0 || p > 1.0)
      throw Error("bad probability '" + value + "' at line " +
                  std::to_string(line_no));
    auto id = problem.find_fact(name);
    if (!id)
      throw UnknownId("unknown fact " + name + " at line " +
                      std::to_string(line_no));
    table.p[*id] = p;
  }
  return table;
}

} // namespace fpv
