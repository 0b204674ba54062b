#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/ground.hpp"

namespace fpv {

/// A delete-relaxed state. Only ever grows.
struct RelaxedState {
  FactSet facts;

  bool operator==(const RelaxedState &) const = default;
  bool holds(FactId f) const { return contains(facts, f); }
};

/// s ∪ add(a), ignoring deletes. Throws InapplicableAction when some
/// precondition is missing from `state`.
inline RelaxedState relaxed_apply(const RelaxedState &state,
                                  const GroundAction &action) {
  if (!std::includes(state.facts.begin(), state.facts.end(),
                     action.pre.begin(), action.pre.end()))
    throw InapplicableAction("action " + action.name +
                             " is not applicable in the relaxed state");
  RelaxedState next;
  next.facts.reserve(state.facts.size() + action.add.size());
  std::set_union(state.facts.begin(), state.facts.end(), action.add.begin(),
                 action.add.end(), std::back_inserter(next.facts));
  return next;
}

/// First-appearance levels of facts and actions under delete relaxation.
/// Facts in s0 have level 0; an action in `action_levels[t]` becomes
/// applicable at level t and its add effects appear (at the latest) at
/// level t + 1.
struct RelaxedPlanningGraph {
  static constexpr std::int32_t kUnreached = -1;

  std::vector<std::int32_t> fact_levels;
  std::vector<std::vector<ActionId>> action_levels;
  bool goal_reachable = true;
  FactSet unreached_goals;

  std::size_t levels() const noexcept { return action_levels.size(); }

  std::int32_t fact_level(FactId f) const {
    if (f >= fact_levels.size())
      throw UnknownId("unknown fact id " + std::to_string(f));
    return fact_levels[f];
  }
};

/// Expands layers from s0 until every fact of `goal` is reached or no new
/// fact appears. An unreachable goal yields a flagged graph, not an error.
inline RelaxedPlanningGraph build_rpg(const GroundProblem &problem,
                                      const FactSet &goal) {
  const std::size_t n_facts = problem.fact_count();
  for (FactId g : goal)
    if (g >= n_facts)
      throw UnknownId("unknown goal fact id " + std::to_string(g));

  RelaxedPlanningGraph rpg;
  rpg.fact_levels.assign(n_facts, RelaxedPlanningGraph::kUnreached);

  // consumers[f] = actions having f as a precondition
  std::vector<std::vector<ActionId>> consumers(n_facts);
  std::vector<std::uint32_t> missing(problem.action_count(), 0);
  std::vector<ActionId> ready;
  for (const auto &a : problem.actions) {
    missing[a.id] = static_cast<std::uint32_t>(a.pre.size());
    for (FactId f : a.pre)
      consumers[f].push_back(a.id);
    if (a.pre.empty())
      ready.push_back(a.id);
  }

  std::size_t goals_missing = goal.size();
  auto reach = [&](FactId f, std::int32_t level, std::vector<ActionId> &next) {
    if (rpg.fact_levels[f] != RelaxedPlanningGraph::kUnreached)
      return false;
    rpg.fact_levels[f] = level;
    if (contains(goal, f))
      --goals_missing;
    for (ActionId a : consumers[f])
      if (--missing[a] == 0)
        next.push_back(a);
    return true;
  };
  for (FactId f : problem.s0)
    reach(f, 0, ready);

  std::int32_t level = 0;
  while (goals_missing > 0 && !ready.empty()) {
    std::sort(ready.begin(), ready.end());
    std::vector<ActionId> next;
    bool grew = false;
    for (ActionId a : ready)
      for (FactId f : problem.actions[a].add)
        grew |= reach(f, level + 1, next);
    rpg.action_levels.push_back(std::move(ready));
    ready = std::move(next);
    ++level;
    if (!grew)
      break;
  }

  if (goals_missing > 0) {
    rpg.goal_reachable = false;
    for (FactId g : goal)
      if (rpg.fact_levels[g] == RelaxedPlanningGraph::kUnreached)
        rpg.unreached_goals.push_back(g);
  }
  return rpg;
}

inline bool relaxed_reachable(const RelaxedPlanningGraph &rpg, FactId fact) {
  return rpg.fact_level(fact) != RelaxedPlanningGraph::kUnreached;
}

/// Human-readable level listing for debugging.
inline std::string dump_rpg(const RelaxedPlanningGraph &rpg,
                            const GroundProblem &problem) {
  std::ostringstream out;
  out << "levels " << rpg.levels()
      << (rpg.goal_reachable ? " reachable" : " unreachable") << '\n';
  for (std::size_t t = 0; t <= rpg.levels(); ++t) {
    out << "facts@" << t << ':';
    for (FactId f = 0; f < rpg.fact_levels.size(); ++f)
      if (rpg.fact_levels[f] == static_cast<std::int32_t>(t))
        out << ' ' << problem.facts[f].name;
    out << '\n';
    if (t < rpg.levels()) {
      out << "actions@" << t << ':';
      for (ActionId a : rpg.action_levels[t])
        out << ' ' << problem.actions[a].name;
      out << '\n';
    }
  }
  return out.str();
}

} // namespace fpv
