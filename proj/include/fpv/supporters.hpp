#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fpv/error.hpp"
#include "fpv/ground.hpp"
#include "fpv/random.hpp"
#include "fpv/relaxed_graph.hpp"

namespace fpv {

inline constexpr FactId kNoFact = std::numeric_limits<FactId>::max();
inline constexpr std::size_t kNoGoal = std::numeric_limits<std::size_t>::max();

/// One sampled set of supporter actions, either for a single subgoal fact
/// or (after combination) for a whole goal.
struct SupporterSampleSet {
  std::vector<ActionId> actions; // sorted, unique
  FactId subgoal = kNoFact;
  std::size_t goal_index = kNoGoal;

  bool operator==(const SupporterSampleSet &) const = default;
};

/// Selection counts plus the random source for one sampling run. Not
/// shareable between threads.
class SamplerState {
public:
  explicit SamplerState(std::uint64_t seed) : rng_(seed) {}

  std::size_t count(ActionId a) const {
    auto it = counts_.find(a);
    return it == counts_.end() ? 0 : it->second;
  }
  void bump(ActionId a) { ++counts_[a]; }
  const std::map<ActionId, std::size_t> &counts() const { return counts_; }
  Rng &rng() { return rng_; }

private:
  std::map<ActionId, std::size_t> counts_;
  Rng rng_;
};

/// Supporters of each fact grouped by the RPG level at which they first
/// become applicable. Scanning `by_fact[p]` in order is equivalent to
/// scanning the RPG action layers from 0 upward and testing p ∈ add(a).
class SupporterIndex {
public:
  struct Entry {
    std::size_t level;
    ActionId action;
  };

  SupporterIndex(const GroundProblem &problem, const RelaxedPlanningGraph &rpg)
      : by_fact_(problem.fact_count()) {
    for (std::size_t t = 0; t < rpg.levels(); ++t)
      for (ActionId a : rpg.action_levels[t])
        for (FactId f : problem.actions[a].add)
          by_fact_[f].push_back({t, a});
  }

  /// Supporters of `p` at the earliest level in [0, max_level] that has
  /// any; empty if none.
  std::vector<ActionId> earliest(FactId p, std::size_t max_level) const {
    std::vector<ActionId> out;
    const auto &entries = by_fact_[p];
    if (entries.empty() || entries.front().level > max_level)
      return out;
    const std::size_t level = entries.front().level;
    for (const auto &e : entries) {
      if (e.level != level)
        break;
      out.push_back(e.action);
    }
    return out;
  }

private:
  std::vector<std::vector<Entry>> by_fact_;
};

/// Samples `n` supporter sets for one subgoal. Each run starts from the
/// subgoal, picks for every demanded fact a supporter from the earliest RPG
/// level offering one (least-selected first, ties at random) and demands
/// that supporter's preconditions not yet in s0 or supported.
inline std::vector<SupporterSampleSet>
sample_subgoal_supporters(FactId subgoal, const GroundProblem &problem,
                          const RelaxedPlanningGraph &rpg,
                          const SupporterIndex &index, std::size_t n,
                          SamplerState &sampler) {
  const FactSet &s0 = problem.s0;
  std::vector<SupporterSampleSet> samples;
  samples.reserve(n);
  if (contains(s0, subgoal)) {
    for (std::size_t i = 0; i < n; ++i)
      samples.push_back({{}, subgoal, kNoGoal});
    return samples;
  }

  for (std::size_t i = 0; i < n; ++i) {
    std::set<FactId> demanded{subgoal};
    std::set<FactId> found;
    std::set<ActionId> sups;
    for (std::size_t t = rpg.levels() + 1; t-- > 0;) {
      std::set<FactId> next_demanded;
      while (!demanded.empty()) {
        const FactId p = *demanded.begin();
        std::vector<ActionId> candidates = index.earliest(p, t);
        if (candidates.empty())
          throw UnsupportedFact("no supporter for " + problem.facts[p].name +
                                " within relaxed level " + std::to_string(t));
        std::size_t least = std::numeric_limits<std::size_t>::max();
        for (ActionId a : candidates)
          least = std::min(least, sampler.count(a));
        std::erase_if(candidates,
                      [&](ActionId a) { return sampler.count(a) != least; });
        const ActionId a = candidates[sampler.rng().index(candidates.size())];

        found.insert(p);
        demanded.erase(p);
        sups.insert(a);
        sampler.bump(a);
        const GroundAction &action = problem.actions[a];
        for (FactId pre : action.pre)
          if (!contains(s0, pre) && !found.count(pre) && !demanded.count(pre))
            next_demanded.insert(pre);
        for (FactId r : action.add) {
          demanded.erase(r);
          next_demanded.erase(r);
          found.insert(r);
        }
      }
      demanded.insert(next_demanded.begin(), next_demanded.end());
    }
    if (!demanded.empty())
      throw UnsupportedFact("supporter search ended with unsupported facts");
    samples.push_back(
        {std::vector<ActionId>(sups.begin(), sups.end()), subgoal, kNoGoal});
  }
  return samples;
}

/// Builds `n` goal-level supporter sets, each the union of one so far unused
/// per-subgoal sample for every subgoal, drawn uniformly without
/// replacement.
inline std::vector<SupporterSampleSet> generate_goal_supporters(
    std::map<FactId, std::vector<SupporterSampleSet>> per_subgoal,
    std::size_t n, const FactSet &goal, std::size_t goal_index,
    SamplerState &sampler) {
  for (FactId g : goal) {
    auto it = per_subgoal.find(g);
    const std::size_t have = it == per_subgoal.end() ? 0 : it->second.size();
    if (have < n)
      throw InsufficientSamples("subgoal " + std::to_string(g) + " has " +
                                std::to_string(have) + " samples, need " +
                                std::to_string(n));
  }
  std::vector<SupporterSampleSet> combined;
  combined.reserve(n);
  for (std::size_t x = 0; x < n; ++x) {
    std::set<ActionId> merged;
    for (FactId g : goal) {
      auto &pool = per_subgoal[g];
      const std::size_t pick = sampler.rng().index(pool.size());
      merged.insert(pool[pick].actions.begin(), pool[pick].actions.end());
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    combined.push_back({std::vector<ActionId>(merged.begin(), merged.end()),
                        kNoFact, goal_index});
  }
  return combined;
}

/// Both sampling stages for one goal with seeds split per (goal, subgoal).
/// The RPG must have been built for this goal.
inline std::vector<SupporterSampleSet>
sample_goal_supporters(const GroundProblem &problem,
                       const RelaxedPlanningGraph &rpg, std::size_t goal_index,
                       std::size_t n, std::uint64_t seed) {
  const FactSet &goal = problem.goals.at(goal_index);
  const SupporterIndex index(problem, rpg);
  std::map<FactId, std::vector<SupporterSampleSet>> per_subgoal;
  for (std::size_t k = 0; k < goal.size(); ++k) {
    SamplerState sampler(derive_seed(seed, {goal_index, k}));
    per_subgoal[goal[k]] =
        sample_subgoal_supporters(goal[k], problem, rpg, index, n, sampler);
  }
  SamplerState combiner(derive_seed(seed, {goal_index, goal.size(), 0xc0ffee}));
  return generate_goal_supporters(std::move(per_subgoal), n, goal, goal_index,
                                  combiner);
}

/// One line per sample set listing its action names.
inline std::string dump_samples(const std::vector<SupporterSampleSet> &samples,
                                const GroundProblem &problem) {
  std::string out;
  for (const auto &s : samples) {
    for (std::size_t i = 0; i < s.actions.size(); ++i) {
      if (i > 0)
        out += ' ';
      out += problem.actions[s.actions[i]].name;
    }
    out += '\n';
  }
  return out;
}

} // namespace fpv
