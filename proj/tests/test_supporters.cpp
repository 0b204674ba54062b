#include <gtest/gtest.h>

#include <algorithm>

#include "properties.hpp"

using namespace fpv;

namespace {

std::vector<SupporterSampleSet> subgoal_samples(const GroundProblem &g,
                                                FactId subgoal, std::size_t n,
                                                std::uint64_t seed) {
  const auto rpg = build_rpg(g, {subgoal});
  const SupporterIndex index(g, rpg);
  SamplerState sampler(seed);
  return sample_subgoal_supporters(subgoal, g, rpg, index, n, sampler);
}

} // namespace

TEST(Sampler, ChainHasUniqueSupporters) {
  const auto g = test::load_fixture("chain").problem;
  const auto samples = subgoal_samples(g, test::fact_id(g, "(f2)"), 3, 5);
  ASSERT_EQ(samples.size(), 3u);
  std::vector<ActionId> want{test::action_id(g, "(a1)"), test::action_id(g, "(a2)")};
  std::sort(want.begin(), want.end());
  for (const auto &s : samples)
    EXPECT_EQ(s.actions, want);
}

TEST(Sampler, SubgoalInInitialStateGivesEmptySets) {
  const auto g = test::load_fixture("grid").problem;
  const auto samples = subgoal_samples(g, g.s0[0], 4, 0);
  ASSERT_EQ(samples.size(), 4u);
  for (const auto &s : samples)
    EXPECT_TRUE(s.actions.empty());
}

TEST(Sampler, GridSamplesReplayAndRotate) {
  const auto g = test::load_fixture("grid").problem;
  const FactId c1 = test::fact_id(g, "(is-at c1)");
  const auto samples = subgoal_samples(g, c1, 2, 0);
  ASSERT_EQ(samples.size(), 2u);
  for (const auto &s : samples) {
    EXPECT_TRUE(test::replays_to(g, s.actions, {c1}));
    EXPECT_EQ(s.actions.size(), 6u); // shortest route length
  }
  EXPECT_NE(samples[0].actions, samples[1].actions);
}

TEST(Sampler, MinCountBalancePerLevel) {
  const auto g = test::load_fixture("grid").problem;
  const FactId c1 = test::fact_id(g, "(is-at c1)");
  const auto rpg = build_rpg(g, {c1});
  const SupporterIndex index(g, rpg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SamplerState sampler(seed);
    const auto samples =
        sample_subgoal_supporters(c1, g, rpg, index, 10, sampler);
    // for each fact, the earliest supporters of that fact are chosen evenly
    for (FactId f = 0; f < g.fact_count(); ++f) {
      const auto cands = index.earliest(f, rpg.levels());
      if (cands.size() < 2)
        continue;
      std::size_t lo = SIZE_MAX, hi = 0;
      for (ActionId a : cands) {
        lo = std::min(lo, sampler.count(a));
        hi = std::max(hi, sampler.count(a));
      }
      if (hi > 0) {
        EXPECT_LE(hi - lo, 1u) << g.facts[f].name << " seed " << seed;
      }
    }
  }
}

TEST(Sampler, UnsupportedFactThrows) {
  const auto g = test::load_fixture("grid").problem;
  const FactId wall = test::fact_id(g, "(is-at c7)");
  const auto rpg = build_rpg(g, {wall});
  const SupporterIndex index(g, rpg);
  SamplerState sampler(0);
  EXPECT_THROW(sample_subgoal_supporters(wall, g, rpg, index, 1, sampler),
               UnsupportedFact);
}

TEST(Combine, SingleSubgoalIsPermutation) {
  std::vector<SupporterSampleSet> pool;
  for (ActionId a = 0; a < 5; ++a)
    pool.push_back({{a}, 3, kNoGoal});
  SamplerState sampler(11);
  const auto out = generate_goal_supporters({{3, pool}}, 5, {3}, 0, sampler);
  std::vector<ActionId> seen;
  for (const auto &s : out) {
    ASSERT_EQ(s.actions.size(), 1u);
    seen.push_back(s.actions[0]);
    EXPECT_EQ(s.goal_index, 0u);
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<ActionId>{0, 1, 2, 3, 4}));
}

TEST(Combine, EachSampleConsumedOnce) {
  // A_i = {i}, B_j = {100 + j}: every output set names one A and one B
  const std::size_t n = 6;
  std::vector<SupporterSampleSet> as, bs;
  for (ActionId i = 0; i < n; ++i) {
    as.push_back({{i}, 1, kNoGoal});
    bs.push_back({{100 + i}, 2, kNoGoal});
  }
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SamplerState sampler(seed);
    const auto out =
        generate_goal_supporters({{1, as}, {2, bs}}, n, {1, 2}, 0, sampler);
    ASSERT_EQ(out.size(), n);
    std::multiset<ActionId> a_used, b_used;
    for (const auto &s : out) {
      ASSERT_EQ(s.actions.size(), 2u);
      a_used.insert(s.actions[0]);
      b_used.insert(s.actions[1]);
    }
    for (ActionId i = 0; i < n; ++i) {
      EXPECT_EQ(a_used.count(i), 1u);
      EXPECT_EQ(b_used.count(100 + i), 1u);
    }
  }
}

TEST(Combine, SingleSampleIsUnion) {
  SamplerState sampler(0);
  const auto out = generate_goal_supporters(
      {{1, {{{4, 2}, 1, kNoGoal}}}, {2, {{{2, 9}, 2, kNoGoal}}}}, 1, {1, 2}, 7,
      sampler);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].actions, (std::vector<ActionId>{2, 4, 9}));
}

TEST(Combine, InsufficientSamplesThrows) {
  SamplerState sampler(0);
  EXPECT_THROW(generate_goal_supporters({{1, {{{1}, 1, kNoGoal}}}}, 2, {1}, 0,
                                        sampler),
               InsufficientSamples);
}

TEST(Sampler, GoalSamplesReplayOnAllFixtures) {
  for (const auto &name : test::fixture_names()) {
    const auto g = test::load_fixture(name).problem;
    for (std::size_t gi = 0; gi < g.goals.size(); ++gi) {
      const auto rpg = build_rpg(g, g.goals[gi]);
      ASSERT_TRUE(rpg.goal_reachable);
      const auto samples = sample_goal_supporters(g, rpg, gi, 10, 3);
      ASSERT_EQ(samples.size(), 10u);
      for (const auto &s : samples)
        EXPECT_TRUE(test::replays_to(g, s.actions, g.goals[gi]))
            << name << " goal " << gi;
    }
  }
}

TEST(Sampler, SameSeedSameSamples) {
  const auto g = test::load_fixture("logistics").problem;
  const auto rpg = build_rpg(g, g.goals[0]);
  EXPECT_EQ(sample_goal_supporters(g, rpg, 0, 10, 42),
            sample_goal_supporters(g, rpg, 0, 10, 42));
}

TEST(Random, BoundedDrawInRangeAndDeterministic) {
  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) {
    const auto x = a.index(7);
    EXPECT_LT(x, 7u);
    EXPECT_EQ(x, b.index(7));
  }
  EXPECT_NE(derive_seed(1, {0}), derive_seed(1, {1}));
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
}
