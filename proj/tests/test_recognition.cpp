#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace fpv;

namespace {

GroundProblem three_fact_problem() {
  GroundProblem g;
  for (FactId f = 0; f < 3; ++f)
    g.facts.push_back({f, "(f" + std::to_string(f) + ")"});
  g.actions.push_back({0, "(noop)", {}, {}, {}, 1.0});
  g.goals = {{2}, {2}, {0, 1}};
  g.goal_names = {"(f2)", "(f2)", "(f0), (f1)"};
  g.rebuild_index();
  return g;
}

FactProbabilityTable table_of(std::size_t goal, std::vector<double> p) {
  FactProbabilityTable t;
  t.goal_index = goal;
  t.p = std::move(p);
  return t;
}

std::vector<ObservationEvent> grid_obs(const GroundProblem &g) {
  return {ObservationEvent::of_action(test::action_id(g, "(m c23 c22)")),
          ObservationEvent::of_action(test::action_id(g, "(m c22 c21)"))};
}

} // namespace

TEST(MapState, Shapes) {
  const auto g = test::load_fixture("grid").problem;
  const auto v = map_state(g.s0, g.fact_count());
  ASSERT_EQ(v.v.size(), 25u);
  EXPECT_EQ(std::count(v.v.begin(), v.v.end(), 1.0), 1);
  EXPECT_EQ(map_state({}, 4).v, std::vector<double>(4, 0.0));
  EXPECT_EQ(map_state({0, 1, 2}, 3).v, std::vector<double>(3, 1.0));
}

TEST(MapProbs, ToyVectorAndReferenceTable) {
  EXPECT_EQ(map_probs(table_of(0, {0.8, 0.3, 0.6})).v,
            (std::vector<double>{0.8, 0.3, 0.6}));
  EXPECT_EQ(map_probs(table_of(0, {0, 0})).v, (std::vector<double>{0, 0}));
  const auto g = test::load_fixture("grid").problem;
  const auto tables = test::reference_tables(g);
  EXPECT_EQ(map_probs(tables[0]).v, tables[0].p);
}

TEST(Odot, Casewise) {
  const std::vector<double> s{1, 1, 0}, v{0.5, 0, 0.7};
  EXPECT_EQ(odot(s, v), (std::vector<double>{0.5, 1, 0}));
  const std::vector<double> pos{0.2, 0.4, 1.0};
  EXPECT_EQ(odot(s, pos), (std::vector<double>{0.2, 0.4, 0.0}));
  const std::vector<double> zero{0, 0, 0};
  EXPECT_EQ(odot(zero, v), zero);
  EXPECT_THROW(odot(s, std::vector<double>{1.0}), LengthMismatch);
}

TEST(Direction, Examples) {
  const std::vector<double> x{1, 0}, y{0, 1}, z{0, 0};
  EXPECT_EQ(direction(x, x), z);
  EXPECT_EQ(direction(z, y), y);
  EXPECT_EQ(direction(x, y), (std::vector<double>{-1, 1}));
}

TEST(Heuristic, WorkedGridExample) {
  const auto g = test::load_fixture("grid").problem;
  const auto tables = test::reference_tables(g);
  RelaxedState st{g.s0};
  for (const auto &o : grid_obs(g))
    st = progress(st, o, g);
  const auto s0v = map_state(g.s0, g.fact_count());
  const auto stv = map_state(st.facts, g.fact_count());
  const auto g1 = heuristic_terms(s0v, stv, map_probs(tables[0]));
  EXPECT_NEAR(g1.initial, std::sqrt(3.5), 1e-9);
  EXPECT_NEAR(g1.current, std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(g1.value(), 0.14, 0.005);
  // G2: c21/c22 have zero probability and are pushed against the goal
  const auto g2 = heuristic_terms(s0v, stv, map_probs(tables[1]));
  EXPECT_NEAR(g2.value(), std::sqrt(3.5) - std::sqrt(5.5), 1e-12);
  EXPECT_EQ(heuristic(s0v, s0v, map_probs(tables[1])), 0.0);
}

TEST(Progress, ActionAndStateObservations) {
  const auto g = test::load_fixture("grid").problem;
  const auto c22 = test::fact_id(g, "(is-at c22)");
  const auto c23 = test::fact_id(g, "(is-at c23)");
  const auto c21 = test::fact_id(g, "(is-at c21)");
  auto s = progress({g.s0}, grid_obs(g)[0], g);
  FactSet want{c22, c23};
  normalize(want);
  EXPECT_EQ(s.facts, want);
  s = progress(s, ObservationEvent::of_state({c21}), g);
  want.push_back(c21);
  normalize(want);
  EXPECT_EQ(s.facts, want);
  EXPECT_THROW(progress(s, ObservationEvent::of_state({999}), g), UnknownId);
  EXPECT_THROW(progress(s, ObservationEvent::of_action(999), g), UnknownId);

  const auto toy = three_fact_problem();
  EXPECT_EQ(progress({{1}}, ObservationEvent::of_action(0), toy).facts,
            FactSet{1});
}

TEST(Recognize, GridPicksG1) {
  const auto g = test::load_fixture("grid").problem;
  const auto obs = grid_obs(g);
  const auto r = recognize(g, test::reference_tables(g), obs);
  EXPECT_EQ(r.recognized, std::vector<std::size_t>{0});
  EXPECT_EQ(r.t, 2u);
}

TEST(Recognize, ZeroObservationsTieAll) {
  const auto g = test::load_fixture("grid").problem;
  const auto r = recognize(g, test::reference_tables(g), {});
  EXPECT_EQ(r.recognized, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.heuristic, (std::vector<double>{0.0, 0.0}));
}

TEST(Recognize, ThreeGoalToy) {
  // observed {f0, f1}; only goal 2 gives them positive probability.
  // by hand: h0 = 1 - sqrt(3), h1 = 0.5 - 1.5, h2 = sqrt(0.5) - 0
  const auto g = three_fact_problem();
  const std::vector<FactProbabilityTable> tables = {
      table_of(0, {0, 0, 1}), table_of(1, {0, 0, 0.5}),
      table_of(2, {0.5, 0.5, 0})};
  const std::vector<ObservationEvent> obs = {ObservationEvent::of_state({0, 1})};
  const auto r = recognize(g, tables, obs);
  EXPECT_NEAR(r.heuristic[0], 1.0 - std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(r.heuristic[1], -1.0, 1e-12);
  EXPECT_NEAR(r.heuristic[2], std::sqrt(0.5), 1e-12);
  EXPECT_EQ(r.recognized, std::vector<std::size_t>{2});
}

TEST(Recognize, TableCountMismatch) {
  const auto g = test::load_fixture("grid").problem;
  auto tables = test::reference_tables(g);
  tables.pop_back();
  EXPECT_THROW(recognize(g, tables, {}), Error);
  EXPECT_THROW(OnlineRecognizer(g, tables), Error);
}

TEST(Online, GridTrace) {
  const auto g = test::load_fixture("grid").problem;
  const auto obs = grid_obs(g);
  const auto trace = recognize_online(g, test::reference_tables(g), obs);
  ASSERT_EQ(trace.steps.size(), 2u);
  EXPECT_EQ(trace.steps[0].result.t, 1u);
  EXPECT_EQ(trace.steps[1].result.recognized, std::vector<std::size_t>{0});
  EXPECT_EQ(trace.steps[1].elapsed_ns, 0);
  EXPECT_TRUE(recognize_online(g, test::reference_tables(g), {}).steps.empty());
}

TEST(Online, PrefixConsistentOnFixtures) {
  for (const auto &name : test::fixture_names()) {
    const auto p = test::load_fixture(name);
    const auto tables = estimate_all(p.problem, {10, 1});
    const auto trace = recognize_online(p.problem, tables, p.observations);
    ASSERT_EQ(trace.steps.size(), p.observations.size());
    for (std::size_t t = 1; t <= p.observations.size(); ++t) {
      const auto batch = recognize(
          p.problem, tables,
          std::span<const ObservationEvent>(p.observations).first(t));
      EXPECT_EQ(trace.steps[t - 1].result.heuristic, batch.heuristic);
      EXPECT_EQ(trace.steps[t - 1].result.recognized, batch.recognized);
    }
    EXPECT_EQ(trace.steps.back().result.recognized,
              std::vector<std::size_t>{p.true_goal_index})
        << name;
  }
}

TEST(TraceJson, RoundTrip) {
  const auto g = test::load_fixture("grid").problem;
  const auto trace = recognize_online(g, test::reference_tables(g), grid_obs(g));
  const auto back = trace_from_json(to_json(trace));
  ASSERT_EQ(back.steps.size(), trace.steps.size());
  for (std::size_t i = 0; i < back.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].result.heuristic, trace.steps[i].result.heuristic);
    EXPECT_EQ(back.steps[i].result.recognized, trace.steps[i].result.recognized);
  }
}
