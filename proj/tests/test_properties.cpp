#include <gtest/gtest.h>

#include "properties.hpp"

using namespace fpv;

TEST(Properties, HeuristicOnThousandRandomGrids) {
  const auto rep = test::heuristic_properties(1000, 2024);
  EXPECT_EQ(rep.cases, 1000u);
  for (const auto &f : rep.failures)
    ADD_FAILURE() << f;
}

TEST(Properties, SamplerOnFixturesAndRandomGrids) {
  test::PropertyReport rep;
  for (const auto &name : test::fixture_names())
    test::sampler_properties(test::load_fixture(name).problem, 10, 0, name + ": ",
                             rep);
  Rng rng(77);
  for (int i = 0; i < 200; ++i)
    test::sampler_properties(test::ground_grid(test::random_grid(rng)), 10,
                             rng.next(), "grid " + std::to_string(i) + ": ", rep);
  EXPECT_GT(rep.checks, 1000u);
  for (const auto &f : rep.failures)
    ADD_FAILURE() << f;
}
