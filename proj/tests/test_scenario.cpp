#include <gtest/gtest.h>

#include "smp/scenario.hpp"

using namespace smp;

TEST(Scenario, ParsesConvergenceDirective) {
  const Scenario sc = parse_scenario(
      "mode scripted seed=1 stages=10\n"
      "declare PSI 0\n"
      "at 3 PSI 0 x=5 use=9 out=0\n");
  ASSERT_EQ(sc.events.size(), 1u);
  EXPECT_EQ(sc.events[0].at, 3u);
  EXPECT_EQ(std::get<Converge>(sc.events[0].payload), (Converge{MachineKind::Psi, 0, 5, 9, 0}));
  EXPECT_EQ(sc.seed, 1u);
  EXPECT_EQ(sc.stages, 10u);
}

TEST(Scenario, HeaderOnlyHasNoEvents) {
  const Scenario sc = parse_scenario("mode scripted seed=0 stages=5\n");
  EXPECT_TRUE(sc.events.empty());
  EXPECT_EQ(sc.mode, Scenario::Mode::Scripted);
}

TEST(Scenario, CommentsAndBlankLinesIgnored) {
  const Scenario sc = parse_scenario(
      "# header comment\n"
      "\n"
      "mode scripted seed=0 stages=5  # trailing\n"
      "declare W 0 # more\n"
      "at 2 W 0 add 7\n");
  ASSERT_EQ(sc.events.size(), 1u);
  EXPECT_EQ(std::get<WAdd>(sc.events[0].payload).n, 7u);
}

TEST(Scenario, UndeclaredIndexIsConsistencyError) {
  EXPECT_THROW(parse_scenario("mode scripted seed=0 stages=5\nat 2 W 0 add 1\ndeclare W 0\n"), ConsistencyError);
  EXPECT_THROW(parse_scenario("mode scripted seed=0 stages=5\nat 2 PHI 1 x=0 use=1 out=0\n"), ConsistencyError);
  EXPECT_THROW(parse_scenario("mode scripted seed=0 stages=5\ndeclare PHI 0\nadversary track 0 gap=1\n"),
               ConsistencyError);
}

TEST(Scenario, OutOfOrderStagesRejected) {
  EXPECT_THROW(parse_scenario("mode scripted seed=0 stages=9\ndeclare W 0\nat 4 W 0 add 1\nat 3 W 0 add 2\n"),
               ConsistencyError);
}

TEST(Scenario, ParseErrorsCarryLineNumbers) {
  try {
    parse_scenario("mode scripted seed=0 stages=5\ndeclare PSI 0\nat 1 PSI 0 x=1 use=2 out=7\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 3);
  }
  EXPECT_THROW(parse_scenario("declare W 0\n"), ParseError);
  EXPECT_THROW(parse_scenario("mode scripted seed=x stages=5\n"), ParseError);
  EXPECT_THROW(parse_scenario("mode scripted seed=0 stages=5\nmode scripted seed=0 stages=5\n"), ParseError);
  EXPECT_THROW(parse_scenario("mode scripted seed=0 stages=5\nfrobnicate\n"), ParseError);
  EXPECT_THROW(parse_scenario(""), ParseError);
}

TEST(Scenario, FuzzModeDefaultsAndKnobs) {
  const Scenario sc = parse_scenario("mode fuzz seed=7 stages=100 pace=3 stubborn=90 grow=10\n");
  EXPECT_EQ(sc.mode, Scenario::Mode::Fuzz);
  EXPECT_EQ(sc.pace, 3u);
  EXPECT_EQ(sc.stubborn, 90u);
  EXPECT_EQ(sc.grow, 10u);
  EXPECT_EQ(sc.phi, (std::set<int>{0, 1, 2}));
  EXPECT_EQ(sc.psi, (std::set<int>{0, 1, 2}));
  EXPECT_THROW(parse_scenario("mode fuzz seed=7 stages=100 speed=3\n"), ParseError);
}

TEST(Scenario, EngineConfigPairsPhiWithW) {
  const Scenario sc = parse_scenario(
      "mode scripted seed=0 stages=5\n"
      "declare PHI 0\ndeclare PHI 1\ndeclare W 1\ndeclare PSI 4\n"
      "at 0 W 1 add 6\n");
  const EngineConfig cfg = engine_config(sc);
  EXPECT_EQ(cfg.r_indices, std::vector<int>{1});
  EXPECT_EQ(cfg.s_indices, std::vector<int>{4});
  EXPECT_EQ(cfg.fresh_seed, 7u);
}
