#include <gtest/gtest.h>

#include "smp/adversary.hpp"

using namespace smp;

TEST(Adversary, FormatDetails) {
  EXPECT_EQ(format_details({3, WAdd{0, 5}}), "ev=W i=0 n=5");
  EXPECT_EQ(format_details({3, Converge{MachineKind::Psi, 0, 3, 9, 0}}), "ev=PSI i=0 x=3 use=9 out=0");
}

TEST(Adversary, ValidateRejectsBadMoves) {
  World w;
  w.declare_w(0);
  EXPECT_THROW(validate({0, WAdd{1, 0}}, w), ConsistencyError);
  EXPECT_THROW(validate({0, Converge{MachineKind::Phi, 0, 0, 1, 2}}, w), ConsistencyError);
  apply({0, Converge{MachineKind::Phi, 0, 0, 1, 0}}, w);
  EXPECT_THROW(validate({0, Converge{MachineKind::Phi, 0, 0, 1, 0}}, w), ConsistencyError);
  apply({0, WAdd{0, 4}}, w);
  EXPECT_THROW(validate({0, WAdd{0, 4}}, w), ConsistencyError);
}

TEST(Adversary, ScriptedReleasesEventsAtTheirStage) {
  Adversary adv;
  adv.add(std::make_unique<ScriptedAdversary>(std::vector<AdversaryEvent>{
      {2, WAdd{0, 1}}, {0, Converge{MachineKind::Psi, 0, 0, 4, 0}}, {2, WAdd{0, 2}}}));
  World w;
  w.declare_w(0);
  EXPECT_EQ(adv.step(0, w, {}).size(), 1u);
  EXPECT_TRUE(adv.step(1, w, {}).empty());
  auto e = adv.step(2, w, {});
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(std::get<WAdd>(e[0].payload).n, 1u);
  EXPECT_TRUE(w.w(0).contains(2));
}

TEST(Adversary, TrackingGrowsAgreementByOne) {
  Adversary adv;
  adv.add(std::make_unique<TrackingAdversary>(0, 3));
  World w;
  w.declare_w(0);
  w.w_add(0, 1);
  for (Stage s = 0; s < 5; ++s) {
    adv.step(s, w, {});
    EXPECT_EQ(length_of_agreement(w, 0), s + 1);
  }
  EXPECT_EQ(w.computations().find(CompKey{MachineKind::Phi, 0, 2})->use, 6u);
}

TEST(Adversary, HoldWaitsOneStageThenReconvergesAboveMarkers) {
  Adversary adv;
  adv.add(std::make_unique<HoldAdversary>(0, 7, 2, 1));
  World w;
  w.marker_source.observe(20);
  EXPECT_TRUE(adv.step(0, w, {}).empty());  // before `from`
  w.clock.advance();
  EXPECT_TRUE(adv.step(1, w, {}).empty());  // first stage seen divergent
  w.clock.advance();
  adv.step(2, w, {});
  const auto* c = w.computations().find(CompKey{MachineKind::Psi, 0, 7});
  ASSERT_NE(c, nullptr);
  EXPECT_EQ(c->use, 23u);
  w.clock.advance();
  w.enumerate(Oracle::B, 22);
  EXPECT_FALSE(w.computations().live(CompKey{MachineKind::Psi, 0, 7}));
  EXPECT_TRUE(adv.step(3, w, {}).empty());
  w.clock.advance();
  w.marker_source.observe(40);  // a marker defined while Psi waits
  adv.step(4, w, {});
  EXPECT_EQ(w.computations().find(CompKey{MachineKind::Psi, 0, 7})->use, 41u + 2u);
  EXPECT_TRUE(adv.step(5, w, {}).empty());
}

TEST(Adversary, TrackingStepExtendsAgreementFaster) {
  Adversary adv;
  adv.add(std::make_unique<TrackingAdversary>(0, 1, 4));
  World w;
  w.declare_w(0);
  adv.step(0, w, {});
  EXPECT_EQ(length_of_agreement(w, 0), 4u);
  w.clock.advance();
  adv.step(1, w, {});
  EXPECT_EQ(length_of_agreement(w, 0), 8u);
}

TEST(Adversary, AnswerConvergesOncePerWitness) {
  Adversary adv;
  adv.add(std::make_unique<AnswerAdversary>(2, 1, 1));
  World w;
  const std::vector<Nat> wit{3, 5};
  EXPECT_TRUE(adv.step(0, w, wit).empty());  // before `from`
  w.clock.advance();
  auto e = adv.step(1, w, wit);
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(std::get<Converge>(e[1].payload), (Converge{MachineKind::Psi, 2, 5, 1, 0}));
  w.clock.advance();
  w.clock.advance();
  ASSERT_EQ(w.enumerate(Oracle::B, 0), EnumerateResult::Added);
  EXPECT_FALSE(w.computations().live(CompKey{MachineKind::Psi, 2, 3}));
  const std::vector<Nat> more{3, 5, 9};
  e = adv.step(3, w, more);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(std::get<Converge>(e[0].payload).x, 9u);
}

TEST(Adversary, FuzzIsDeterministicPerSeed) {
  auto run = [](std::uint64_t seed) {
    FuzzParams p;
    p.seed = seed;
    p.phi = {0, 1};
    p.psi = {0, 1};
    Adversary adv;
    adv.add(std::make_unique<FuzzAdversary>(p));
    World w;
    w.declare_w(0);
    w.declare_w(1);
    std::vector<AdversaryEvent> all;
    for (Stage s = 0; s < 200; ++s) {
      w.clock = StageClock{};
      for (Stage k = 0; k < s; ++k) w.clock.advance();
      auto e = adv.step(s, w, {});
      all.insert(all.end(), e.begin(), e.end());
    }
    return all;
  };
  const auto a = run(5);
  EXPECT_EQ(a, run(5));
  EXPECT_NE(a, run(6));
  EXPECT_FALSE(a.empty());
}
