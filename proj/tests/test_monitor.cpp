#include <gtest/gtest.h>

#include <algorithm>

#include "smp/session.hpp"

using namespace smp;

namespace {

std::string data(const std::string& name) { return std::string(SMP_DATA_DIR) + "/" + name; }

Requirement R(int i) { return {Requirement::Kind::R, i}; }
Requirement S(int i) { return {Requirement::Kind::S, i}; }

SatisfactionMode mode_of(const SatisfactionReport& rep, Requirement r) {
  const RequirementReport* e = rep.find(r);
  return e == nullptr ? SatisfactionMode::Unresolved : e->mode;
}

bool has(const std::vector<Violation>& vs, ViolationKind k) {
  return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.kind == k; });
}

}  // namespace

TEST(Monitor, ScriptedScenariosAreClean) {
  for (const char* name : {"minimal.scn", "minimal_injury.scn", "complete.scn", "pi3.scn"}) {
    Session session(load_scenario(data(name)));
    session.run();
    EXPECT_TRUE(session.violations().empty()) << name << ": " << to_string(session.violations().front().kind);
  }
}

TEST(Monitor, FuzzRunsAreClean) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Session session(parse_scenario("mode fuzz seed=" + std::to_string(seed) + " stages=5000\n"));
    session.run();
    EXPECT_TRUE(session.violations().empty()) << "seed " << seed;
  }
}

TEST(Monitor, MinimalReport) {
  Session session(load_scenario(data("minimal.scn")));
  session.run();
  const SatisfactionReport rep = session.monitor().report();
  EXPECT_EQ(mode_of(rep, R(0)), SatisfactionMode::GammaMaintained);
  EXPECT_EQ(mode_of(rep, R(1)), SatisfactionMode::DeltaBuilt);
  EXPECT_EQ(mode_of(rep, S(0)), SatisfactionMode::GapSigma3);
  EXPECT_EQ(mode_of(rep, S(1)), SatisfactionMode::WaitSigma2);
  EXPECT_EQ(rep.true_path.rfind("R0.i/R1.i/S0.g/S0,0.c", 0), 0u) << rep.true_path;
  EXPECT_NE(rep.text().find("S0 gap-Sigma3"), std::string::npos);
}

TEST(Monitor, Pi3Report) {
  Session session(load_scenario(data("pi3.scn")));
  session.run();
  const SatisfactionReport rep = session.monitor().report();
  EXPECT_EQ(mode_of(rep, S(0)), SatisfactionMode::DiagonalizedSigma2);
  EXPECT_EQ(mode_of(rep, S(1)), SatisfactionMode::AllChildrenCPi3);
  EXPECT_EQ(mode_of(rep, R(0)), SatisfactionMode::GammaMaintained);
  EXPECT_EQ(mode_of(rep, R(1)), SatisfactionMode::GammaMaintained);
  EXPECT_NE(rep.find(S(1))->evidence.find("z=22,46,70"), std::string::npos) << rep.find(S(1))->evidence;
}

TEST(Monitor, WChangeMovesR1ToFAndInjuresDeltaOnce) {
  Session session(load_scenario(data("minimal_injury.scn")));
  session.run();
  const Engine& eng = session.engine();
  const NodeId r1 = eng.tree().peek_child(eng.tree().root(), 0);
  ASSERT_EQ(eng.tree().node(r1).label, "R1");
  EXPECT_EQ(eng.last_access(r1, 0), std::optional<Stage>(11));
  EXPECT_EQ(eng.last_access(r1, 1), std::optional<Stage>(15));
  const RequirementReport* r = session.monitor().report().find(R(1));
  ASSERT_NE(r, nullptr);
  EXPECT_NE(r->evidence.find("injuries=1"), std::string::npos) << r->evidence;
}

TEST(Monitor, TruePathApproxFollowsLeftmostAccessedEdges) {
  Session session(load_scenario(data("minimal.scn")));
  session.run();
  const Tree& tree = session.engine().tree();
  const auto path = session.monitor().true_path_approx(session.monitor().stages());
  ASSERT_GE(path.size(), 3u);
  EXPECT_EQ(tree.edge_string(path[2].node, path[2].outcome), "R0.i/R1.i/S0.g");
  for (const Step& st : path) {
    const auto last = session.engine().last_access(st.node, st.outcome);
    ASSERT_TRUE(last.has_value());
    EXPECT_GE(*last, session.monitor().window_start(session.monitor().stages()));
  }
}

// Fault injection: doctored stage records fed to a second monitor.

TEST(MonitorFaults, EnumerationAtWrongParity) {
  Session session(load_scenario(data("minimal.scn")));
  session.run();
  Monitor m(session.engine());
  StageRecord rec;
  rec.s = 40;
  rec.parity = Parity::A;
  rec.enumerations = {{Oracle::B, 7}};
  EXPECT_TRUE(has(m.check_stage(rec), ViolationKind::StageDiscipline));
  rec.s = 41;
  rec.parity = Parity::B;
  rec.enumerations = {{Oracle::B, 7}, {Oracle::B, 9}};
  EXPECT_TRUE(has(m.check_stage(rec), ViolationKind::StageDiscipline));
}

TEST(MonitorFaults, TerminatedStageNotFollowedUp) {
  Session session(load_scenario(data("minimal.scn")));
  session.run();
  Monitor m(session.engine());
  StageRecord rec;
  rec.s = 40;
  rec.terminated = true;
  EXPECT_FALSE(has(m.check_stage(rec), ViolationKind::TerminatedDichotomy));
  rec.s = 41;
  rec.parity = Parity::B;
  rec.terminated = false;
  EXPECT_TRUE(has(m.check_stage(rec), ViolationKind::TerminatedDichotomy));
  rec.s = 42;
  rec.parity = Parity::A;
  EXPECT_FALSE(has(m.check_stage(rec), ViolationKind::TerminatedDichotomy));
}

TEST(MonitorFaults, BChangeBelowProtectedUse) {
  Session session(load_scenario(data("pi3.scn")));
  session.run();
  const DiagRecord* kept = nullptr;
  for (const auto& d : session.engine().diagonalizations()) {
    const NodeState& ns = session.engine().state(d.node);
    if (ns.epoch == d.epoch && ns.diagonalized) kept = &d;
  }
  ASSERT_NE(kept, nullptr);
  Monitor m(session.engine());
  StageRecord rec;
  rec.s = 60;
  EXPECT_TRUE(m.check_stage(rec).empty());
  rec.s = 61;
  rec.parity = Parity::B;
  rec.enumerations = {{Oracle::B, kept->psi_use - 1}};
  EXPECT_TRUE(has(m.check_stage(rec), ViolationKind::DiagonalizationPreservation));
}
