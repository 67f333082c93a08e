#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "smp/session.hpp"
#include "smp/trace.hpp"

using namespace smp;

namespace {

std::string data(const std::string& name) { return std::string(SMP_DATA_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string trace_of(const Scenario& sc) {
  std::ostringstream out;
  StreamSink sink(out);
  Session session(sc, &sink);
  session.run();
  return out.str();
}

struct Event {
  Stage s = 0;
  std::string kind;
  std::string node;
  std::map<std::string, std::string> kv;
};

std::vector<Event> events(const std::string& trace) {
  std::vector<Event> out;
  std::istringstream in(trace);
  for (std::string line; std::getline(in, line);) {
    Event e;
    std::istringstream toks(line);
    for (std::string t; toks >> t;) {
      const auto eq = t.find('=');
      if (eq == std::string::npos) continue;
      const std::string k = t.substr(0, eq), v = t.substr(eq + 1);
      if (k == "s") {
        e.s = std::stoull(v);
      } else if (k == "kind") {
        e.kind = v;
      } else if (k == "node") {
        e.node = v;
      } else {
        e.kv[k] = v;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

bool ends_with(const std::string& s, const std::string& tail) {
  return s.size() >= tail.size() && s.compare(s.size() - tail.size(), tail.size(), tail) == 0;
}

Scenario fuzz(std::uint64_t seed, Stage stages) {
  return parse_scenario("mode fuzz seed=" + std::to_string(seed) + " stages=" + std::to_string(stages) + "\n");
}

}  // namespace

TEST(Golden, MinimalTraceIsByteIdentical) {
  EXPECT_EQ(trace_of(load_scenario(data("minimal.scn"))), slurp(data("minimal.trace")));
}

TEST(Golden, CompleteTraceIsByteIdentical) {
  EXPECT_EQ(trace_of(load_scenario(data("complete.scn"))), slurp(data("complete.trace")));
}

// Hand trace: S0 is witnessed 0, the S1 below S0.w gets 1, and once S0 opens
// its gap at stage 4 the S1 below S0,0.g1 gets witness 2, so S0,0 first builds
// Delta_1 on g1 and then moves to c with claim point 2.
TEST(HandTrace, MinimalExampleSendsS00ToC) {
  const auto ev = events(slurp(data("minimal.trace")));
  std::vector<std::string> s00;
  const Event* claim = nullptr;
  for (const auto& e : ev) {
    if (e.kind == "outcome" && e.node == "R0.i/R1.i/S0" && e.kv.contains("x")) EXPECT_EQ(e.kv.at("x"), "0");
    if (e.kind == "outcome" && e.node == "R0.i/R1.i/S0.g/S0,0" && (s00.empty() || s00.back() != e.kv.at("o"))) {
      s00.push_back(e.kv.at("o"));
    }
    if (e.kind == "claim_init" && claim == nullptr) claim = &e;
  }
  EXPECT_EQ(s00, (std::vector<std::string>{"g1", "c"}));
  ASSERT_NE(claim, nullptr);
  EXPECT_EQ(claim->s, 4u);
  EXPECT_EQ(claim->node, "R0.i/R1.i/S0.g/S0,0");
  EXPECT_EQ(claim->kv.at("initiator"), "R0.i/R1.i/S0.g/S0,0.g1/S1");
  EXPECT_EQ(claim->kv.at("z"), "2");
  EXPECT_EQ(claim->kv.at("x"), "2");
}

// Hand trace: S0,0's claim point x' = 3 (witness of the S1 below S0,0.g1)
// becomes the killing point at S0,1 below S1,0.g2; the S1 placed again below
// S0,1.g1 is witnessed 9 = x_2, which is then the claim point at S1,0's c.
TEST(HandTrace, CompleteExamplePoints) {
  const auto ev = events(slurp(data("complete.trace")));
  std::string x_prime, x2, kp_s01, z_s10;
  for (const auto& e : ev) {
    if (e.kind == "claim_init" && e.node == "R0.i/R1.i/S0.g/S0,0") x_prime = e.kv.at("z");
    if (e.kind == "outcome" && ends_with(e.node, "S1,0.g2/S0,1") && e.kv.contains("kp")) kp_s01 = e.kv.at("kp");
    if (e.kind == "claim_init" && ends_with(e.node, "S1,0.g2/S0,1")) x2 = e.kv.at("x");
    if (e.kind == "claim_init" && ends_with(e.node, "S1.g/S1,0")) z_s10 = e.kv.at("z");
  }
  EXPECT_EQ(x_prime, "3");
  EXPECT_EQ(kp_s01, x_prime);
  EXPECT_EQ(x2, "9");
  EXPECT_EQ(z_s10, x2);
}

TEST(Determinism, SameScenarioSameTrace) {
  const Scenario sc = fuzz(11, 3000);
  const std::string a = trace_of(sc);
  EXPECT_EQ(a, trace_of(sc));
  EXPECT_NE(a, trace_of(fuzz(12, 3000)));
}

TEST(Replay, FuzzTraceRevalidates) {
  const Scenario sc = fuzz(3, 5000);
  std::istringstream in(trace_of(sc));
  const ReplayResult r = replay_check(sc, in);
  EXPECT_TRUE(r.ok) << r.error;
  EXPECT_EQ(r.hashes, 5000u);
}

TEST(Replay, DetectsTamperingAndTruncation) {
  const Scenario sc = load_scenario(data("minimal.scn"));
  const std::string good = slurp(data("minimal.trace"));

  std::string tampered = std::regex_replace(good, std::regex("ev=PSI i=1 x=2 "), "ev=PSI i=1 x=3 ",
                                            std::regex_constants::format_first_only);
  ASSERT_NE(tampered, good);
  std::istringstream a(tampered);
  EXPECT_FALSE(replay_check(sc, a).ok);

  std::istringstream b(good.substr(0, good.size() / 2));
  EXPECT_FALSE(replay_check(sc, b).ok);

  std::string dropped = std::regex_replace(good, std::regex("s=5 parity=B kind=enumerate[^\n]*\n"), "");
  ASSERT_NE(dropped, good);
  std::istringstream c(dropped);
  EXPECT_FALSE(replay_check(sc, c).ok);
}

TEST(Dot, ContainsExactlyTheVisitedNodes) {
  std::ostringstream out;
  StreamSink sink(out);
  Session session(load_scenario(data("complete.scn")), &sink);
  session.run();
  std::set<std::string> visited;
  for (const auto& e : events(out.str())) {
    if (e.kind == "visit") visited.insert(e.node);
  }
  const std::string dot = dot_export(session.engine());
  std::set<std::string> drawn;
  const std::regex tooltip("tooltip=\"([^\"]*)\"");
  for (auto it = std::sregex_iterator(dot.begin(), dot.end(), tooltip); it != std::sregex_iterator(); ++it) {
    drawn.insert((*it)[1]);
  }
  EXPECT_EQ(drawn, visited);
  EXPECT_NE(dot.find("-> "), std::string::npos);
  EXPECT_LT(visited.size(), session.engine().tree().size() + 1);
}

TEST(Engine, TerminatedStageResumesNextStage) {
  Session session(fuzz(5, 4000));
  bool prev_terminated = false;
  std::size_t terminated = 0;
  while (!session.done()) {
    const StageRecord& rec = session.step();
    if (prev_terminated) EXPECT_TRUE(rec.resumed) << "stage " << rec.s;
    prev_terminated = rec.terminated;
    terminated += rec.terminated;
  }
  EXPECT_GT(terminated, 0u);
}

TEST(Engine, EnumerationsMatchParityAndPath) {
  Session session(fuzz(1, 4000));
  std::size_t a = 0, b = 0;
  while (!session.done()) {
    const StageRecord& rec = session.step();
    ASSERT_LE(rec.enumerations.size(), 1u);
    for (const auto& [o, n] : rec.enumerations) {
      EXPECT_EQ(o == Oracle::A, rec.s % 2 == 0) << "stage " << rec.s;
      (o == Oracle::A ? a : b) += 1;
    }
  }
  EXPECT_GT(a, 0u);
  EXPECT_GT(b, 0u);
}
