#include <gtest/gtest.h>

#include <map>
#include <random>

#include "smp/tree.hpp"

using namespace smp;

namespace {

std::vector<Requirement> reqs(std::vector<int> r, std::vector<int> s) { return priority_list(r, s); }

// Follows a slash-joined path of outcome tokens such as "i/i/g/c".
NodeId walk(Tree& t, std::vector<std::string> tokens) {
  NodeId n = t.root();
  for (const auto& tok : tokens) {
    const auto& outs = t.node(n).outcomes;
    int idx = -1;
    for (std::size_t o = 0; o < outs.size(); ++o) {
      if (outs[o].token() == tok) idx = static_cast<int>(o);
    }
    EXPECT_GE(idx, 0) << "no outcome " << tok << " at " << t.node(n).path;
    if (idx < 0) return kNoNode;
    n = t.child(n, idx);
    if (n == kNoNode) return kNoNode;
  }
  return n;
}

std::vector<std::string> labels(const Tree& t, const std::vector<NodeId>& ids) {
  std::vector<std::string> out;
  for (NodeId id : ids) out.push_back(t.node(id).label);
  return out;
}

class FixedPoints final : public PointView {
 public:
  std::map<NodeId, Nat> claims, clearing, witnesses;
  std::optional<Nat> live_claim_point(NodeId c) const override { return get(claims, c); }
  std::optional<Nat> clearing_point(NodeId p) const override { return get(clearing, p); }
  std::optional<Nat> witness(NodeId p) const override { return get(witnesses, p); }

 private:
  static std::optional<Nat> get(const std::map<NodeId, Nat>& m, NodeId k) {
    auto it = m.find(k);
    return it == m.end() ? std::nullopt : std::optional<Nat>(it->second);
  }
};

}  // namespace

TEST(Priority, InterleavesRequirements) {
  auto p = reqs({0, 1, 2}, {0, 1, 2});
  std::vector<std::string> got;
  for (const auto& r : p) got.push_back((r.kind == Requirement::Kind::R ? "R" : "S") + std::to_string(r.index));
  EXPECT_EQ(got, (std::vector<std::string>{"R0", "R1", "S0", "R2", "S1", "S2"}));
}

TEST(Tree, RootIsR0) {
  Tree t(reqs({0, 1}, {0}));
  EXPECT_EQ(t.node(t.root()).path, "R0");
  EXPECT_EQ(t.node(t.root()).outcomes.size(), 2u);
}

TEST(Tree, FirstChildFollowsParentG) {
  Tree t(reqs({0, 1}, {0, 1}));
  NodeId c = walk(t, {"i", "i", "g"});
  EXPECT_EQ(t.node(c).path, "R0.i/R1.i/S0.g/S0,0");
  EXPECT_EQ(t.node(c).kind, NodeKind::SChild);
  std::vector<std::string> outs;
  for (const auto& o : t.node(c).outcomes) outs.push_back(o.token());
  EXPECT_EQ(outs, (std::vector<std::string>{"g0", "g1", "c"}));
}

TEST(Tree, MinimalExampleShape) {
  Tree t(reqs({0, 1}, {0, 1}));
  NodeId s1 = walk(t, {"i", "i", "g", "g1"});
  EXPECT_EQ(t.node(s1).label, "S1");
  EXPECT_EQ(labels(t, t.active_R(s1)), (std::vector<std::string>{"R0"}));
  NodeId s01 = walk(t, {"i", "i", "g", "c"});
  EXPECT_EQ(t.node(s01).label, "S1");
}

TEST(Tree, CompleteExampleShape) {
  Tree t(reqs({0, 1, 2}, {0, 1, 2}));
  NodeId r2 = walk(t, {"i", "i", "g", "c"});
  EXPECT_EQ(t.node(r2).path, "R0.i/R1.i/S0.g/S0,0.c/R2");
  NodeId s1 = walk(t, {"i", "i", "g", "c", "i"});
  EXPECT_EQ(t.node(s1).label, "S1");
  EXPECT_EQ(labels(t, t.active_R(s1)), (std::vector<std::string>{"R0", "R1", "R2"}));
  NodeId s10 = walk(t, {"i", "i", "g", "c", "i", "g"});
  EXPECT_EQ(t.node(s10).label, "S1,0");
  NodeId s01 = walk(t, {"i", "i", "g", "c", "i", "g", "g2"});
  EXPECT_EQ(t.node(s01).label, "S0,1");
  EXPECT_EQ(t.node(s01).child_index, 1);
  NodeId s01c = walk(t, {"i", "i", "g", "c", "i", "g", "c"});
  EXPECT_EQ(t.node(s01c).label, "S0,1");
  NodeId s3 = walk(t, {"i", "i", "g", "c", "i", "g", "g2", "c"});
  EXPECT_EQ(t.node(s3).label, "S2");
  EXPECT_EQ(labels(t, t.active_R(s3)), (std::vector<std::string>{"R0", "R1"}));
  EXPECT_EQ(t.node(s3).path, "R0.i/R1.i/S0.g/S0,0.c/R2.i/S1.g/S1,0.g2/S0,1.c/S2");
}

TEST(Tree, NoNewChildBelowGAlpha) {
  Tree t(reqs({0, 1}, {0, 1, 2}));
  // Below S0,0.g0 the pair (R0, S0,0) encloses R1, which is placed again.
  NodeId n = walk(t, {"i", "i", "g", "g0"});
  EXPECT_EQ(t.node(n).label, "R1");
  NodeId s1 = walk(t, {"i", "i", "g", "g0", "i"});
  EXPECT_EQ(t.node(s1).label, "S1");
  EXPECT_EQ(labels(t, t.active_R(s1)), (std::vector<std::string>{"R1"}));
  NodeId c = walk(t, {"i", "i", "g", "g0", "i", "g"});
  EXPECT_EQ(t.node(c).label, "S1,0");
  // The S0 family is finished here, so no S0,k appears below S1,0.
  NodeId below = walk(t, {"i", "i", "g", "g0", "i", "g", "g1"});
  EXPECT_EQ(t.node(below).label, "S2");
  NodeId cont = walk(t, {"i", "i", "g", "g0", "i", "g", "c"});
  EXPECT_EQ(t.node(cont).label, "S2");
}

TEST(Tree, LeafWhenEverythingRepresented) {
  Tree t(reqs({0}, {}));
  EXPECT_EQ(t.child(t.root(), 0), kNoNode);
}

TEST(Tree, RelationsAndEncoding) {
  Tree t(reqs({0, 1}, {0}));
  NodeId a = walk(t, {"i"});
  NodeId b = walk(t, {"f"});
  NodeId deep = walk(t, {"i", "i"});
  EXPECT_TRUE(t.is_ancestor(t.root(), deep));
  EXPECT_TRUE(t.left_of(a, b));
  EXPECT_FALSE(t.left_of(b, a));
  EXPECT_TRUE(t.left_of(deep, b));
  EXPECT_FALSE(t.left_of(t.root(), deep));
  EXPECT_EQ(t.outcome_along(t.root(), deep), 0);
  std::vector<Step> path{{t.root(), 0}};
  EXPECT_TRUE(t.right_of_path(b, path));
  EXPECT_FALSE(t.right_of_path(deep, path));
  EXPECT_EQ(t.edge_string(a, 0), "R0.i/R1.i");
}

TEST(Tree, AssignIsAFunctionOfThePath) {
  Tree t1(reqs({0, 1, 2}, {0, 1, 2}));
  Tree t2(reqs({0, 1, 2}, {0, 1, 2}));
  // Materialize in different orders; paths must map to the same kinds.
  std::mt19937_64 rng(3);
  std::map<std::string, std::string> seen;
  for (int round = 0; round < 200; ++round) {
    for (Tree* t : {&t1, &t2}) {
      NodeId n = t->root();
      for (int d = 0; d < 12 && n != kNoNode; ++d) {
        auto it = seen.emplace(t->node(n).path, t->node(n).label).first;
        EXPECT_EQ(it->second, t->node(n).label);
        n = t->child(n, static_cast<int>(rng() % t->node(n).outcomes.size()));
      }
    }
  }
}

// Each requirement appears at most once among un-enclosed nodes along any path,
// and active_R never includes an R-node strictly inside a pair.
TEST(TreeProperty, ActiveAndRepresentationOnRandomPaths) {
  Tree t(reqs({0, 1, 2, 3}, {0, 1, 2, 3}));
  std::mt19937_64 rng(11);
  for (int round = 0; round < 500; ++round) {
    NodeId n = t.root();
    for (int d = 0; d < 12; ++d) {
      const TreeNode& node = t.node(n);
      // Brute-force oracle for active_R over all (alpha', beta') pairs.
      std::vector<NodeId> expect;
      for (std::size_t k = 0; k < node.trail.size(); ++k) {
        const TreeNode& a = t.node(node.trail[k].node);
        if (a.kind != NodeKind::R || a.outcomes[node.trail[k].outcome].kind != OutcomeKind::I) continue;
        bool ok = true;
        for (std::size_t m = 0; m < node.trail.size(); ++m) {
          const auto& o = t.node(node.trail[m].node).outcomes[node.trail[m].outcome];
          if (o.kind != OutcomeKind::GAlpha) continue;
          if (o.alpha == a.id) ok = false;
          if (t.is_ancestor(o.alpha, a.id) && m > k) ok = false;
        }
        if (ok) expect.push_back(a.id);
      }
      EXPECT_EQ(t.active_R(n), expect) << node.path;
      // An S-parent is not enclosed by pairs of its own family.
      std::map<std::string, int> reps;
      for (std::size_t k = 0; k < node.trail.size(); ++k) {
        const TreeNode& r = t.node(node.trail[k].node);
        if (r.kind == NodeKind::SChild) continue;
        bool enclosed = false;
        for (std::size_t m = k + 1; m < node.trail.size(); ++m) {
          const TreeNode& b = t.node(node.trail[m].node);
          const auto& o = b.outcomes[node.trail[m].outcome];
          if (o.kind != OutcomeKind::GAlpha || b.family == r.id) continue;
          if (static_cast<std::size_t>(t.node(o.alpha).depth) < k) enclosed = true;
        }
        if (!enclosed) ++reps[r.label];
      }
      for (const auto& [lab, cnt] : reps) EXPECT_EQ(cnt, 1) << node.path << " " << lab;
      NodeId next = t.child(n, static_cast<int>(rng() % node.outcomes.size()));
      if (next == kNoNode) break;
      n = next;
    }
  }
}

TEST(Points, ClearingPointDefaultsToWitness) {
  Tree t(reqs({0, 1}, {0}));
  NodeId s0 = walk(t, {"i", "i"});
  FixedPoints v;
  v.witnesses[s0] = 20;
  EXPECT_EQ(clearing_point(t, v, s0), 20u);
}

TEST(Points, CompleteExampleNumbers) {
  Tree t(reqs({0, 1, 2}, {0, 1, 2}));
  const Nat x0 = 10, xp = 11, x1 = 12, x2 = 13, x3 = 14;
  NodeId s0 = walk(t, {"i", "i"});
  NodeId s00 = walk(t, {"i", "i", "g"});
  NodeId s1 = walk(t, {"i", "i", "g", "c", "i"});
  NodeId s10 = walk(t, {"i", "i", "g", "c", "i", "g"});
  NodeId s01 = walk(t, {"i", "i", "g", "c", "i", "g", "g2"});
  NodeId s2 = walk(t, {"i", "i", "g", "c", "i", "g", "g2", "g0"});
  NodeId s3 = walk(t, {"i", "i", "g", "c", "i", "g", "g2", "c"});
  FixedPoints v;
  v.witnesses = {{s0, x0}, {s1, x1}, {s2, x2}, {s3, x3}};
  v.clearing[s0] = x0;
  EXPECT_EQ(*killing_point(t, v, s00), x0);
  v.claims[s00] = xp;
  // S1 sees the S0 family through S0,0's claim.
  EXPECT_EQ(clearing_point(t, v, s1), xp);
  v.clearing[s1] = xp;
  // S0,1 kills at the S0,0 claim point.
  EXPECT_EQ(*killing_point(t, v, s01), xp);
  // S2 below S0,1.g0 initiates at S0,1 with its own witness.
  EXPECT_EQ(claim_point(t, v, s2, s01), x2);
  v.claims[s01] = x2;
  EXPECT_EQ(clearing_point(t, v, s3), x2);
  EXPECT_EQ(claim_point(t, v, s3, s10), x2);
  EXPECT_EQ(*killing_point(t, v, s10), xp);
}

TEST(Points, SingleClaimAbove) {
  Tree t(reqs({0, 1}, {0, 1}));
  NodeId s0 = walk(t, {"i", "i"});
  NodeId s00 = walk(t, {"i", "i", "g"});
  NodeId s1 = walk(t, {"i", "i", "g", "c"});
  FixedPoints v;
  v.witnesses = {{s0, 3}, {s1, 20}};
  v.clearing[s0] = 3;
  v.claims[s00] = 7;
  EXPECT_EQ(clearing_point(t, v, s1), 7u);
}
