#pragma once

// The lazily materialized priority tree. Node kinds, outcome orderings,
// requirement assignment, active R-nodes, pairs and families, and the
// clearing / killing / claim point calculus.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smp/core.hpp"

namespace smp {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

enum class NodeKind : std::uint8_t { R, SParent, SChild };

enum class OutcomeKind : std::uint8_t { I, F, D, G, W, GAlpha, C };

struct OutcomeLabel {
  OutcomeKind kind = OutcomeKind::I;
  NodeId alpha = kNoNode;  // paired R-node for g_alpha
  int alpha_req = -1;
  std::string token() const;
};

struct Requirement {
  enum class Kind : std::uint8_t { R, S } kind = Kind::R;
  int index = 0;
  bool operator==(const Requirement&) const = default;
};

/// Fixed global priority list R0, R1, S0, R2, S1, R3, S2, ... restricted to
/// the given requirement indices.
std::vector<Requirement> priority_list(std::span<const int> r_indices, std::span<const int> s_indices);

/// One (node, outcome) edge of a path from the root.
struct Step {
  NodeId node = kNoNode;
  int outcome = -1;
  bool operator==(const Step&) const = default;
};

struct NodeSpec {
  NodeKind kind = NodeKind::R;
  int req = 0;
  int child_index = -1;
  NodeId family = kNoNode;
  bool operator==(const NodeSpec&) const = default;
};

struct TreeNode {
  NodeId id = kNoNode;
  NodeKind kind = NodeKind::R;
  int req = 0;
  int child_index = -1;     // j of S_{i,j}
  NodeId family = kNoNode;  // S-parent of a child
  int depth = 0;
  std::vector<OutcomeLabel> outcomes;
  std::vector<Step> trail;  // root .. parent edge
  std::string label;        // R0, S0, S0,0
  std::string path;         // R0.i/R1.i/S0.g/S0,0

  // Static facts that depend on the position only.
  std::vector<NodeId> active;             // active R-nodes at this node, by priority
  std::vector<NodeId> active_families;    // still-active S-parents at this node
  std::vector<Step> pairs;                // (child, g_alpha) edges along the trail

  NodeId parent() const { return trail.empty() ? kNoNode : trail.back().node; }
  int outcome_index(OutcomeKind kind, NodeId alpha = kNoNode) const;
};

class Tree {
 public:
  explicit Tree(std::vector<Requirement> priority);

  bool empty() const noexcept { return nodes_.empty(); }
  const std::vector<Requirement>& priority() const noexcept { return priority_; }
  NodeId root() const noexcept { return nodes_.empty() ? kNoNode : 0; }
  const TreeNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Node below `outcome` of `id`, materialized on first request; kNoNode at a leaf.
  NodeId child(NodeId id, int outcome);
  /// Child if already materialized, without creating it.
  NodeId peek_child(NodeId id, int outcome) const;

  /// Kind of node the tree places below `trail`; nullopt when every
  /// requirement is represented.
  std::optional<NodeSpec> assign(std::span<const Step> trail) const;

  /// Active R-nodes for a node at the end of `trail`, by priority.
  std::vector<NodeId> active_R(std::span<const Step> trail) const;
  const std::vector<NodeId>& active_R(NodeId beta) const { return node(beta).active; }

  /// Children created so far for S-parent `parent`, in creation order.
  const std::vector<NodeId>& family(NodeId parent) const;

  /// a lies strictly above b.
  bool is_ancestor(NodeId a, NodeId b) const;
  /// Outcome of ancestor `anc` on the path to `desc`, or -1.
  int outcome_along(NodeId anc, NodeId desc) const;
  /// a is strictly to the left of b (they diverge and a's branch is left).
  bool left_of(NodeId a, NodeId b) const;
  /// n branches off `path` to the right.
  bool right_of_path(NodeId n, std::span<const Step> path) const;
  /// n extends the edge (at, outcome).
  bool extends(NodeId n, NodeId at, int outcome) const;

  /// Per trail position: strictly inside a pair (alpha', beta'), where an
  /// S-parent ignores the pairs of its own family.
  std::vector<bool> enclosure(std::span<const Step> trail) const;

  /// Path string of a node followed by `.outcome` when outcome >= 0.
  std::string edge_string(NodeId id, int outcome) const;

 private:
  std::vector<Requirement> priority_;
  std::vector<TreeNode> nodes_;
  std::vector<std::vector<NodeId>> children_;  // per node, per outcome; -2 unassigned
  std::vector<std::vector<NodeId>> families_;  // per node (S-parents only)

  NodeId create(const NodeSpec& spec, std::vector<Step> trail);
  std::vector<NodeId> active_families(std::span<const Step> trail) const;
};

/// Engine-owned values the point calculus reads.
class PointView {
 public:
  virtual ~PointView() = default;
  virtual std::optional<Nat> live_claim_point(NodeId child) const = 0;
  virtual std::optional<Nat> clearing_point(NodeId parent) const = 0;
  virtual std::optional<Nat> witness(NodeId parent) const = 0;
};

/// Killing point announced by the family of `parent` as seen from `ref`: the
/// largest live claim point among its children above or left of `ref`, and
/// the parent's clearing point.
std::optional<Nat> family_killing_point(const Tree& tree, const PointView& view, NodeId parent, NodeId ref);

std::optional<Nat> killing_point(const Tree& tree, const PointView& view, NodeId child);

/// Least killing point of the still-active families above `beta`, capped by its witness.
Nat clearing_point(const Tree& tree, const PointView& view, NodeId beta);

/// Least over still-active families at `blocking` of the largest live claim
/// point among family members below `blocking` (infinity when none), capped
/// by the witness of `beta`.
Nat claim_point(const Tree& tree, const PointView& view, NodeId beta, NodeId blocking);

}  // namespace smp
