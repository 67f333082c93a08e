#include "smp/tree.hpp"

#include <algorithm>
#include <stdexcept>

namespace smp {

namespace {

constexpr NodeId kUnassigned = -2;

std::string node_label(NodeKind kind, int req, int j) {
  switch (kind) {
    case NodeKind::R:
      return "R" + std::to_string(req);
    case NodeKind::SParent:
      return "S" + std::to_string(req);
    case NodeKind::SChild:
      return "S" + std::to_string(req) + "," + std::to_string(j);
  }
  return "?";
}

}  // namespace

std::string OutcomeLabel::token() const {
  switch (kind) {
    case OutcomeKind::I:
      return "i";
    case OutcomeKind::F:
      return "f";
    case OutcomeKind::D:
      return "d";
    case OutcomeKind::G:
      return "g";
    case OutcomeKind::W:
      return "w";
    case OutcomeKind::GAlpha:
      return "g" + std::to_string(alpha_req);
    case OutcomeKind::C:
      return "c";
  }
  return "?";
}

int TreeNode::outcome_index(OutcomeKind k, NodeId alpha) const {
  for (std::size_t o = 0; o < outcomes.size(); ++o) {
    if (outcomes[o].kind == k && (k != OutcomeKind::GAlpha || outcomes[o].alpha == alpha)) {
      return static_cast<int>(o);
    }
  }
  return -1;
}

std::vector<Requirement> priority_list(std::span<const int> r_indices, std::span<const int> s_indices) {
  auto has = [](std::span<const int> v, int k) { return std::find(v.begin(), v.end(), k) != v.end(); };
  int top = -1;
  for (int k : r_indices) top = std::max(top, k);
  for (int k : s_indices) top = std::max(top, k + 1);
  std::vector<Requirement> out;
  if (has(r_indices, 0)) out.push_back({Requirement::Kind::R, 0});
  for (int k = 0; k <= top; ++k) {
    if (has(r_indices, k + 1)) out.push_back({Requirement::Kind::R, k + 1});
    if (has(s_indices, k)) out.push_back({Requirement::Kind::S, k});
  }
  return out;
}

// ---------------------------------------------------------------- tree

Tree::Tree(std::vector<Requirement> priority) : priority_(std::move(priority)) {
  if (auto spec = assign({})) create(*spec, {});
}

NodeId Tree::peek_child(NodeId id, int outcome) const {
  NodeId c = children_.at(static_cast<std::size_t>(id)).at(static_cast<std::size_t>(outcome));
  return c == kUnassigned ? kNoNode : c;
}

NodeId Tree::child(NodeId id, int outcome) {
  NodeId& slot = children_.at(static_cast<std::size_t>(id)).at(static_cast<std::size_t>(outcome));
  if (slot != kUnassigned) return slot;
  std::vector<Step> trail = node(id).trail;
  trail.push_back({id, outcome});
  const auto spec = assign(trail);
  // create() may reallocate children_, so the slot is looked up again.
  const NodeId made = spec ? create(*spec, std::move(trail)) : kNoNode;
  children_[static_cast<std::size_t>(id)][static_cast<std::size_t>(outcome)] = made;
  return made;
}

const std::vector<NodeId>& Tree::family(NodeId parent) const {
  return families_.at(static_cast<std::size_t>(parent));
}

std::optional<NodeSpec> Tree::assign(std::span<const Step> trail) const {
  const std::vector<bool> inside = enclosure(trail);
  auto enclosed = [&](std::size_t pos) { return inside[pos]; };

  if (!trail.empty()) {
    const Step last = trail.back();
    const TreeNode& ln = node(last.node);
    if (ln.kind == NodeKind::SParent && ln.outcomes[last.outcome].kind == OutcomeKind::G) {
      return NodeSpec{NodeKind::SChild, ln.req, 0, ln.id};
    }
    // A family whose children all took c gets its next child at the first
    // position that follows a node of some lower-priority family. An
    // enclosed parent no longer represents its requirement.
    if (ln.kind != NodeKind::R) {
      const NodeId last_family = ln.kind == NodeKind::SParent ? ln.id : ln.family;
      const int last_family_depth = node(last_family).depth;
      for (std::size_t k = 0; k < trail.size(); ++k) {
        const TreeNode& p = node(trail[k].node);
        if (p.kind != NodeKind::SParent || p.outcomes[trail[k].outcome].kind != OutcomeKind::G) continue;
        if (enclosed(k)) continue;
        if (p.id == last_family || p.depth >= last_family_depth) continue;
        int members = 0;
        bool all_c = true;
        for (const Step& t : trail) {
          const TreeNode& c = node(t.node);
          if (c.kind != NodeKind::SChild || c.family != p.id) continue;
          ++members;
          all_c = all_c && c.outcomes[t.outcome].kind == OutcomeKind::C;
        }
        if (members > 0 && all_c) return NodeSpec{NodeKind::SChild, p.req, members, p.id};
      }
    }
  }

  for (const Requirement& req : priority_) {
    bool represented = false;
    for (std::size_t k = 0; k < trail.size() && !represented; ++k) {
      const TreeNode& n = node(trail[k].node);
      if (req.kind == Requirement::Kind::R) {
        represented = n.kind == NodeKind::R && n.req == req.index && !enclosed(k);
      } else {
        represented = n.kind == NodeKind::SParent && n.req == req.index && !enclosed(k);
      }
    }
    if (represented) continue;
    return NodeSpec{req.kind == Requirement::Kind::R ? NodeKind::R : NodeKind::SParent, req.index, -1, kNoNode};
  }
  return std::nullopt;
}

std::vector<NodeId> Tree::active_R(std::span<const Step> trail) const {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < trail.size(); ++k) {
    const OutcomeLabel& o = node(trail[k].node).outcomes[trail[k].outcome];
    if (o.kind == OutcomeKind::GAlpha) pairs.emplace_back(static_cast<std::size_t>(node(o.alpha).depth), k);
  }
  std::vector<NodeId> out;
  for (std::size_t k = 0; k < trail.size(); ++k) {
    const TreeNode& a = node(trail[k].node);
    if (a.kind != NodeKind::R || a.outcomes[trail[k].outcome].kind != OutcomeKind::I) continue;
    const bool blocked = std::any_of(pairs.begin(), pairs.end(), [k](const auto& pr) {
      return pr.first == k || (pr.first < k && k < pr.second);
    });
    if (!blocked) out.push_back(a.id);
  }
  return out;
}

std::vector<bool> Tree::enclosure(std::span<const Step> trail) const {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k < trail.size(); ++k) {
    const OutcomeLabel& o = node(trail[k].node).outcomes[trail[k].outcome];
    if (o.kind == OutcomeKind::GAlpha) pairs.emplace_back(static_cast<std::size_t>(node(o.alpha).depth), k);
  }
  std::vector<bool> out(trail.size(), false);
  for (std::size_t pos = 0; pos < trail.size(); ++pos) {
    const NodeId self = trail[pos].node;
    out[pos] = std::any_of(pairs.begin(), pairs.end(), [&](const auto& pr) {
      return pr.first < pos && pos < pr.second && node(trail[pr.second].node).family != self;
    });
  }
  return out;
}

std::vector<NodeId> Tree::active_families(std::span<const Step> trail) const {
  const std::vector<bool> inside = enclosure(trail);
  std::vector<NodeId> out;
  for (std::size_t k = 0; k < trail.size(); ++k) {
    const TreeNode& p = node(trail[k].node);
    if (p.kind != NodeKind::SParent || p.outcomes[trail[k].outcome].kind != OutcomeKind::G || inside[k]) continue;
    const bool stopped = std::any_of(trail.begin(), trail.end(), [&](const Step& t) {
      const TreeNode& c = node(t.node);
      return c.kind == NodeKind::SChild && c.family == p.id && c.outcomes[t.outcome].kind == OutcomeKind::GAlpha;
    });
    if (!stopped) out.push_back(p.id);
  }
  return out;
}

NodeId Tree::create(const NodeSpec& spec, std::vector<Step> trail) {
  TreeNode n;
  n.id = static_cast<NodeId>(nodes_.size());
  n.kind = spec.kind;
  n.req = spec.req;
  n.child_index = spec.child_index;
  n.family = spec.family;
  n.depth = static_cast<int>(trail.size());
  n.label = node_label(spec.kind, spec.req, spec.child_index);
  n.active = active_R(trail);
  n.active_families = active_families(trail);
  for (const Step& st : trail) {
    if (node(st.node).outcomes[st.outcome].kind == OutcomeKind::GAlpha) n.pairs.push_back(st);
  }

  switch (spec.kind) {
    case NodeKind::R:
      n.outcomes = {{OutcomeKind::I}, {OutcomeKind::F}};
      break;
    case NodeKind::SParent:
      n.outcomes = {{OutcomeKind::D}, {OutcomeKind::G}, {OutcomeKind::W}};
      break;
    case NodeKind::SChild: {
      // R-nodes active at the parent that no pair has since disabled,
      // highest priority leftmost.
      for (NodeId a : node(spec.family).active) {
        if (std::find(n.active.begin(), n.active.end(), a) == n.active.end()) continue;
        n.outcomes.push_back({OutcomeKind::GAlpha, a, node(a).req});
      }
      n.outcomes.push_back({OutcomeKind::C});
      break;
    }
  }

  std::string path;
  for (const Step& st : trail) {
    const TreeNode& p = node(st.node);
    path += p.label + "." + p.outcomes[st.outcome].token() + "/";
  }
  n.path = path + n.label;
  n.trail = std::move(trail);

  children_.emplace_back(n.outcomes.size(), kUnassigned);
  families_.emplace_back();
  if (spec.kind == NodeKind::SChild) families_[static_cast<std::size_t>(spec.family)].push_back(n.id);
  nodes_.push_back(std::move(n));
  return nodes_.back().id;
}

bool Tree::is_ancestor(NodeId a, NodeId b) const {
  const TreeNode& na = node(a);
  const TreeNode& nb = node(b);
  return na.depth < nb.depth && nb.trail[static_cast<std::size_t>(na.depth)].node == a;
}

int Tree::outcome_along(NodeId anc, NodeId desc) const {
  if (!is_ancestor(anc, desc)) return -1;
  return node(desc).trail[static_cast<std::size_t>(node(anc).depth)].outcome;
}

bool Tree::extends(NodeId n, NodeId at, int outcome) const { return outcome_along(at, n) == outcome; }

bool Tree::left_of(NodeId a, NodeId b) const {
  const auto& ta = node(a).trail;
  const auto& tb = node(b).trail;
  const std::size_t m = std::min(ta.size(), tb.size());
  for (std::size_t k = 0; k < m; ++k) {
    if (ta[k].outcome != tb[k].outcome) return ta[k].outcome < tb[k].outcome;
  }
  return false;
}

bool Tree::right_of_path(NodeId n, std::span<const Step> path) const {
  const auto& t = node(n).trail;
  const std::size_t m = std::min(t.size(), path.size());
  for (std::size_t k = 0; k < m; ++k) {
    if (path[k].node != t[k].node || path[k].outcome < 0) return false;
    if (t[k].outcome != path[k].outcome) return t[k].outcome > path[k].outcome;
  }
  return false;
}

std::string Tree::edge_string(NodeId id, int outcome) const {
  const TreeNode& n = node(id);
  if (outcome < 0) return n.path;
  return n.path + "." + n.outcomes.at(static_cast<std::size_t>(outcome)).token();
}

// ---------------------------------------------------------------- points

std::optional<Nat> family_killing_point(const Tree& tree, const PointView& view, NodeId parent, NodeId ref) {
  std::optional<Nat> best = view.clearing_point(parent);
  for (NodeId c : tree.family(parent)) {
    if (c == ref || !(tree.is_ancestor(c, ref) || tree.left_of(c, ref))) continue;
    if (auto z = view.live_claim_point(c); z && (!best || *z > *best)) best = z;
  }
  return best;
}

std::optional<Nat> killing_point(const Tree& tree, const PointView& view, NodeId child) {
  return family_killing_point(tree, view, tree.node(child).family, child);
}

Nat clearing_point(const Tree& tree, const PointView& view, NodeId beta) {
  const auto x = view.witness(beta);
  if (!x) throw std::logic_error("clearing point of " + tree.node(beta).path + " without a witness");
  Nat y = *x;
  for (NodeId p : tree.node(beta).active_families) {
    if (auto k = family_killing_point(tree, view, p, beta)) y = std::min(y, *k);
  }
  return y;
}

Nat claim_point(const Tree& tree, const PointView& view, NodeId beta, NodeId blocking) {
  const auto x = view.witness(beta);
  if (!x) throw std::logic_error("claim point of " + tree.node(beta).path + " without a witness");
  Nat z = *x;
  for (NodeId p : tree.node(blocking).active_families) {
    Nat m = 0;
    bool any = false;
    for (NodeId c : tree.family(p)) {
      if (!tree.is_ancestor(blocking, c)) continue;
      if (auto cz = view.live_claim_point(c)) {
        m = any ? std::max(m, *cz) : *cz;
        any = true;
      }
    }
    if (any) z = std::min(z, m);
  }
  return z;
}

}  // namespace smp
