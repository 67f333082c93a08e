#include "smp/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace smp {

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(Nat n) { return n == kInfinity ? "inf" : std::to_string(n); }

int index_of(const TreeNode& n, OutcomeKind k) { return n.outcome_index(k); }

}  // namespace

std::string TraceEvent::line() const {
  std::string out = "s=" + std::to_string(s) + " parity=" + std::string(to_string(parity)) + " kind=" + kind +
                    " node=" + (node.empty() ? "-" : node);
  if (!details.empty()) out += " " + details;
  return out;
}

std::string_view to_string(ViolationKind k) noexcept {
  switch (k) {
    case ViolationKind::StageDiscipline:
      return "StageDiscipline";
    case ViolationKind::WellDefinedness:
      return "WellDefinedness";
    case ViolationKind::RetirementCertificate:
      return "RetirementCertificate";
    case ViolationKind::DiagonalizationPreservation:
      return "DiagonalizationPreservation";
    case ViolationKind::LinkSnapshot:
      return "LinkSnapshot";
    case ViolationKind::ClaimUniqueness:
      return "ClaimUniqueness";
    case ViolationKind::TerminatedDichotomy:
      return "TerminatedDichotomy";
    case ViolationKind::DeltaAgreement:
      return "DeltaAgreement";
    case ViolationKind::ClaimPoint:
      return "ClaimPoint";
    case ViolationKind::ClearingPoint:
      return "ClearingPoint";
    case ViolationKind::ChildUnblocked:
      return "ChildUnblocked";
    case ViolationKind::ActionCap:
      return "ActionCap";
    case ViolationKind::ComputationIntegrity:
      return "ComputationIntegrity";
    case ViolationKind::PermanentWin:
      return "PermanentWin";
  }
  return "?";
}

std::string_view to_string(PendingKind k) noexcept {
  switch (k) {
    case PendingKind::None:
      return "none";
    case PendingKind::Diagonalize:
      return "diagonalize";
    case PendingKind::ExecRequest:
      return "request";
    case PendingKind::TakeOutcome:
      return "outcome";
  }
  return "?";
}

// ---------------------------------------------------------------- setup

Engine::Engine(EngineConfig cfg, std::unique_ptr<Adversary> adversary)
    : cfg_(std::move(cfg)),
      tree_(priority_list(cfg_.r_indices, cfg_.s_indices)),
      adversary_(std::move(adversary)) {
  for (int i : cfg_.w_indices) world_.declare_w(i);
  world_.witness_source = FreshSource(cfg_.fresh_seed);
  world_.marker_source = FreshSource(cfg_.fresh_seed);
  if (!adversary_) adversary_ = std::make_unique<Adversary>();
  sync_states();
}

void Engine::sync_states() {
  while (states_.size() < tree_.size()) {
    const TreeNode& n = tree_.node(static_cast<NodeId>(states_.size()));
    NodeState s;
    s.last_parity.assign(n.outcomes.size(), -1);
    states_.push_back(std::move(s));
    access_.emplace_back(n.outcomes.size());
    ever_visited_.push_back(false);
  }
}

NodeState& Engine::st(NodeId id) {
  if (static_cast<std::size_t>(id) >= states_.size()) sync_states();
  return states_.at(static_cast<std::size_t>(id));
}

std::string Engine::path_of(NodeId id) const { return id == kNoNode ? "-" : tree_.node(id).path; }

void Engine::emit(std::string_view kind, NodeId node, std::string details) {
  if (sink_ == nullptr) return;
  sink_->emit(TraceEvent{rec_.s, rec_.parity, std::string(kind), path_of(node), std::move(details)});
}

void Engine::emit_path(std::string_view kind, const std::string& node, std::string details) {
  if (sink_ == nullptr) return;
  sink_->emit(TraceEvent{rec_.s, rec_.parity, std::string(kind), node, std::move(details)});
}

void Engine::violation(ViolationKind kind, NodeId node, std::string details) {
  rec_.violations.push_back({kind, rec_.s, path_of(node), details});
  emit("violation", node, "type=" + std::string(to_string(kind)) + (details.empty() ? "" : " " + details));
}

// ---------------------------------------------------------------- queries

std::optional<Stage> Engine::last_access(NodeId id, int outcome) const {
  if (static_cast<std::size_t>(id) >= access_.size()) return std::nullopt;
  const Access& a = access_[static_cast<std::size_t>(id)].at(static_cast<std::size_t>(outcome));
  if (a.count == 0) return std::nullopt;
  return a.last;
}

std::uint64_t Engine::access_count(NodeId id, int outcome) const {
  if (static_cast<std::size_t>(id) >= access_.size()) return 0;
  return access_[static_cast<std::size_t>(id)].at(static_cast<std::size_t>(outcome)).count;
}

bool Engine::ever_visited(NodeId id) const {
  return static_cast<std::size_t>(id) < ever_visited_.size() && ever_visited_[static_cast<std::size_t>(id)];
}

std::uint64_t Engine::gap_enumerations(NodeId child) const {
  auto it = gap_enums_.find(child);
  return it == gap_enums_.end() ? 0 : it->second.first;
}

std::optional<Stage> Engine::last_gap_enumeration(NodeId child) const {
  auto it = gap_enums_.find(child);
  if (it == gap_enums_.end()) return std::nullopt;
  return it->second.second;
}

std::optional<Nat> Engine::live_claim_point(NodeId child) const {
  const NodeState& s = state(child);
  if (!s.claim) return std::nullopt;
  const Claim& c = claims_[static_cast<std::size_t>(*s.claim)];
  if (!c.live) return std::nullopt;
  return c.z;
}

std::optional<Nat> Engine::clearing_point(NodeId parent) const { return state(parent).clearing; }

std::optional<Nat> Engine::witness(NodeId parent) const { return state(parent).witness; }

const Computation* Engine::psi_of(NodeId parent) const {
  const auto& x = state(parent).witness;
  if (!x) return nullptr;
  return world_.computations().find(CompKey{MachineKind::Psi, tree_.node(parent).req, *x});
}

std::optional<Nat> Engine::gamma_marker(NodeId alpha, Nat x) const {
  const GammaTable* t = world_.gamma.find(alpha);
  if (t == nullptr) return std::nullopt;
  // An axiom retired by a smaller B-entry is re-issued with the same uses,
  // so its marker is still the one the R-node will enumerate.
  const AxiomRecord* r = t->current(x);
  if (r == nullptr) return std::nullopt;
  if (r->live() || (r->broken == BreakCause::B && !world_.b().contains(r->axiom.marker()))) return r->axiom.marker();
  return std::nullopt;
}

std::optional<int> Engine::blocking_outcome(NodeId child, Nat kp) const {
  const TreeNode& n = tree_.node(child);
  const Computation* psi = psi_of(n.family);
  if (psi == nullptr) return std::nullopt;
  for (int o = static_cast<int>(n.outcomes.size()) - 1; o >= 0; --o) {
    const OutcomeLabel& l = n.outcomes[static_cast<std::size_t>(o)];
    if (l.kind != OutcomeKind::GAlpha) continue;
    if (auto m = gamma_marker(l.alpha, kp); m && *m < psi->use) return o;
  }
  return std::nullopt;
}

bool Engine::claim_true(const Claim& c) const {
  const TreeNode& n = tree_.node(c.child);
  // A divergent computation has unbounded use and falsifies nothing.
  const Computation* psi = psi_of(n.family);
  if (psi == nullptr) return true;
  for (const OutcomeLabel& l : n.outcomes) {
    if (l.kind != OutcomeKind::GAlpha) continue;
    if (auto m = gamma_marker(l.alpha, c.z); m && *m < psi->use) return true;
  }
  return false;
}

bool Engine::believable(NodeId beta, const Computation& psi) const {
  const TreeNode& n = tree_.node(beta);
  // Markers that children paired above beta may still enumerate. A child can
  // move right to another g-outcome without initializing beta, so every
  // Gamma active at the child counts, not only the paired one.
  for (const Step& p : n.pairs) {
    auto kp = killing_point(tree_, *this, p.node);
    if (!kp) continue;
    for (const OutcomeLabel& o : tree_.node(p.node).outcomes) {
      if (o.kind != OutcomeKind::GAlpha) continue;
      if (auto m = gamma_marker(o.alpha, *kp); m && *m < psi.use) return false;
    }
  }
  // Markers already requested at R-nodes above beta.
  for (const Step& st : n.trail) {
    if (tree_.node(st.node).kind != NodeKind::R) continue;
    for (const auto& r : state(st.node).requests) {
      if (r.marker < psi.use) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- stage loop

const StageRecord& Engine::run_stage() {
  rec_ = StageRecord{};
  rec_.s = world_.stage();
  rec_.parity = world_.clock.parity();
  world_.clear_retired();
  path_.clear();
  actions_ = 0;

  const std::vector<Nat> wit(witnesses_.begin(), witnesses_.end());
  for (const auto& e : adversary_->step(rec_.s, world_, wit)) {
    emit("adversary", kNoNode, format_details(e));
    if (const auto* w = std::get_if<WAdd>(&e.payload)) {
      rec_.w_adds.emplace_back(w->i, w->n);
      for (NodeId id : dirty_) {
        for (auto& [o, d] : st(id).deltas) {
          if (d.requirement == w->i) d.note_w_added(w->n, rec_.s);
        }
      }
    }
  }

  try {
    if (!tree_.empty()) {
      if (pending_) {
        resume();
      } else {
        walk(tree_.root());
      }
    }
  } catch (const WellDefinednessViolation& e) {
    violation(ViolationKind::WellDefinedness, kNoNode, std::string("what=\"") + e.what() + "\"");
    finish_stage();
    throw;
  }
  finish_stage();
  return rec_;
}

void Engine::walk(NodeId start) {
  NodeId cur = start;
  while (cur != kNoNode) {
    if (static_cast<Stage>(tree_.node(cur).depth) > rec_.s) return;
    if (++actions_ > cfg_.action_cap) {
      violation(ViolationKind::ActionCap, cur, "cap=" + std::to_string(cfg_.action_cap));
      return;
    }
    sync_states();
    rec_.visited.push_back(cur);
    ever_visited_[static_cast<std::size_t>(cur)] = true;
    NodeState& ns = st(cur);
    ns.last_visit = rec_.s;
    if (ns.fresh) {
      ns.fresh = false;
      dirty_.insert(cur);
    }
    emit("visit", cur);

    Act a = act(cur);
    switch (a.kind) {
      case Act::Kind::Outcome:
        if (!take(cur, a.outcome, a)) return;
        path_.push_back({cur, a.outcome});
        if (after_take(cur, a.outcome, a)) return;
        cur = tree_.child(cur, a.outcome);
        break;
      case Act::Kind::EndStage:
      case Act::Kind::Terminate:
        return;
      case Act::Kind::Jump:
        path_ = tree_.node(a.target).trail;
        if (a.outcome < 0) {
          cur = a.target;
          break;
        }
        if (!take(a.target, a.outcome, a)) return;
        path_.push_back({a.target, a.outcome});
        if (after_take(a.target, a.outcome, a)) return;
        cur = tree_.child(a.target, a.outcome);
        break;
    }
  }
}

bool Engine::take(NodeId node, int outcome, const Act& act) {
  NodeState& ns = st(node);
  const auto p = static_cast<std::int8_t>(rec_.parity);
  if (ns.last_parity[static_cast<std::size_t>(outcome)] == p) {
    PendingAction pa;
    pa.kind = PendingKind::TakeOutcome;
    pa.node = node;
    pa.outcome = outcome;
    pa.child_gap = act.child_gap;
    pa.killing_point = act.killing_point;
    pa.path = path_;
    terminate(std::move(pa));
    return false;
  }
  if (sink_ != nullptr) {
    std::string d = "o=" + tree_.node(node).outcomes[static_cast<std::size_t>(outcome)].token();
    if (!act.note.empty()) d += " " + act.note;
    emit("outcome", node, std::move(d));
  }
  return true;
}

bool Engine::after_take(NodeId node, int outcome, const Act& act) {
  NodeState& ns = st(node);
  ns.last_outcome = outcome;
  const TreeNode& n = tree_.node(node);
  if (n.kind == NodeKind::R && n.outcomes[static_cast<std::size_t>(outcome)].kind == OutcomeKind::I) {
    ns.last_i_loa = act.loa;
    if (process_requests(node)) return true;
    maintain_gamma(node, act.loa);
    return false;
  }
  if (act.child_gap) return child_gap(node, outcome, act.killing_point);
  return false;
}

void Engine::terminate(PendingAction p) {
  p.seq = world_.seq();
  if (sink_ != nullptr) {
    std::string d = "pending=" + std::string(to_string(p.kind));
    if (p.outcome >= 0) d += " o=" + tree_.node(p.node).outcomes[static_cast<std::size_t>(p.outcome)].token();
    emit("terminate", p.node, std::move(d));
  }
  pending_ = std::move(p);
}

void Engine::resume() {
  PendingAction p = std::move(*pending_);
  pending_.reset();
  rec_.resumed = true;

  // The highest R-node on the recorded path whose W changed below its
  // previous length of agreement decides whether the path switches.
  std::size_t switch_at = p.path.size();
  int forced = -1;
  for (std::size_t k = 0; k < p.path.size(); ++k) {
    const TreeNode& n = tree_.node(p.path[k].node);
    if (n.kind != NodeKind::R) continue;
    const Nat prev = st(n.id).last_loa;
    bool changed = false;
    for (const auto& [m, e] : world_.w(n.req).members()) {
      if (m >= prev) break;
      if (e.seq > p.seq) {
        changed = true;
        break;
      }
    }
    if (!changed) continue;
    const Nat loa = length_of_agreement(world_, n.req);
    const int oi = index_of(n, OutcomeKind::I);
    const int of = index_of(n, OutcomeKind::F);
    if (loa < prev) {
      forced = of;
    } else if (loa > prev && p.path[k].outcome == of) {
      forced = oi;
    }
    if (forced >= 0) switch_at = k;
    break;
  }

  auto rewalk = [&](std::size_t upto) {
    for (std::size_t k = 0; k < upto; ++k) {
      const Step stp = p.path[k];
      rec_.visited.push_back(stp.node);
      ever_visited_[static_cast<std::size_t>(stp.node)] = true;
      emit("visit", stp.node, "resume=1");
      if (sink_ != nullptr) {
        emit("outcome", stp.node,
             "o=" + tree_.node(stp.node).outcomes[static_cast<std::size_t>(stp.outcome)].token() + " resume=1");
      }
      path_.push_back(stp);
      st(stp.node).last_outcome = stp.outcome;
    }
  };

  if (switch_at < p.path.size()) {
    const NodeId alpha = p.path[switch_at].node;
    rewalk(switch_at);
    rec_.resumed_switch = true;
    rec_.switch_node = alpha;
    rec_.visited.push_back(alpha);
    emit("visit", alpha, "resume=1");
    const TreeNode& n = tree_.node(alpha);
    NodeState& ns = st(alpha);
    const Nat loa = length_of_agreement(world_, n.req);
    if (n.outcomes[static_cast<std::size_t>(forced)].kind == OutcomeKind::F) {
      // Phi(A) and W now disagree below the old agreement.
      const auto* c = world_.computations().find(CompKey{MachineKind::Phi, n.req, loa});
      const bool valid = c != nullptr && c->output == 0 && world_.w(n.req).contains(loa);
      wins_.push_back({alpha, ns.epoch, loa, rec_.s, valid});
    } else {
      ns.last_i_loa = loa;
    }
    ns.last_loa = loa;
    if (sink_ != nullptr) {
      emit("outcome", alpha,
           "o=" + n.outcomes[static_cast<std::size_t>(forced)].token() + " switch=1 loa=" + num(loa));
    }
    path_.push_back({alpha, forced});
    ns.last_outcome = forced;
    sync_states();
    walk(tree_.child(alpha, forced));
    return;
  }

  rewalk(p.path.size());
  rec_.resumed_executed = true;
  switch (p.kind) {
    case PendingKind::None:
      return;
    case PendingKind::Diagonalize:
      rec_.visited.push_back(p.node);
      emit("visit", p.node, "resume=1");
      diagonalize(p.node);
      return;
    case PendingKind::ExecRequest: {
      auto& q = st(p.node).requests;
      if (q.empty()) return;
      const CorrectionRequest r = q.front();
      q.pop_front();
      execute_request(p.node, r);
      return;
    }
    case PendingKind::TakeOutcome: {
      rec_.visited.push_back(p.node);
      emit("visit", p.node, "resume=1");
      const TreeNode& n = tree_.node(p.node);
      NodeState& ns = st(p.node);
      if (sink_ != nullptr) {
        emit("outcome", p.node, "o=" + n.outcomes[static_cast<std::size_t>(p.outcome)].token() + " resume=1");
      }
      path_.push_back({p.node, p.outcome});
      ns.last_outcome = p.outcome;
      if (n.kind == NodeKind::R && n.outcomes[static_cast<std::size_t>(p.outcome)].kind == OutcomeKind::I) {
        ns.last_i_loa = ns.last_loa;
      }
      if (p.child_gap && child_gap(p.node, p.outcome, p.killing_point)) return;
      sync_states();
      walk(tree_.child(p.node, p.outcome));
      return;
    }
  }
}

void Engine::finish_stage() {
  std::vector<NodeId> victims;
  for (NodeId id : dirty_) {
    if (tree_.right_of_path(id, path_)) victims.push_back(id);
  }
  for (NodeId id : victims) initialize(id);

  const auto p = static_cast<std::int8_t>(rec_.parity);
  for (const Step& stp : path_) {
    st(stp.node).last_parity[static_cast<std::size_t>(stp.outcome)] = p;
    Access& a = access_[static_cast<std::size_t>(stp.node)][static_cast<std::size_t>(stp.outcome)];
    a.last = rec_.s;
    ++a.count;
  }
  rec_.path = path_;
  rec_.terminated = pending_.has_value();
  rec_.pending = pending_ ? pending_->kind : PendingKind::None;
  rec_.hash = stage_hash(rec_.s, world_.state_hash());
  emit("hash", kNoNode, "h=" + hex(rec_.hash));
  world_.clock.advance();
}

// ---------------------------------------------------------------- actions

Engine::Act Engine::act(NodeId node) {
  switch (tree_.node(node).kind) {
    case NodeKind::R:
      return act_R(node);
    case NodeKind::SParent:
      return act_S_parent(node);
    case NodeKind::SChild:
      return act_S_child(node);
  }
  return {};
}

Engine::Act Engine::act_R(NodeId alpha) {
  const TreeNode& n = tree_.node(alpha);
  NodeState& ns = st(alpha);
  const Nat loa = length_of_agreement(world_, n.req);
  ns.last_loa = loa;
  const bool expansionary = ns.last_i_loa ? loa > *ns.last_i_loa : loa > 0;
  Act a;
  a.outcome = index_of(n, expansionary ? OutcomeKind::I : OutcomeKind::F);
  a.loa = loa;
  if (sink_ != nullptr) a.note = "loa=" + num(loa);
  return a;
}

bool Engine::process_requests(NodeId alpha) {
  auto& q = st(alpha).requests;
  while (!q.empty()) {
    const CorrectionRequest r = q.front();
    const AxiomRecord& ax = world_.gamma.record(r.axiom);
    const auto cur = world_.gamma.find(alpha)->current(r.x);
    const char* reason = nullptr;
    if (world_.w(ax.axiom.requirement).changed_below_since(ax.axiom.w_use, ax.axiom.def_seq)) {
      reason = "w-changed";
    } else if (world_.b().contains(r.marker)) {
      reason = "marker-in-B";
    } else if (cur == nullptr || cur->axiom.marker() != r.marker) {
      reason = "superseded";
    }
    if (reason != nullptr) {
      q.pop_front();
      emit("request_cancel", alpha, "x=" + num(r.x) + " marker=" + num(r.marker) + " reason=" + reason);
      continue;
    }
    if (rec_.parity == Parity::B) {
      q.pop_front();
      execute_request(alpha, r);
      return true;
    }
    PendingAction pa;
    pa.kind = PendingKind::ExecRequest;
    pa.node = alpha;
    pa.outcome = index_of(tree_.node(alpha), OutcomeKind::I);
    pa.path = path_;
    terminate(std::move(pa));
    return true;
  }
  return false;
}

bool Engine::execute_request(NodeId alpha, const CorrectionRequest& r) {
  emit("request_exec", alpha, "x=" + num(r.x) + " marker=" + num(r.marker) + " from=" + path_of(r.requester));
  return enumerate(Oracle::B, r.marker, alpha);
}

void Engine::maintain_gamma(NodeId alpha, Nat loa) {
  const int req = tree_.node(alpha).req;
  GammaTable& t = world_.gamma.table(alpha, req);
  const SetState& w = world_.w(req);
  // Once the uses at some x increase, every larger argument gets new uses too.
  bool raised = false;
  auto maintain = [&](Nat x) {
    const AxiomRecord* cur = t.current(x);
    const int out = world_.a().contains(x) ? 1 : 0;
    Nat b_use = 0;
    Nat w_use = loa;
    if (cur == nullptr || raised) {
      raised = true;
    } else if (world_.b().contains(cur->axiom.marker()) && out == 0) {
      raised = true;
    } else if (w.changed_below_since(cur->axiom.w_use, cur->axiom.def_seq)) {
      raised = true;
      w_use = cur->axiom.w_use;
    } else if (cur->live()) {
      // Correct, or waiting for its correction request.
      return;
    } else {
      // B moved below the use: same uses, current oracle.
      b_use = cur->axiom.b_use;
      w_use = cur->axiom.w_use;
    }
    if (raised) b_use = world_.marker_source.fresh() + 1;
    FunctionalAxiom ax{alpha, req, x, b_use, w_use, out, rec_.s, world_.next_seq()};
    auto d = world_.gamma.define(ax);
    if (d.displaced && d.displaced->axiom.output != out) {
      throw WellDefinednessViolation("Gamma at " + path_of(alpha) + " x=" + num(x) + " redefined from " +
                                     std::to_string(d.displaced->axiom.output) + " to " + std::to_string(out));
    }
  };
  // Below the first raise only arguments with a retired axiom change, so
  // scan those before the fresh tail.
  const std::vector<Nat> stale(t.stale().begin(), t.stale().upper_bound(loa));
  Nat x = 0;
  for (Nat y : stale) {
    x = y;
    maintain(x);
    if (raised) break;
  }
  x = raised ? x + 1 : std::min<Nat>(t.domain(), loa + 1);
  for (; x <= loa; ++x) maintain(x);
}

bool Engine::enumerate(Oracle o, Nat n, NodeId by) {
  if (world_.enumerate(o, n) != EnumerateResult::Added) {
    throw std::logic_error("enumeration attempted against the stage parity");
  }
  rec_.enumerations.emplace_back(o, n);
  emit("enumerate", by, std::string("set=") + (o == Oracle::A ? "A" : "B") + " n=" + num(n));
  return true;
}

void Engine::diagonalize(NodeId beta) {
  NodeState& ns = st(beta);
  const Nat x = *ns.witness;
  const Computation* psi = psi_of(beta);
  const Nat psi_use = psi != nullptr ? psi->use : 0;
  enumerate(Oracle::A, x, beta);
  for (NodeId alpha : tree_.active_R(beta)) {
    const GammaTable* t = world_.gamma.find(alpha);
    if (t == nullptr) continue;
    auto idx = t->current_index(x);
    if (!idx || !t->history()[*idx].live()) continue;
    CorrectionRequest r{alpha, x, t->history()[*idx].axiom.marker(), beta, rec_.s, AxiomRef{alpha, *idx}};
    emit("request", alpha, "x=" + num(x) + " marker=" + num(r.marker) + " from=" + path_of(beta));
    st(alpha).requests.push_back(r);
  }
  ns.diagonalized = true;
  diags_.push_back({beta, ns.epoch, x, psi_use, rec_.s});
  const int d = index_of(tree_.node(beta), OutcomeKind::D);
  emit("outcome", beta, "o=d x=" + num(x) + " psi_use=" + num(psi_use));
  path_.push_back({beta, d});
  ns.last_outcome = d;
}

Engine::Act Engine::act_S_parent(NodeId beta) {
  const TreeNode& n = tree_.node(beta);
  NodeState& ns = st(beta);
  const int od = index_of(n, OutcomeKind::D);
  const int og = index_of(n, OutcomeKind::G);
  const int ow = index_of(n, OutcomeKind::W);
  Act a;

  if (!ns.witness) {
    ns.witness = world_.witness_source.fresh();
    witnesses_.insert(*ns.witness);
  }
  if (sink_ != nullptr) a.note = "x=" + num(*ns.witness);
  if (ns.diagonalized) {
    a.outcome = od;
    return a;
  }

  sweep_claims(beta);

  const Computation* psi = psi_of(beta);
  if (psi == nullptr || psi->output != 0 || !believable(beta, *psi)) {
    ns.believed = false;
    a.outcome = ow;
    return a;
  }
  if (!ns.believed) {
    ns.believed = true;
    initialize_where([&](NodeId id) { return tree_.extends(id, beta, ow); });
  }

  const Nat x = *ns.witness;
  const Nat y = smp::clearing_point(tree_, *this, beta);
  if (y > x) violation(ViolationKind::ClearingPoint, beta, "y=" + num(y) + " x=" + num(x));
  ns.clearing = y;
  if (sink_ != nullptr) a.note += " psi_use=" + num(psi->use) + " y=" + num(y);

  const auto& active = tree_.active_R(beta);
  const bool blocked = std::any_of(active.begin(), active.end(), [&](NodeId alpha) {
    auto m = gamma_marker(alpha, y);
    return m && *m < psi->use;
  });

  if (!blocked) {
    const auto& pairs = n.pairs;
    for (auto it = pairs.rbegin(); it != pairs.rend(); ++it) {
      const NodeId bp = it->node;
      const NodeId fam = tree_.node(bp).family;
      const Computation* other = psi_of(fam);
      if (other == nullptr) continue;
      const int fam_depth = tree_.node(fam).depth;
      const bool conflict = std::any_of(active.begin(), active.end(), [&](NodeId alpha) {
        if (tree_.node(alpha).depth >= fam_depth) return false;
        auto m = gamma_marker(alpha, x);
        return m && *m < other->use;
      });
      if (!conflict) continue;

      const Nat z = smp::claim_point(tree_, *this, beta, bp);
      const auto kp = killing_point(tree_, *this, bp);
      NodeState& cs = st(bp);
      if (cs.claim) {
        Claim& old = claims_[static_cast<std::size_t>(*cs.claim)];
        old.live = false;
        live_claims_.erase(old.id);
      }
      Claim c;
      c.id = static_cast<int>(claims_.size());
      c.child = bp;
      c.z = z;
      c.stage = rec_.s;
      c.initiator = beta;
      c.initiator_epoch = st(beta).epoch;
      c.killing_point = kp.value_or(0);
      c.snapshot = *psi;
      if (kp && z <= *kp) violation(ViolationKind::ClaimPoint, bp, "z=" + num(z) + " kp=" + num(*kp));
      cs.claim = c.id;
      live_claims_.insert(c.id);
      emit("claim_init", bp,
           "z=" + num(z) + " kp=" + (kp ? num(*kp) : std::string("-")) + " initiator=" + path_of(beta) +
               " x=" + num(x));
      claims_.push_back(std::move(c));
      Act j;
      j.kind = Act::Kind::Jump;
      j.target = bp;
      j.outcome = index_of(tree_.node(bp), OutcomeKind::C);
      if (sink_ != nullptr) j.note = "z=" + num(z);
      return j;
    }
    if (rec_.parity == Parity::A) {
      diagonalize(beta);
      a.kind = Act::Kind::EndStage;
      return a;
    }
    PendingAction pa;
    pa.kind = PendingKind::Diagonalize;
    pa.node = beta;
    pa.path = path_;
    terminate(std::move(pa));
    a.kind = Act::Kind::Terminate;
    return a;
  }

  // Left switch: a child whose blocking R-node moved strictly left of the
  // g_alpha it last took gets a direct link.
  NodeId best = kNoNode;
  for (NodeId c : tree_.family(beta)) {
    const NodeState& cs = state(c);
    if (cs.fresh || cs.last_outcome < 0) continue;
    const TreeNode& cn = tree_.node(c);
    if (cn.outcomes[static_cast<std::size_t>(cs.last_outcome)].kind != OutcomeKind::GAlpha) continue;
    const auto kp = killing_point(tree_, *this, c);
    if (!kp) continue;
    const auto b = blocking_outcome(c, *kp);
    if (!b || *b >= cs.last_outcome) continue;
    if (best == kNoNode || tree_.is_ancestor(c, best) || tree_.left_of(c, best)) best = c;
  }
  if (best != kNoNode) {
    emit("link", beta, "to=" + path_of(best) + " kind=parent");
    Act j;
    j.kind = Act::Kind::Jump;
    j.target = best;
    return j;
  }
  a.outcome = og;
  return a;
}

Engine::Act Engine::act_S_child(NodeId child) {
  const TreeNode& n = tree_.node(child);
  NodeState& ns = st(child);
  const int oc = index_of(n, OutcomeKind::C);
  Act a;

  if (ns.last_outcome == oc && ns.claim) {
    Claim& cl = claims_[static_cast<std::size_t>(*ns.claim)];
    if (cl.live && claim_true(cl)) {
      a.outcome = oc;
      if (sink_ != nullptr) a.note = "z=" + num(cl.z);
      return a;
    }
    if (cl.live) falsify(cl);
    st(child).claim.reset();
    const NodeId ini = cl.initiator;
    const NodeState& is = state(ini);
    if (!is.fresh && is.epoch == cl.initiator_epoch) {
      const Computation* now = psi_of(ini);
      if (now == nullptr || !(*now == cl.snapshot)) {
        violation(ViolationKind::LinkSnapshot, ini, "claim=" + std::to_string(cl.id));
      }
      emit("link", child, "to=" + path_of(ini) + " kind=child");
      Act j;
      j.kind = Act::Kind::Jump;
      j.target = ini;
      return j;
    }
  }

  NodeState& cs = st(child);
  const auto kp = killing_point(tree_, *this, child);
  cs.killing = kp;
  const auto b = kp ? blocking_outcome(child, *kp) : std::nullopt;
  if (!b) {
    violation(ViolationKind::ChildUnblocked, child, "kp=" + (kp ? num(*kp) : std::string("-")));
    a.outcome = oc > 0 ? oc - 1 : oc;
    return a;
  }
  a.outcome = *b;
  a.child_gap = true;
  a.killing_point = *kp;
  if (sink_ != nullptr) a.note = "kp=" + num(*kp);
  return a;
}

bool Engine::child_gap(NodeId child, int outcome, Nat kp) {
  const OutcomeLabel& l = tree_.node(child).outcomes[static_cast<std::size_t>(outcome)];
  const int req = tree_.node(l.alpha).req;
  const GammaTable* t = world_.gamma.find(l.alpha);
  const AxiomRecord* ax = t == nullptr ? nullptr : t->current(kp);
  if (ax == nullptr || !ax->live()) return false;
  NodeState& cs = st(child);
  auto [it, inserted] = cs.deltas.try_emplace(outcome);
  DeltaTable& d = it->second;
  if (inserted) {
    d.owner = child;
    d.alpha = l.alpha;
    d.requirement = req;
  }
  d.extend_to(ax->axiom.w_use, world_.w(req));
  if (rec_.parity != Parity::B) return false;
  enumerate(Oracle::B, ax->axiom.marker(), child);
  auto& g = gap_enums_[child];
  ++g.first;
  g.second = rec_.s;
  return true;
}

void Engine::sweep_claims(NodeId beta) {
  const std::vector<int> ids(live_claims_.begin(), live_claims_.end());
  for (int id : ids) {
    Claim& c = claims_[static_cast<std::size_t>(id)];
    if (!c.live || !tree_.is_ancestor(beta, c.child)) continue;
    if (!claim_true(c)) falsify(c);
  }
}

void Engine::falsify(Claim& c) {
  c.live = false;
  c.falsified = true;
  live_claims_.erase(c.id);
  emit("claim_false", c.child, "z=" + num(c.z) + " initiator=" + path_of(c.initiator));
  const NodeId ch = c.child;
  const int oc = index_of(tree_.node(ch), OutcomeKind::C);
  std::vector<Step> edge = tree_.node(ch).trail;
  edge.push_back({ch, oc});
  initialize_where([&](NodeId id) { return tree_.extends(id, ch, oc) || tree_.right_of_path(id, edge); });
}

// ---------------------------------------------------------------- initialization

template <class Pred>
void Engine::initialize_where(Pred pred) {
  std::vector<NodeId> victims;
  for (NodeId id : dirty_) {
    if (pred(id)) victims.push_back(id);
  }
  for (NodeId id : victims) initialize(id);
}

void Engine::initialize(NodeId id) {
  NodeState& ns = st(id);
  emit("init", id);
  ++ns.epoch;
  ns.fresh = true;
  ns.last_outcome = -1;
  std::fill(ns.last_parity.begin(), ns.last_parity.end(), std::int8_t{-1});
  ns.last_i_loa.reset();
  if (ns.witness) witnesses_.erase(*ns.witness);
  ns.witness.reset();
  ns.diagonalized = false;
  ns.clearing.reset();
  ns.believed = false;
  if (ns.claim) {
    Claim& c = claims_[static_cast<std::size_t>(*ns.claim)];
    c.live = false;
    live_claims_.erase(c.id);
    ns.claim.reset();
  }
  ns.killing.reset();
  for (auto& [o, d] : ns.deltas) retired_deltas_.push_back(std::move(d));
  ns.deltas.clear();
  dirty_.erase(id);
}

}  // namespace smp
