#include "smp/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smp {

namespace {

std::string label(Requirement r) {
  return (r.kind == Requirement::Kind::R ? "R" : "S") + std::to_string(r.index);
}

std::string num(Nat n) { return n == kInfinity ? "inf" : std::to_string(n); }

}  // namespace

std::string_view to_string(SatisfactionMode m) noexcept {
  switch (m) {
    case SatisfactionMode::WaitSigma2:
      return "wait-Sigma2";
    case SatisfactionMode::DiagonalizedSigma2:
      return "diagonalized-Sigma2";
    case SatisfactionMode::GapSigma3:
      return "gap-Sigma3";
    case SatisfactionMode::AllChildrenCPi3:
      return "all-children-c-Pi3";
    case SatisfactionMode::FiniteWin:
      return "f-finite-win";
    case SatisfactionMode::GammaMaintained:
      return "Gamma-maintained";
    case SatisfactionMode::DeltaBuilt:
      return "Delta-built";
    case SatisfactionMode::Unresolved:
      return "unresolved";
  }
  return "?";
}

const RequirementReport* SatisfactionReport::find(Requirement r) const {
  for (const auto& e : entries) {
    if (e.req == r) return &e;
  }
  return nullptr;
}

std::string SatisfactionReport::text() const {
  std::ostringstream out;
  out << "stages=" << stages << " window_start=" << window_start << " true_path=" << true_path << '\n';
  for (const auto& e : entries) {
    out << label(e.req) << ' ' << to_string(e.mode);
    if (!e.evidence.empty()) out << ' ' << e.evidence;
    out << '\n';
  }
  return out.str();
}

Monitor::Monitor(const Engine& engine, double window) : engine_(engine), window_(window) {}

void Monitor::add(std::vector<Violation>& out, ViolationKind kind, Stage s, NodeId node, std::string details) const {
  out.push_back({kind, s, node == kNoNode ? "-" : engine_.tree().node(node).path, std::move(details)});
}

std::vector<Violation> Monitor::check_stage(const StageRecord& rec) {
  std::vector<Violation> out;
  check_discipline(rec, out);
  check_computations(rec, out);
  check_retirements(rec, out);
  check_gamma(rec, out);
  check_diagonalizations(rec, out);
  check_claims(rec, out);
  check_deltas(rec, out);
  check_wins(rec, out);

  if (prev_terminated_ && !rec.resumed_switch && !rec.resumed_executed) {
    add(out, ViolationKind::TerminatedDichotomy, rec.s, kNoNode, "pending action neither executed nor switched away");
  }
  prev_terminated_ = rec.terminated;

  paths_.push_back(rec.path);
  NodeId gap = kNoNode;
  if (rec.parity == Parity::B && !rec.enumerations.empty() && !rec.path.empty() &&
      engine_.tree().node(rec.path.back().node).kind == NodeKind::SChild) {
    gap = rec.path.back().node;
  }
  gap_child_.push_back(gap);

  all_.insert(all_.end(), rec.violations.begin(), rec.violations.end());
  all_.insert(all_.end(), out.begin(), out.end());
  return out;
}

void Monitor::check_discipline(const StageRecord& rec, std::vector<Violation>& out) const {
  if (rec.enumerations.size() > 1) {
    add(out, ViolationKind::StageDiscipline, rec.s, kNoNode, "enumerations=" + std::to_string(rec.enumerations.size()));
  }
  for (const auto& [o, n] : rec.enumerations) {
    const Oracle allowed = rec.parity == Parity::A ? Oracle::A : Oracle::B;
    const char* name = o == Oracle::A ? "A" : "B";
    if (o != allowed) {
      add(out, ViolationKind::StageDiscipline, rec.s, kNoNode,
          std::string("set=") + name + " n=" + num(n) + " parity=" + std::string(to_string(rec.parity)));
    }
    const auto e = engine_.world().set(o).entry(n);
    if (!e || e->stage != rec.s) {
      add(out, ViolationKind::StageDiscipline, rec.s, kNoNode, std::string("set=") + name + " n=" + num(n) + " not recorded");
    }
  }
}

void Monitor::check_computations(const StageRecord& rec, std::vector<Violation>& out) const {
  const World& w = engine_.world();
  for (const auto& [o, n] : rec.enumerations) {
    const auto e = w.set(o).entry(n);
    if (!e) continue;
    for (const auto& [key, c] : w.computations().all()) {
      if (oracle_of(key.kind) != o || c.use <= n || c.born_seq > e->seq) continue;
      add(out, ViolationKind::ComputationIntegrity, rec.s, kNoNode,
          std::string(to_string(key.kind)) + " i=" + std::to_string(key.index) + " x=" + num(key.x) +
              " use=" + num(c.use) + " survived n=" + num(n));
    }
  }
}

void Monitor::check_retirements(const StageRecord& rec, std::vector<Violation>& out) const {
  const World& w = engine_.world();
  for (const AxiomRef& ref : w.retired()) {
    const AxiomRecord& r = w.gamma.record(ref);
    const FunctionalAxiom& ax = r.axiom;
    bool ok = false;
    if (r.broken == BreakCause::B) {
      const auto e = w.b().entry(r.broken_by);
      ok = r.broken_by < ax.b_use && e && e->seq > ax.def_seq;
    } else if (r.broken == BreakCause::W) {
      const auto e = w.w(ax.requirement).entry(r.broken_by);
      ok = r.broken_by < ax.w_use && e && e->seq > ax.def_seq;
    }
    if (!ok) {
      add(out, ViolationKind::RetirementCertificate, rec.s, ax.owner,
          "x=" + num(ax.x) + " b_use=" + num(ax.b_use) + " w_use=" + num(ax.w_use) + " by=" + num(r.broken_by));
    }
  }
}

void Monitor::check_gamma(const StageRecord& rec, std::vector<Violation>& out) {
  const World& w = engine_.world();
  for (const auto& [owner, table] : w.gamma.tables()) {
    const auto& hist = table.history();
    std::size_t& seen = gamma_seen_[owner];
    for (; seen < hist.size(); ++seen) {
      const FunctionalAxiom& ax = hist[seen].axiom;
      // Correct on its domain: the value is A(x) as of definition.
      const auto e = w.a().entry(ax.x);
      const int truth = e && e->seq <= ax.def_seq ? 1 : 0;
      if (ax.output != truth) {
        add(out, ViolationKind::WellDefinedness, rec.s, owner,
            "x=" + num(ax.x) + " output=" + std::to_string(ax.output) + " A=" + std::to_string(truth));
      }
      auto& same_x = gamma_by_x_[{owner, ax.x}];
      for (std::size_t j : same_x) {
        const AxiomRecord& other = hist[j];
        if (other.live() && hist[seen].live() && other.axiom.output != ax.output) {
          add(out, ViolationKind::WellDefinedness, rec.s, owner, "x=" + num(ax.x) + " two applicable axioms disagree");
        }
      }
      same_x.push_back(seen);
    }
  }
}

void Monitor::check_diagonalizations(const StageRecord& rec, std::vector<Violation>& out) {
  const auto& diags = engine_.diagonalizations();
  std::erase_if(protected_, [&](std::size_t k) {
    const NodeState& ns = engine_.state(diags[k].node);
    return ns.epoch != diags[k].epoch || !ns.diagonalized;
  });
  for (std::size_t k : protected_) {
    const DiagRecord& d = diags[k];
    for (const auto& [o, n] : rec.enumerations) {
      if (o == Oracle::B && n < d.psi_use && d.stage < rec.s) {
        add(out, ViolationKind::DiagonalizationPreservation, rec.s, d.node,
            "x=" + num(d.x) + " psi_use=" + num(d.psi_use) + " b=" + num(n));
      }
    }
  }
  for (; diags_seen_ < diags.size(); ++diags_seen_) {
    const DiagRecord& d = diags[diags_seen_];
    const NodeState& ns = engine_.state(d.node);
    if (ns.epoch == d.epoch && ns.diagonalized) protected_.push_back(diags_seen_);
  }
}

void Monitor::check_claims(const StageRecord& rec, std::vector<Violation>& out) const {
  const Tree& tree = engine_.tree();
  std::map<NodeId, int> skipped_by;
  for (int id : engine_.live_claims()) {
    const Claim& c = engine_.claims()[static_cast<std::size_t>(id)];
    if (!engine_.claim_true(c)) continue;
    const auto& trail = tree.node(c.initiator).trail;
    const auto from = static_cast<std::size_t>(tree.node(c.child).depth) + 1;
    for (std::size_t k = from; k < trail.size(); ++k) {
      if (++skipped_by[trail[k].node] == 2) {
        add(out, ViolationKind::ClaimUniqueness, rec.s, trail[k].node, "claim=" + std::to_string(id));
      }
    }
  }
}

void Monitor::check_deltas(const StageRecord& rec, std::vector<Violation>& out) {
  const Tree& tree = engine_.tree();
  const World& w = engine_.world();
  for (const Step& stp : rec.path) {
    if (tree.node(stp.node).kind != NodeKind::SChild) continue;
    const NodeState& ns = engine_.state(stp.node);
    for (const auto& [o, d] : ns.deltas) {
      Nat& checked = delta_checked_[{stp.node, o}];
      if (checked > d.domain_bound) checked = 0;
      const SetState& ws = w.w(d.requirement);
      for (auto it = d.entries.lower_bound(checked); it != d.entries.end(); ++it) {
        if (it->second != (ws.contains(it->first) ? 1 : 0) && !d.injured_at(it->first)) {
          add(out, ViolationKind::DeltaAgreement, rec.s, stp.node, "n=" + num(it->first));
        }
      }
      checked = d.domain_bound;
    }
  }
  if (rec.w_adds.empty()) return;
  for (NodeId id = 0; static_cast<std::size_t>(id) < tree.size(); ++id) {
    if (tree.node(id).kind != NodeKind::SChild) continue;
    for (const auto& [o, d] : engine_.state(id).deltas) {
      for (const auto& [i, n] : rec.w_adds) {
        if (i != d.requirement) continue;
        auto it = d.entries.find(n);
        if (it == d.entries.end() || it->second != 0) continue;
        const bool logged = std::find(d.injury_log.begin(), d.injury_log.end(), std::pair<Stage, Nat>{rec.s, n}) !=
                            d.injury_log.end();
        const bool disturbed = std::find(rec.path.begin(), rec.path.end(), Step{id, o}) == rec.path.end();
        if (!logged || !disturbed) {
          add(out, ViolationKind::DeltaAgreement, rec.s, id,
              "n=" + num(n) + (logged ? " injured while accessible" : " injury not logged"));
        }
      }
    }
  }
}

void Monitor::check_wins(const StageRecord& rec, std::vector<Violation>& out) {
  const auto& wins = engine_.permanent_wins();
  const World& w = engine_.world();
  std::erase_if(wins_, [&](std::size_t k) { return engine_.state(wins[k].node).epoch != wins[k].epoch; });
  for (std::size_t k : wins_) {
    const PermanentWin& win = wins[k];
    const int i = engine_.tree().node(win.node).req;
    const Computation* c = w.computations().find(CompKey{MachineKind::Phi, i, win.x});
    if (c == nullptr || c->output != 0 || !w.w(i).contains(win.x)) {
      add(out, ViolationKind::PermanentWin, rec.s, win.node, "x=" + num(win.x) + " recorded=" + std::to_string(win.stage));
    }
  }
  // Only wins that held when recorded are tracked; a violation is reported once.
  std::erase_if(wins_, [&](std::size_t k) {
    const PermanentWin& win = wins[k];
    const int i = engine_.tree().node(win.node).req;
    const Computation* c = w.computations().find(CompKey{MachineKind::Phi, i, win.x});
    return c == nullptr || c->output != 0;
  });
  for (; wins_seen_ < wins.size(); ++wins_seen_) {
    if (wins[wins_seen_].valid_at_record) wins_.push_back(wins_seen_);
  }
}

// ---------------------------------------------------------------- true path

Stage Monitor::window_start(Stage s) const {
  s = std::min<Stage>(s, stages());
  const auto len = static_cast<Stage>(std::ceil(static_cast<double>(s) * window_));
  return s - std::min(s, std::max<Stage>(len, 1));
}

std::vector<Step> Monitor::true_path_approx(Stage s) const {
  s = std::min<Stage>(s, stages());
  std::map<NodeId, int> leftmost;
  for (Stage t = window_start(s); t < s; ++t) {
    for (const Step& stp : paths_[t]) {
      auto [it, fresh] = leftmost.emplace(stp.node, stp.outcome);
      if (!fresh) it->second = std::min(it->second, stp.outcome);
    }
  }
  std::vector<Step> path;
  const Tree& tree = engine_.tree();
  NodeId cur = tree.root();
  while (cur != kNoNode) {
    auto it = leftmost.find(cur);
    if (it == leftmost.end()) break;
    path.push_back({cur, it->second});
    cur = tree.peek_child(cur, it->second);
    if (cur < 0) break;
  }
  return path;
}

// ---------------------------------------------------------------- report

RequirementReport Monitor::classify_S(NodeId beta, int outcome, const std::vector<Step>& path, const Window& win) const {
  const Tree& tree = engine_.tree();
  const TreeNode& n = tree.node(beta);
  const NodeState& ns = engine_.state(beta);
  RequirementReport r{{Requirement::Kind::S, n.req}, beta, SatisfactionMode::Unresolved, {}};
  const std::string wit = ns.witness ? num(*ns.witness) : "none";
  switch (n.outcomes[static_cast<std::size_t>(outcome)].kind) {
    case OutcomeKind::D: {
      r.mode = SatisfactionMode::DiagonalizedSigma2;
      r.evidence = "witness=" + wit;
      for (const DiagRecord& d : engine_.diagonalizations()) {
        if (d.node == beta && d.epoch == ns.epoch) r.evidence += " stage=" + std::to_string(d.stage);
      }
      return r;
    }
    case OutcomeKind::W:
      r.mode = SatisfactionMode::WaitSigma2;
      r.evidence = "witness=" + wit;
      return r;
    case OutcomeKind::G:
      break;
    default:
      return r;
  }

  std::vector<Step> children;
  for (const Step& stp : path) {
    if (tree.node(stp.node).kind == NodeKind::SChild && tree.node(stp.node).family == beta) children.push_back(stp);
  }
  if (children.empty()) {
    r.evidence = "no child on the approximate path";
    return r;
  }
  const Step last = children.back();
  const TreeNode& ln = tree.node(last.node);
  const OutcomeLabel& lo = ln.outcomes[static_cast<std::size_t>(last.outcome)];
  const int c_index = ln.outcome_index(OutcomeKind::C);
  std::size_t c_children = children.size();
  if (lo.kind == OutcomeKind::GAlpha) {
    --c_children;
    if (!win.last.contains({last.node, c_index})) {
      const auto enums = std::count(gap_child_.begin() + static_cast<std::ptrdiff_t>(win.from),
                                    gap_child_.begin() + static_cast<std::ptrdiff_t>(win.to), last.node);
      if (enums == 0) {
        r.evidence = "child=" + ln.label + " holds " + lo.token() + " without enumerating";
        return r;
      }
      r.mode = SatisfactionMode::GapSigma3;
      r.evidence = "child=" + ln.label + " outcome=" + lo.token() + " enumerations=" + std::to_string(enums) +
                   " total=" + std::to_string(engine_.gap_enumerations(last.node));
      return r;
    }
  }
  // Every child that settled takes c; the points must climb along the path.
  std::string zs;
  std::optional<Nat> prev;
  for (std::size_t k = 0; k < c_children; ++k) {
    const NodeState& cs = engine_.state(children[k].node);
    if (!cs.claim) {
      r.evidence = "child=" + tree.node(children[k].node).label + " has no claim";
      return r;
    }
    const Nat z = engine_.claims()[static_cast<std::size_t>(*cs.claim)].z;
    if (prev && z <= *prev) {
      r.evidence = "claim points not increasing at " + tree.node(children[k].node).label;
      return r;
    }
    prev = z;
    zs += (zs.empty() ? "" : ",") + num(z);
  }
  if (c_children == 0) {
    r.evidence = "no settled child";
    return r;
  }
  r.mode = SatisfactionMode::AllChildrenCPi3;
  r.evidence = "children=" + std::to_string(c_children) + " z=" + zs;
  if (win.frontier != kNoNode && tree.node(win.frontier).family == beta) {
    r.evidence += " frontier=" + tree.node(win.frontier).label;
  }
  return r;
}

RequirementReport Monitor::classify_R(NodeId alpha, int outcome, const std::vector<Step>& path) const {
  const Tree& tree = engine_.tree();
  const TreeNode& n = tree.node(alpha);
  const NodeState& ns = engine_.state(alpha);
  RequirementReport r{{Requirement::Kind::R, n.req}, alpha, SatisfactionMode::Unresolved, {}};
  if (n.outcomes[static_cast<std::size_t>(outcome)].kind == OutcomeKind::F) {
    r.mode = SatisfactionMode::FiniteWin;
    r.evidence = "loa=" + num(ns.last_loa);
    for (const PermanentWin& w : engine_.permanent_wins()) {
      if (w.node == alpha && w.epoch == ns.epoch) {
        r.evidence += " win_x=" + num(w.x) + " valid=" + (w.valid_at_record ? "1" : "0");
      }
    }
    return r;
  }
  for (const Step& stp : path) {
    const TreeNode& c = tree.node(stp.node);
    if (c.kind != NodeKind::SChild) continue;
    const OutcomeLabel& l = c.outcomes[static_cast<std::size_t>(stp.outcome)];
    if (l.kind != OutcomeKind::GAlpha || l.alpha != alpha) continue;
    r.mode = SatisfactionMode::DeltaBuilt;
    r.evidence = "child=" + c.label;
    const auto& deltas = engine_.state(stp.node).deltas;
    if (auto it = deltas.find(stp.outcome); it != deltas.end()) {
      r.evidence += " domain=" + num(it->second.domain_bound) + " injuries=" + std::to_string(it->second.injury_log.size());
    }
  }
  if (r.mode == SatisfactionMode::DeltaBuilt) return r;
  r.mode = SatisfactionMode::GammaMaintained;
  if (const GammaTable* g = engine_.world().gamma.find(alpha)) {
    std::uint32_t churn = 0;
    for (Nat x = 0; x < g->domain(); ++x) churn = std::max(churn, g->churn(x));
    r.evidence = "domain=" + num(g->domain()) + " max_churn=" + std::to_string(churn);
  }
  return r;
}

SatisfactionReport Monitor::report() const {
  SatisfactionReport rep;
  const Stage s = stages();
  rep.stages = s;
  rep.window_start = window_start(s);
  const Tree& tree = engine_.tree();

  Window win;
  win.from = rep.window_start;
  win.to = s;
  for (Stage t = win.from; t < win.to; ++t) {
    for (const Step& stp : paths_[t]) win.last[{stp.node, stp.outcome}] = t;
  }
  // A child that left its gap outcome for c inside the window is a frontier
  // that will be replaced; the settled path stops there.
  std::vector<Step> path = true_path_approx(s);
  for (std::size_t k = 0; k < path.size(); ++k) {
    const TreeNode& n = tree.node(path[k].node);
    if (n.kind != NodeKind::SChild || n.outcomes[static_cast<std::size_t>(path[k].outcome)].kind != OutcomeKind::GAlpha) {
      continue;
    }
    auto c = win.last.find({n.id, n.outcome_index(OutcomeKind::C)});
    if (c != win.last.end() && c->second > win.last.at({path[k].node, path[k].outcome})) {
      win.frontier = n.id;
      path.resize(k);
      break;
    }
  }
  if (!path.empty()) rep.true_path = tree.edge_string(path.back().node, path.back().outcome);

  const std::vector<bool> inside = tree.enclosure(path);
  std::map<std::pair<int, int>, RequirementReport> found;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (inside[k]) continue;
    const TreeNode& n = tree.node(path[k].node);
    if (n.kind == NodeKind::R) {
      found.emplace(std::pair{0, n.req}, classify_R(n.id, path[k].outcome, path));
    } else if (n.kind == NodeKind::SParent) {
      found.emplace(std::pair{1, n.req}, classify_S(n.id, path[k].outcome, path, win));
    }
  }
  for (const Requirement& req : tree.priority()) {
    auto it = found.find({req.kind == Requirement::Kind::R ? 0 : 1, req.index});
    if (it != found.end()) {
      rep.entries.push_back(it->second);
    } else {
      rep.entries.push_back({req, kNoNode, SatisfactionMode::Unresolved, "not on the settled path"});
    }
  }
  return rep;
}

}  // namespace smp
