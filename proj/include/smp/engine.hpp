#pragma once

// The stage loop: accessible path, node actions for R-nodes, S-parents and
// S-children, links, terminated stages and their resumption, initialization,
// Gamma/Delta maintenance and correction requests.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "smp/adversary.hpp"
#include "smp/core.hpp"
#include "smp/tree.hpp"

namespace smp {

// ---------------------------------------------------------------- tracing

struct TraceEvent {
  Stage s = 0;
  Parity parity = Parity::A;
  std::string kind;
  std::string node;  // path string or "-"
  std::string details;
  /// `s=.. parity=.. kind=.. node=.. <details>`
  std::string line() const;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void emit(const TraceEvent& e) = 0;
};

// ---------------------------------------------------------------- violations

enum class ViolationKind : std::uint8_t {
  StageDiscipline,
  WellDefinedness,
  RetirementCertificate,
  DiagonalizationPreservation,
  LinkSnapshot,
  ClaimUniqueness,
  TerminatedDichotomy,
  DeltaAgreement,
  ClaimPoint,
  ClearingPoint,
  ChildUnblocked,
  ActionCap,
  ComputationIntegrity,
  PermanentWin,
};

std::string_view to_string(ViolationKind k) noexcept;

struct Violation {
  ViolationKind kind = ViolationKind::StageDiscipline;
  Stage stage = 0;
  std::string node;
  std::string details;
};

// ---------------------------------------------------------------- node state

struct Claim {
  int id = -1;
  NodeId child = kNoNode;      // the S-child whose c-outcome carries the claim
  Nat z = 0;                   // claim point
  Stage stage = 0;             // initiation stage
  NodeId initiator = kNoNode;  // S-parent that initiated it
  std::uint64_t initiator_epoch = 0;
  Nat killing_point = 0;       // child's killing point at initiation
  /// Initiator's Psi(B;x) computation at initiation.
  Computation snapshot;
  bool live = true;
  bool falsified = false;
};

struct CorrectionRequest {
  NodeId r_node = kNoNode;
  Nat x = 0;
  Nat marker = 0;
  NodeId requester = kNoNode;
  Stage issued = 0;
  AxiomRef axiom;
};

enum class PendingKind : std::uint8_t { None, Diagonalize, ExecRequest, TakeOutcome };

std::string_view to_string(PendingKind k) noexcept;

struct PendingAction {
  PendingKind kind = PendingKind::None;
  NodeId node = kNoNode;
  int outcome = -1;
  /// TakeOutcome at an S-child g_alpha: redo the Delta extension and, at a
  /// B-stage, the marker enumeration.
  bool child_gap = false;
  Nat killing_point = 0;
  /// Accessible path up to (not including) the pending node's edge.
  std::vector<Step> path;
  Seq seq = 0;  // world sequence number at termination
};

struct NodeState {
  bool fresh = true;
  std::uint64_t epoch = 0;
  int last_outcome = -1;
  Stage last_visit = 0;
  /// Parity of the last stage at which each outcome was accessible.
  std::vector<std::int8_t> last_parity;

  // R-node
  std::optional<Nat> last_i_loa;
  Nat last_loa = 0;
  std::deque<CorrectionRequest> requests;

  // S-parent
  std::optional<Nat> witness;
  bool diagonalized = false;
  std::optional<Nat> clearing;
  bool believed = false;

  // S-child
  std::optional<int> claim;  // claim carried by the c-outcome
  std::optional<Nat> killing;
  std::map<int, DeltaTable> deltas;  // per g_alpha outcome
};

struct DiagRecord {
  NodeId node = kNoNode;
  std::uint64_t epoch = 0;
  Nat x = 0;
  Nat psi_use = 0;
  Stage stage = 0;
};

struct PermanentWin {
  NodeId node = kNoNode;
  std::uint64_t epoch = 0;
  Nat x = 0;
  Stage stage = 0;
  bool valid_at_record = false;
};

// ---------------------------------------------------------------- stage record

struct StageRecord {
  Stage s = 0;
  Parity parity = Parity::A;
  std::vector<Step> path;
  std::vector<NodeId> visited;
  std::vector<std::pair<Oracle, Nat>> enumerations;
  std::vector<std::pair<int, Nat>> w_adds;
  bool terminated = false;
  PendingKind pending = PendingKind::None;
  bool resumed = false;
  bool resumed_switch = false;
  bool resumed_executed = false;
  NodeId switch_node = kNoNode;
  std::vector<Violation> violations;
  std::uint64_t hash = 0;
};

struct EngineConfig {
  std::vector<int> r_indices;
  std::vector<int> s_indices;
  std::vector<int> w_indices;
  Nat fresh_seed = 0;
  /// Node actions per stage before the stage is cut off.
  std::size_t action_cap = 100000;
};

class Engine final : private PointView {
 public:
  Engine(EngineConfig cfg, std::unique_ptr<Adversary> adversary);

  void set_sink(TraceSink* sink) noexcept { sink_ = sink; }

  /// Runs the current stage of the world clock and advances it.
  const StageRecord& run_stage();

  const World& world() const noexcept { return world_; }
  const Tree& tree() const noexcept { return tree_; }
  const NodeState& state(NodeId id) const { return states_.at(static_cast<std::size_t>(id)); }
  /// States exist for nodes 0 .. state_count()-1; the tree may hold more.
  std::size_t state_count() const noexcept { return states_.size(); }
  const std::vector<Claim>& claims() const noexcept { return claims_; }
  const std::set<int>& live_claims() const noexcept { return live_claims_; }
  const std::vector<DiagRecord>& diagonalizations() const noexcept { return diags_; }
  const std::vector<PermanentWin>& permanent_wins() const noexcept { return wins_; }
  const std::vector<DeltaTable>& retired_deltas() const noexcept { return retired_deltas_; }
  const std::optional<PendingAction>& pending() const noexcept { return pending_; }
  const StageRecord& last() const noexcept { return rec_; }

  /// Stage at which (node, outcome) was last accessible, never reset by initialization.
  std::optional<Stage> last_access(NodeId id, int outcome) const;
  std::uint64_t access_count(NodeId id, int outcome) const;
  bool ever_visited(NodeId id) const;
  /// Marker enumerations performed by an S-child, total.
  std::uint64_t gap_enumerations(NodeId child) const;
  /// Stage of the last marker enumeration performed by an S-child.
  std::optional<Stage> last_gap_enumeration(NodeId child) const;

  /// Truth of the claim's predicate in the current state.
  bool claim_true(const Claim& c) const;

  // PointView
  std::optional<Nat> live_claim_point(NodeId child) const override;
  std::optional<Nat> clearing_point(NodeId parent) const override;
  std::optional<Nat> witness(NodeId parent) const override;

 private:
  struct Act {
    enum class Kind : std::uint8_t { Outcome, EndStage, Terminate, Jump } kind = Kind::Outcome;
    int outcome = -1;
    NodeId target = kNoNode;  // Jump: node to continue at (through `outcome` if >= 0)
    bool child_gap = false;
    Nat killing_point = 0;
    Nat loa = 0;
    std::string note;  // extra trace details for the outcome event
  };

  struct Access {
    Stage last = 0;
    std::uint64_t count = 0;
  };

  EngineConfig cfg_;
  World world_;
  Tree tree_;
  std::unique_ptr<Adversary> adversary_;
  TraceSink* sink_ = nullptr;

  std::vector<NodeState> states_;
  std::vector<std::vector<Access>> access_;
  std::vector<bool> ever_visited_;
  std::map<NodeId, std::pair<std::uint64_t, Stage>> gap_enums_;
  std::set<NodeId> dirty_;
  std::set<Nat> witnesses_;
  std::vector<Claim> claims_;
  std::set<int> live_claims_;
  std::vector<DiagRecord> diags_;
  std::vector<PermanentWin> wins_;
  std::vector<DeltaTable> retired_deltas_;
  std::optional<PendingAction> pending_;

  StageRecord rec_;
  std::vector<Step> path_;
  std::size_t actions_ = 0;

  NodeState& st(NodeId id);
  void sync_states();
  void emit(std::string_view kind, NodeId node, std::string details = {});
  void emit_path(std::string_view kind, const std::string& node, std::string details = {});
  void violation(ViolationKind kind, NodeId node, std::string details);
  std::string path_of(NodeId id) const;

  void walk(NodeId start);
  void resume();
  void finish_stage();

  /// Alternation rule; false means the stage terminated with a pending TakeOutcome.
  bool take(NodeId node, int outcome, const Act& act);
  /// Effects of an outcome once it is taken. Returns true if the stage ended.
  bool after_take(NodeId node, int outcome, const Act& act);
  void terminate(PendingAction p);

  Act act(NodeId node);
  Act act_R(NodeId alpha);
  Act act_S_parent(NodeId beta);
  Act act_S_child(NodeId child);

  bool process_requests(NodeId alpha);
  void maintain_gamma(NodeId alpha, Nat loa);
  bool execute_request(NodeId alpha, const CorrectionRequest& r);
  void diagonalize(NodeId beta);
  bool child_gap(NodeId child, int outcome, Nat kp);

  const Computation* psi_of(NodeId parent) const;
  std::optional<Nat> gamma_marker(NodeId alpha, Nat x) const;
  /// Lowest-priority R among the child's g_alpha outcomes whose marker at kp
  /// would injure the parent's computation; returns the outcome index.
  std::optional<int> blocking_outcome(NodeId child, Nat kp) const;
  bool believable(NodeId beta, const Computation& psi) const;
  void sweep_claims(NodeId beta);
  void falsify(Claim& c);

  void initialize(NodeId id);
  template <class Pred>
  void initialize_where(Pred pred);
  bool enumerate(Oracle o, Nat n, NodeId by);
};

}  // namespace smp
