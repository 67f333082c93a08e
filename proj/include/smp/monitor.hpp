#pragma once

// Post-stage invariant checks, the true-path approximation and the
// per-requirement satisfaction report.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "smp/engine.hpp"
#include "smp/tree.hpp"

namespace smp {

enum class SatisfactionMode : std::uint8_t {
  // S-requirements
  WaitSigma2,
  DiagonalizedSigma2,
  GapSigma3,
  AllChildrenCPi3,
  // R-requirements
  FiniteWin,
  GammaMaintained,
  DeltaBuilt,
  // Not represented on the approximate true path, or not classifiable there.
  Unresolved,
};

std::string_view to_string(SatisfactionMode m) noexcept;

struct RequirementReport {
  Requirement req;
  NodeId node = kNoNode;
  SatisfactionMode mode = SatisfactionMode::Unresolved;
  std::string evidence;
};

struct SatisfactionReport {
  Stage stages = 0;
  Stage window_start = 0;
  /// Approximate true path, cut before a frontier child that is being replaced.
  std::string true_path;
  std::vector<RequirementReport> entries;

  const RequirementReport* find(Requirement r) const;
  /// One `R1 Delta-built <evidence>` line per requirement.
  std::string text() const;
};

class Monitor {
 public:
  /// `window` is the trailing fraction of stages read as "cofinally".
  explicit Monitor(const Engine& engine, double window = 0.5);

  /// Checks the stage the engine just completed. Returns the violations found
  /// by this check; the engine's own findings are collected in violations().
  std::vector<Violation> check_stage(const StageRecord& rec);

  const std::vector<Violation>& violations() const noexcept { return all_; }
  Stage stages() const noexcept { return static_cast<Stage>(paths_.size()); }

  /// First stage of the trailing window ending before stage s.
  Stage window_start(Stage s) const;
  /// Leftmost path whose every edge was accessible at some stage of the
  /// trailing window before stage s.
  std::vector<Step> true_path_approx(Stage s) const;
  SatisfactionReport report() const;

 private:
  const Engine& engine_;
  double window_;
  std::vector<Violation> all_;

  // Per completed stage.
  std::vector<std::vector<Step>> paths_;
  std::vector<NodeId> gap_child_;  // S-child that enumerated a marker, or kNoNode

  bool prev_terminated_ = false;
  std::map<int, std::size_t> gamma_seen_;                // owner -> axioms checked
  std::map<std::pair<int, Nat>, std::vector<std::size_t>> gamma_by_x_;
  std::size_t diags_seen_ = 0;
  std::vector<std::size_t> protected_;                   // indices into diagonalizations()
  std::size_t wins_seen_ = 0;
  std::vector<std::size_t> wins_;                        // indices into permanent_wins()
  std::map<std::pair<NodeId, int>, Nat> delta_checked_;  // agreement checked below this bound

  void add(std::vector<Violation>& out, ViolationKind kind, Stage s, NodeId node, std::string details) const;
  void check_discipline(const StageRecord& rec, std::vector<Violation>& out) const;
  void check_computations(const StageRecord& rec, std::vector<Violation>& out) const;
  void check_retirements(const StageRecord& rec, std::vector<Violation>& out) const;
  void check_gamma(const StageRecord& rec, std::vector<Violation>& out);
  void check_diagonalizations(const StageRecord& rec, std::vector<Violation>& out);
  void check_claims(const StageRecord& rec, std::vector<Violation>& out) const;
  void check_deltas(const StageRecord& rec, std::vector<Violation>& out);
  void check_wins(const StageRecord& rec, std::vector<Violation>& out);

  struct Window {
    Stage from = 0;
    Stage to = 0;
    std::map<std::pair<NodeId, int>, Stage> last;  // last access inside the window
    NodeId frontier = kNoNode;
  };

  RequirementReport classify_S(NodeId beta, int outcome, const std::vector<Step>& path, const Window& win) const;
  RequirementReport classify_R(NodeId alpha, int outcome, const std::vector<Step>& path) const;
};

}  // namespace smp
