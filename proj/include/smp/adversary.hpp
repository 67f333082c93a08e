#pragma once

// Opponent side of every requirement: the W_i, Phi_i and Psi_i enumerations,
// either replayed from a script, maintained by built-in tracking rules, or
// drawn from a seeded generator.

#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "smp/core.hpp"

namespace smp {

struct WAdd {
  int i = 0;
  Nat n = 0;
  bool operator==(const WAdd&) const = default;
};

struct Converge {
  MachineKind kind = MachineKind::Phi;
  int i = 0;
  Nat x = 0;
  Nat use = 0;
  int out = 0;
  bool operator==(const Converge&) const = default;
};

struct AdversaryEvent {
  Stage at = 0;
  std::variant<WAdd, Converge> payload;
  bool operator==(const AdversaryEvent&) const = default;
};

/// `ev=W i=0 n=5` or `ev=PSI i=0 x=3 use=9 out=0`.
std::string format_details(const AdversaryEvent& e);

/// Throws ConsistencyError if `e` cannot be applied to `world` now.
void validate(const AdversaryEvent& e, const World& world);
void apply(const AdversaryEvent& e, World& world);

/// What an opponent may look at when choosing its moves.
struct AdversaryView {
  const World& world;
  /// Current diagonalization witnesses of S-parents, ascending.
  std::span<const Nat> witnesses;
};

class AdversaryComponent {
 public:
  virtual ~AdversaryComponent() = default;
  virtual std::vector<AdversaryEvent> step(Stage s, const AdversaryView& view) = 0;
};

/// Replays `at <s> ...` directives.
class ScriptedAdversary final : public AdversaryComponent {
 public:
  explicit ScriptedAdversary(std::vector<AdversaryEvent> events);
  std::vector<AdversaryEvent> step(Stage s, const AdversaryView& view) override;

 private:
  std::vector<AdversaryEvent> events_;
  std::size_t next_ = 0;
};

/// Keeps Phi_i(A) total on a growing initial segment with use x * gap and
/// output W_i(x), so the length of agreement grows by `step` per
/// consultation while A leaves the uses alone.
class TrackingAdversary final : public AdversaryComponent {
 public:
  TrackingAdversary(int i, Nat use_gap, Nat step = 1);
  std::vector<AdversaryEvent> step(Stage s, const AdversaryView& view) override;
  int index() const noexcept { return i_; }
  Nat target() const noexcept { return target_; }

 private:
  int i_;
  Nat gap_;
  Nat step_;
  Nat target_ = 0;
};

/// Re-converges Psi_i(B;x) = 0 whenever it is divergent, with use just above
/// every number the B side has seen plus a margin.
class HoldAdversary final : public AdversaryComponent {
 public:
  /// Keeps Psi_i(x) convergent from stage `from` on. After a divergence it
  /// waits one stage, so markers redefined meanwhile fall below the new use,
  /// then converges with use `margin` above the next fresh marker.
  HoldAdversary(int i, Nat x, Nat margin, Stage from = 0);
  std::vector<AdversaryEvent> step(Stage s, const AdversaryView& view) override;

 private:
  int i_;
  Nat x_;
  Nat margin_;
  Stage from_;
  std::optional<Stage> divergent_since_;
};

/// Converges Psi_i(x) = 0 with a fixed use once per witness x, from stage
/// `from` on.
class AnswerAdversary final : public AdversaryComponent {
 public:
  AnswerAdversary(int i, Nat use, Stage from = 0);
  std::vector<AdversaryEvent> step(Stage s, const AdversaryView& view) override;

 private:
  int i_;
  Nat use_;
  Stage from_;
  std::set<Nat> answered_;
};

struct FuzzParams {
  std::uint64_t seed = 1;
  /// Maximum events per stage.
  unsigned rate = 2;
  /// Initial bound on Phi arguments and W elements.
  Nat span = 4;
  /// The bound grows by one every `grow` stages (0 = never).
  Stage grow = 250;
  /// Each Phi_i also answers correctly at its agreement point every pace_i
  /// stages, pace_i drawn per seed from [pace, 2 * pace) (0 = never).
  Stage pace = 8;
  /// Chance in percent that a Psi_i is stubborn for the whole run: it always
  /// answers 0 with a use above every marker issued so far.
  unsigned stubborn = 50;
  std::vector<int> phi;  // requirement indices with PHI and W declared
  std::vector<int> psi;
};

/// Seeded randomized opponent. Deterministic in (params, consultation history).
class FuzzAdversary final : public AdversaryComponent {
 public:
  explicit FuzzAdversary(FuzzParams params);
  std::vector<AdversaryEvent> step(Stage s, const AdversaryView& view) override;

 private:
  FuzzParams p_;
  std::mt19937_64 rng_;
  std::vector<Stage> paces_;     // parallel to p_.phi
  std::vector<bool> stubborn_;  // parallel to p_.psi
  std::uint64_t below(std::uint64_t n);
};

/// Ordered composition of components. Each component's events are validated
/// and applied before the next component is consulted.
class Adversary {
 public:
  void add(std::unique_ptr<AdversaryComponent> c) { parts_.push_back(std::move(c)); }
  bool empty() const noexcept { return parts_.empty(); }

  /// Called once at the start of stage s; returns the applied events in order.
  std::vector<AdversaryEvent> step(Stage s, World& world, std::span<const Nat> witnesses);

 private:
  std::vector<std::unique_ptr<AdversaryComponent>> parts_;
};

}  // namespace smp
