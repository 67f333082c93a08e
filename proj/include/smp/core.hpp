#pragma once

// Ground-level state of the construction: stage parity, c.e. set
// approximations, the opponent's computation tables, the Gamma/Delta
// functionals built by the strategies, and fresh-number allocation.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smp {

using Nat = std::uint64_t;
using Stage = std::uint64_t;
/// Global event sequence number; orders mutations inside one stage.
using Seq = std::uint64_t;

inline constexpr Nat kInfinity = ~Nat{0};

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DuplicateEntry : Error {
  using Error::Error;
};

struct ConsistencyError : Error {
  using Error::Error;
};

struct WellDefinednessViolation : Error {
  using Error::Error;
};

// ---------------------------------------------------------------- stages

enum class Parity : std::uint8_t { A, B };

/// Even stages may change A, odd stages may change B.
constexpr Parity parity(Stage s) noexcept { return s % 2 == 0 ? Parity::A : Parity::B; }

constexpr std::string_view to_string(Parity p) noexcept { return p == Parity::A ? "A" : "B"; }

class StageClock {
 public:
  Stage current() const noexcept { return current_; }
  Parity parity() const noexcept { return smp::parity(current_); }
  void advance() noexcept { ++current_; }

 private:
  Stage current_ = 0;
};

// ---------------------------------------------------------------- sets

struct Entry {
  Stage stage = 0;
  Seq seq = 0;
};

/// Monotone finite approximation of a c.e. set.
class SetState {
 public:
  explicit SetState(std::string name = {}) : name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }
  bool contains(Nat n) const { return members_.contains(n); }
  std::size_t size() const noexcept { return members_.size(); }
  const std::map<Nat, Entry>& members() const noexcept { return members_; }
  std::optional<Entry> entry(Nat n) const;

  /// Throws DuplicateEntry if n is already a member.
  void insert(Nat n, Stage s, Seq seq);

  /// True iff some member below `bound` entered strictly after `seq`.
  bool changed_below_since(Nat bound, Seq seq) const;

 private:
  std::string name_;
  std::map<Nat, Entry> members_;
};

// ---------------------------------------------------------------- computations

enum class Oracle : std::uint8_t { A, B };

/// Phi reads A, Psi reads B.
enum class MachineKind : std::uint8_t { Phi, Psi };

constexpr Oracle oracle_of(MachineKind k) noexcept {
  return k == MachineKind::Phi ? Oracle::A : Oracle::B;
}

std::string_view to_string(MachineKind k) noexcept;

struct CompKey {
  MachineKind kind = MachineKind::Phi;
  int index = 0;
  Nat x = 0;
  auto operator<=>(const CompKey&) const = default;
};

/// An opponent convergence record. The oracle is read strictly below `use`.
struct Computation {
  CompKey key;
  Nat use = 0;
  int output = 0;
  Stage born_stage = 0;
  Seq born_seq = 0;
  bool operator==(const Computation&) const = default;
};

/// Live computations, indexed for destruction by oracle change.
class ComputationTable {
 public:
  const Computation* find(const CompKey& key) const;
  bool live(const CompKey& key) const { return find(key) != nullptr; }

  /// Throws ConsistencyError if a live computation already exists for the key.
  void converge(const Computation& c);

  /// Destroys every computation reading `oracle` with use > n; returns them.
  std::vector<Computation> destroy_above(Oracle oracle, Nat n);

  const std::map<CompKey, Computation>& all() const noexcept { return live_; }

 private:
  std::map<CompKey, Computation> live_;
  std::multimap<Nat, CompKey> by_use_[2];
};

// ---------------------------------------------------------------- fresh numbers

/// Strictly increasing supply of large numbers.
class FreshSource {
 public:
  explicit FreshSource(Nat next = 0) : next_(next) {}
  Nat peek() const noexcept { return next_; }
  Nat fresh() noexcept { return next_++; }
  /// Later values will exceed n.
  void observe(Nat n) noexcept {
    if (n != kInfinity && n >= next_) next_ = n + 1;
  }

 private:
  Nat next_;
};

// ---------------------------------------------------------------- functionals

/// One Gamma(B (+) W; x) axiom. B is read strictly below b_use, W strictly
/// below w_use. The oracle snapshot is implicit: c.e. oracles agree with the
/// definition-time segments iff nothing entered below the uses afterwards.
struct FunctionalAxiom {
  int owner = -1;
  int requirement = -1;  // index of W
  Nat x = 0;
  Nat b_use = 0;
  Nat w_use = 0;
  int output = 0;
  Stage def_stage = 0;
  Seq def_seq = 0;

  /// Marker enumerated into B to retire this axiom.
  Nat marker() const noexcept { return b_use - 1; }
};

bool applicable(const FunctionalAxiom& ax, const SetState& b, const SetState& w);

/// Output of the unique applicable axiom for x, if any. Throws
/// WellDefinednessViolation when two applicable axioms disagree.
std::optional<int> evaluate_functional(std::span<const FunctionalAxiom> axioms, Nat x,
                                       const SetState& b, const SetState& w);

enum class BreakCause : std::uint8_t { None, B, W };

struct AxiomRecord {
  FunctionalAxiom axiom;
  BreakCause broken = BreakCause::None;
  /// Certificate: the element whose entry below a use retired the axiom.
  Nat broken_by = 0;
  Seq broken_seq = 0;
  bool live() const noexcept { return broken == BreakCause::None; }
};

/// Axiom history of one Gamma functional, at most one current axiom per x.
class GammaTable {
 public:
  GammaTable(int owner, int requirement) : owner_(owner), requirement_(requirement) {}

  int owner() const noexcept { return owner_; }
  int requirement() const noexcept { return requirement_; }

  const AxiomRecord* current(Nat x) const;
  std::optional<std::size_t> current_index(Nat x) const {
    return x < current_.size() ? current_[x] : std::nullopt;
  }
  /// Marker of the current axiom for x, if that axiom still applies.
  std::optional<Nat> marker(Nat x) const;
  /// Number of distinct B-uses x has had.
  std::uint32_t churn(Nat x) const { return x < churn_.size() ? churn_[x] : 0; }
  Nat domain() const noexcept { return current_.size(); }
  /// Arguments whose current axiom has been retired.
  const std::set<Nat>& stale() const noexcept { return stale_; }

  const std::vector<AxiomRecord>& history() const noexcept { return axioms_; }
  std::vector<FunctionalAxiom> axioms() const;

 private:
  friend class GammaRegistry;
  int owner_;
  int requirement_;
  std::vector<AxiomRecord> axioms_;
  std::vector<std::optional<std::size_t>> current_;
  std::vector<std::uint32_t> churn_;
  std::set<Nat> stale_;

  void mark_stale(std::size_t index);
};

struct AxiomRef {
  int owner = -1;
  std::size_t index = 0;
};

/// All Gamma tables plus the indexes that retire axioms when B or W move.
class GammaRegistry {
 public:
  GammaTable& table(int owner, int requirement);
  const GammaTable* find(int owner) const;
  const std::map<int, GammaTable>& tables() const noexcept { return tables_; }

  struct Defined {
    AxiomRef ref;
    /// Previous current axiom for x when it still applied at definition time.
    std::optional<AxiomRecord> displaced;
  };

  /// Installs a new current axiom for (owner, x).
  Defined define(const FunctionalAxiom& ax);

  const AxiomRecord& record(AxiomRef r) const { return tables_.at(r.owner).axioms_.at(r.index); }

  /// Retire axioms whose B-use exceeds n; returns retired references.
  std::vector<AxiomRef> on_b_enumerated(Nat n, Seq seq);
  /// Retire axioms reading W_requirement above n.
  std::vector<AxiomRef> on_w_added(int requirement, Nat n, Seq seq);

 private:
  std::map<int, GammaTable> tables_;
  std::multimap<Nat, AxiomRef> live_by_b_;
  std::map<int, std::multimap<Nat, AxiomRef>> live_by_w_;
};

/// Delta built along one g_alpha outcome of an S-child.
struct DeltaTable {
  int owner = -1;      // child node
  int alpha = -1;      // paired R-node
  int requirement = -1;
  std::map<Nat, int> entries;
  Nat domain_bound = 0;
  std::vector<std::pair<Stage, Nat>> injury_log;

  /// Appends W(n) for every n in [domain_bound, bound).
  void extend_to(Nat bound, const SetState& w);
  /// Logs an injury if n is in the domain with claimed value 0.
  bool note_w_added(Nat n, Stage s);
  bool injured_at(Nat n) const;
};

// ---------------------------------------------------------------- hashing

/// Order-independent multiset hash over set members and live computations.
struct StateHash {
  std::uint64_t value = 0;
  void add(std::uint64_t h) noexcept { value += h; }
  void remove(std::uint64_t h) noexcept { value -= h; }
};

std::uint64_t mix64(std::uint64_t x) noexcept;
/// set_code: 0 = A, 1 = B, 2 + i = W_i.
std::uint64_t member_hash(std::uint64_t set_code, Nat n) noexcept;
std::uint64_t computation_hash(const Computation& c) noexcept;
std::uint64_t stage_hash(Stage s, std::uint64_t state) noexcept;

// ---------------------------------------------------------------- world

enum class EnumerateResult : std::uint8_t { Added, ParityBlock };

/// Everything the opponents and the construction share.
class World {
 public:
  World() : a_("A"), b_("B") {}

  StageClock clock;
  /// Witness numbers (A side).
  FreshSource witness_source;
  /// Gamma markers (B side); observes every use and every B member.
  FreshSource marker_source;
  GammaRegistry gamma;

  Stage stage() const noexcept { return clock.current(); }
  Seq seq() const noexcept { return seq_; }
  Seq next_seq() noexcept { return ++seq_; }

  const SetState& a() const noexcept { return a_; }
  const SetState& b() const noexcept { return b_; }
  const SetState& set(Oracle o) const noexcept { return o == Oracle::A ? a_ : b_; }
  const SetState& w(int i) const;
  bool has_w(int i) const { return w_.contains(i); }
  const std::map<int, SetState>& ws() const noexcept { return w_; }
  void declare_w(int i);

  const ComputationTable& computations() const noexcept { return comps_; }

  /// Adds n to A or B when the stage parity allows it, destroying every
  /// computation on that oracle with use > n and retiring Gamma axioms.
  /// Throws DuplicateEntry when n is already present.
  EnumerateResult enumerate(Oracle target, Nat n);

  /// Opponent moves. Throw ConsistencyError on invariant violations.
  void w_add(int i, Nat n);
  void converge(const Computation& c);

  std::uint64_t state_hash() const noexcept { return hash_.value; }

  /// Largest n with Phi_i(A;x) live and equal to W_i(x) for every x < n;
  /// maintained incrementally, 0 when W_i is not declared.
  Nat agreement(int i) const;

  /// Computations destroyed by the most recent enumerate().
  const std::vector<Computation>& last_destroyed() const noexcept { return destroyed_; }

  /// Axioms retired since the last clear_retired().
  const std::vector<AxiomRef>& retired() const noexcept { return retired_; }
  void clear_retired() noexcept { retired_.clear(); }

 private:
  SetState a_;
  SetState b_;
  std::map<int, SetState> w_;
  ComputationTable comps_;
  StateHash hash_;
  Seq seq_ = 0;
  std::vector<Computation> destroyed_;
  std::vector<AxiomRef> retired_;
  std::map<int, Nat> agreement_;

  void extend_agreement(int i);
};

/// Largest n with Phi_i(A;x) live and equal to W_i(x) for every x < n.
Nat length_of_agreement(const World& world, int i);

}  // namespace smp
