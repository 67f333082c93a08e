#include "smp/core.hpp"

#include <algorithm>

namespace smp {

std::optional<Entry> SetState::entry(Nat n) const {
  auto it = members_.find(n);
  if (it == members_.end()) return std::nullopt;
  return it->second;
}

void SetState::insert(Nat n, Stage s, Seq seq) {
  auto [it, inserted] = members_.emplace(n, Entry{s, seq});
  if (!inserted) throw DuplicateEntry(name_ + " already contains " + std::to_string(n));
}

bool SetState::changed_below_since(Nat bound, Seq seq) const {
  for (auto it = members_.begin(); it != members_.end() && it->first < bound; ++it) {
    if (it->second.seq > seq) return true;
  }
  return false;
}

std::string_view to_string(MachineKind k) noexcept { return k == MachineKind::Phi ? "PHI" : "PSI"; }

// ---------------------------------------------------------------- computations

const Computation* ComputationTable::find(const CompKey& key) const {
  auto it = live_.find(key);
  return it == live_.end() ? nullptr : &it->second;
}

void ComputationTable::converge(const Computation& c) {
  if (live_.contains(c.key)) {
    throw ConsistencyError(std::string(to_string(c.key.kind)) + " " + std::to_string(c.key.index) +
                           " x=" + std::to_string(c.key.x) + " is already convergent");
  }
  live_.emplace(c.key, c);
  by_use_[static_cast<int>(oracle_of(c.key.kind))].emplace(c.use, c.key);
}

std::vector<Computation> ComputationTable::destroy_above(Oracle oracle, Nat n) {
  std::vector<Computation> out;
  auto& index = by_use_[static_cast<int>(oracle)];
  for (auto it = index.upper_bound(n); it != index.end();) {
    auto lit = live_.find(it->second);
    out.push_back(lit->second);
    live_.erase(lit);
    it = index.erase(it);
  }
  return out;
}

// ---------------------------------------------------------------- functionals

bool applicable(const FunctionalAxiom& ax, const SetState& b, const SetState& w) {
  return !b.changed_below_since(ax.b_use, ax.def_seq) && !w.changed_below_since(ax.w_use, ax.def_seq);
}

std::optional<int> evaluate_functional(std::span<const FunctionalAxiom> axioms, Nat x,
                                       const SetState& b, const SetState& w) {
  std::optional<int> result;
  for (const auto& ax : axioms) {
    if (ax.x != x || !applicable(ax, b, w)) continue;
    if (result && *result != ax.output) {
      throw WellDefinednessViolation("two applicable axioms disagree at x=" + std::to_string(x));
    }
    result = ax.output;
  }
  return result;
}

const AxiomRecord* GammaTable::current(Nat x) const {
  if (x >= current_.size() || !current_[x]) return nullptr;
  return &axioms_[*current_[x]];
}

std::optional<Nat> GammaTable::marker(Nat x) const {
  const AxiomRecord* r = current(x);
  if (r == nullptr || !r->live()) return std::nullopt;
  return r->axiom.marker();
}

std::vector<FunctionalAxiom> GammaTable::axioms() const {
  std::vector<FunctionalAxiom> out;
  out.reserve(axioms_.size());
  for (const auto& r : axioms_) out.push_back(r.axiom);
  return out;
}

GammaTable& GammaRegistry::table(int owner, int requirement) {
  auto it = tables_.find(owner);
  if (it == tables_.end()) it = tables_.emplace(owner, GammaTable(owner, requirement)).first;
  return it->second;
}

const GammaTable* GammaRegistry::find(int owner) const {
  auto it = tables_.find(owner);
  return it == tables_.end() ? nullptr : &it->second;
}

GammaRegistry::Defined GammaRegistry::define(const FunctionalAxiom& ax) {
  GammaTable& t = table(ax.owner, ax.requirement);
  Defined out;
  if (ax.x >= t.current_.size()) {
    t.current_.resize(ax.x + 1);
    t.churn_.resize(ax.x + 1, 0);
  }
  const auto& prev = t.current_[ax.x];
  if (prev && t.axioms_[*prev].live()) out.displaced = t.axioms_[*prev];
  if (!prev || t.axioms_[*prev].axiom.b_use != ax.b_use) ++t.churn_[ax.x];
  t.axioms_.push_back(AxiomRecord{ax});
  std::size_t idx = t.axioms_.size() - 1;
  t.current_[ax.x] = idx;
  t.stale_.erase(ax.x);
  out.ref = AxiomRef{ax.owner, idx};
  live_by_b_.emplace(ax.b_use, out.ref);
  live_by_w_[ax.requirement].emplace(ax.w_use, out.ref);
  return out;
}

namespace {

// Removes `ref` from a use-keyed index; the entry is keyed by `use`.
void erase_ref(std::multimap<Nat, AxiomRef>& index, Nat use, AxiomRef ref) {
  auto [lo, hi] = index.equal_range(use);
  for (auto it = lo; it != hi; ++it) {
    if (it->second.owner == ref.owner && it->second.index == ref.index) {
      index.erase(it);
      return;
    }
  }
}

}  // namespace

void GammaTable::mark_stale(std::size_t index) {
  const Nat x = axioms_[index].axiom.x;
  if (x < current_.size() && current_[x] == index) stale_.insert(x);
}

std::vector<AxiomRef> GammaRegistry::on_b_enumerated(Nat n, Seq seq) {
  std::vector<AxiomRef> out;
  for (auto it = live_by_b_.upper_bound(n); it != live_by_b_.end();) {
    AxiomRef ref = it->second;
    AxiomRecord& r = tables_.at(ref.owner).axioms_[ref.index];
    r.broken = BreakCause::B;
    r.broken_by = n;
    r.broken_seq = seq;
    erase_ref(live_by_w_[r.axiom.requirement], r.axiom.w_use, ref);
    tables_.at(ref.owner).mark_stale(ref.index);
    it = live_by_b_.erase(it);
    out.push_back(ref);
  }
  return out;
}

std::vector<AxiomRef> GammaRegistry::on_w_added(int requirement, Nat n, Seq seq) {
  std::vector<AxiomRef> out;
  auto wit = live_by_w_.find(requirement);
  if (wit == live_by_w_.end()) return out;
  auto& index = wit->second;
  for (auto it = index.upper_bound(n); it != index.end();) {
    AxiomRef ref = it->second;
    AxiomRecord& r = tables_.at(ref.owner).axioms_[ref.index];
    r.broken = BreakCause::W;
    r.broken_by = n;
    r.broken_seq = seq;
    erase_ref(live_by_b_, r.axiom.b_use, ref);
    tables_.at(ref.owner).mark_stale(ref.index);
    it = index.erase(it);
    out.push_back(ref);
  }
  return out;
}

// ---------------------------------------------------------------- delta

void DeltaTable::extend_to(Nat bound, const SetState& w) {
  for (Nat n = domain_bound; n < bound; ++n) entries[n] = w.contains(n) ? 1 : 0;
  domain_bound = std::max(domain_bound, bound);
}

bool DeltaTable::note_w_added(Nat n, Stage s) {
  auto it = entries.find(n);
  if (it == entries.end() || it->second != 0) return false;
  injury_log.emplace_back(s, n);
  return true;
}

bool DeltaTable::injured_at(Nat n) const {
  return std::any_of(injury_log.begin(), injury_log.end(),
                     [n](const auto& e) { return e.second == n; });
}

// ---------------------------------------------------------------- hashing

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t member_hash(std::uint64_t set_code, Nat n) noexcept {
  return mix64(mix64(set_code * 0x100000001b3ULL + 1) ^ n);
}

std::uint64_t computation_hash(const Computation& c) noexcept {
  std::uint64_t h = mix64(0xC0FFEEULL + static_cast<std::uint64_t>(c.key.kind));
  h = mix64(h ^ static_cast<std::uint64_t>(c.key.index));
  h = mix64(h ^ c.key.x);
  h = mix64(h ^ c.use);
  return mix64(h ^ static_cast<std::uint64_t>(c.output));
}

std::uint64_t stage_hash(Stage s, std::uint64_t state) noexcept { return mix64(state ^ mix64(s)); }

// ---------------------------------------------------------------- world

const SetState& World::w(int i) const {
  auto it = w_.find(i);
  if (it == w_.end()) throw ConsistencyError("W " + std::to_string(i) + " is not declared");
  return it->second;
}

void World::declare_w(int i) {
  w_.try_emplace(i, "W" + std::to_string(i));
  agreement_.try_emplace(i, 0);
  extend_agreement(i);
}

Nat World::agreement(int i) const {
  auto it = agreement_.find(i);
  return it == agreement_.end() ? 0 : it->second;
}

void World::extend_agreement(int i) {
  auto it = agreement_.find(i);
  if (it == agreement_.end()) return;
  const SetState& w = w_.at(i);
  for (;; ++it->second) {
    const Computation* c = comps_.find(CompKey{MachineKind::Phi, i, it->second});
    if (c == nullptr || c->output != (w.contains(it->second) ? 1 : 0)) return;
  }
}

EnumerateResult World::enumerate(Oracle target, Nat n) {
  destroyed_.clear();
  const bool allowed = (target == Oracle::A) == (clock.parity() == Parity::A);
  SetState& set = target == Oracle::A ? a_ : b_;
  if (set.contains(n)) throw DuplicateEntry(set.name() + " already contains " + std::to_string(n));
  if (!allowed) return EnumerateResult::ParityBlock;
  const Seq s = next_seq();
  set.insert(n, stage(), s);
  hash_.add(member_hash(target == Oracle::A ? 0 : 1, n));
  destroyed_ = comps_.destroy_above(target, n);
  for (const auto& c : destroyed_) hash_.remove(computation_hash(c));
  if (target == Oracle::B) {
    marker_source.observe(n);
    auto gone = gamma.on_b_enumerated(n, s);
    retired_.insert(retired_.end(), gone.begin(), gone.end());
  } else {
    witness_source.observe(n);
    for (const auto& c : destroyed_) {
      auto it = agreement_.find(c.key.index);
      if (c.key.kind == MachineKind::Phi && it != agreement_.end()) it->second = std::min(it->second, c.key.x);
    }
  }
  return EnumerateResult::Added;
}

void World::w_add(int i, Nat n) {
  auto it = w_.find(i);
  if (it == w_.end()) throw ConsistencyError("W " + std::to_string(i) + " is not declared");
  if (it->second.contains(n)) {
    throw ConsistencyError("W " + std::to_string(i) + " already contains " + std::to_string(n));
  }
  const Seq s = next_seq();
  it->second.insert(n, stage(), s);
  hash_.add(member_hash(2 + static_cast<std::uint64_t>(i), n));
  auto gone = gamma.on_w_added(i, n, s);
  retired_.insert(retired_.end(), gone.begin(), gone.end());
  Nat& a = agreement_.at(i);
  if (n <= a) {
    a = n;
    extend_agreement(i);
  }
}

void World::converge(const Computation& c) {
  Computation stamped = c;
  stamped.born_stage = stage();
  stamped.born_seq = next_seq();
  comps_.converge(stamped);
  hash_.add(computation_hash(stamped));
  marker_source.observe(stamped.use);
  if (c.key.kind == MachineKind::Phi && c.key.x == agreement(c.key.index)) extend_agreement(c.key.index);
}

Nat length_of_agreement(const World& world, int i) { return world.agreement(i); }

}  // namespace smp
