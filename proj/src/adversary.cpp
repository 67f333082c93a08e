#include "smp/adversary.hpp"

#include <algorithm>

namespace smp {

std::string format_details(const AdversaryEvent& e) {
  if (const auto* w = std::get_if<WAdd>(&e.payload)) {
    return "ev=W i=" + std::to_string(w->i) + " n=" + std::to_string(w->n);
  }
  const auto& c = std::get<Converge>(e.payload);
  return "ev=" + std::string(to_string(c.kind)) + " i=" + std::to_string(c.i) +
         " x=" + std::to_string(c.x) + " use=" + std::to_string(c.use) +
         " out=" + std::to_string(c.out);
}

void validate(const AdversaryEvent& e, const World& world) {
  if (const auto* w = std::get_if<WAdd>(&e.payload)) {
    if (!world.has_w(w->i)) throw ConsistencyError("W " + std::to_string(w->i) + " is not declared");
    if (world.w(w->i).contains(w->n)) {
      throw ConsistencyError("W " + std::to_string(w->i) + " already contains " + std::to_string(w->n));
    }
    return;
  }
  const auto& c = std::get<Converge>(e.payload);
  if (c.out != 0 && c.out != 1) throw ConsistencyError("outputs are restricted to 0 and 1");
  if (world.computations().live(CompKey{c.kind, c.i, c.x})) {
    throw ConsistencyError(std::string(to_string(c.kind)) + " " + std::to_string(c.i) +
                           " x=" + std::to_string(c.x) + " is already convergent at stage " +
                           std::to_string(e.at));
  }
}

void apply(const AdversaryEvent& e, World& world) {
  validate(e, world);
  if (const auto* w = std::get_if<WAdd>(&e.payload)) {
    world.w_add(w->i, w->n);
    return;
  }
  const auto& c = std::get<Converge>(e.payload);
  world.converge(Computation{CompKey{c.kind, c.i, c.x}, c.use, c.out});
}

// ---------------------------------------------------------------- scripted

ScriptedAdversary::ScriptedAdversary(std::vector<AdversaryEvent> events) : events_(std::move(events)) {
  std::stable_sort(events_.begin(), events_.end(),
                   [](const AdversaryEvent& a, const AdversaryEvent& b) { return a.at < b.at; });
}

std::vector<AdversaryEvent> ScriptedAdversary::step(Stage s, const AdversaryView&) {
  std::vector<AdversaryEvent> out;
  while (next_ < events_.size() && events_[next_].at < s) ++next_;
  while (next_ < events_.size() && events_[next_].at == s) out.push_back(events_[next_++]);
  return out;
}

// ---------------------------------------------------------------- tracking

TrackingAdversary::TrackingAdversary(int i, Nat use_gap, Nat step)
    : i_(i), gap_(use_gap == 0 ? 1 : use_gap), step_(step == 0 ? 1 : step) {}

std::vector<AdversaryEvent> TrackingAdversary::step(Stage s, const AdversaryView& view) {
  target_ += step_;
  std::vector<AdversaryEvent> out;
  const SetState& w = view.world.w(i_);
  const auto& comps = view.world.computations();
  for (Nat x = 0; x < target_; ++x) {
    if (comps.live(CompKey{MachineKind::Phi, i_, x})) continue;
    out.push_back({s, Converge{MachineKind::Phi, i_, x, x * gap_, w.contains(x) ? 1 : 0}});
  }
  return out;
}

// ---------------------------------------------------------------- hold

HoldAdversary::HoldAdversary(int i, Nat x, Nat margin, Stage from) : i_(i), x_(x), margin_(margin), from_(from) {}

std::vector<AdversaryEvent> HoldAdversary::step(Stage s, const AdversaryView& view) {
  if (s < from_) return {};
  if (view.world.computations().live(CompKey{MachineKind::Psi, i_, x_})) {
    divergent_since_.reset();
    return {};
  }
  if (!divergent_since_) divergent_since_ = s;
  if (*divergent_since_ == s) return {};
  divergent_since_.reset();
  const Nat use = view.world.marker_source.peek() + margin_;
  return {AdversaryEvent{s, Converge{MachineKind::Psi, i_, x_, use, 0}}};
}

AnswerAdversary::AnswerAdversary(int i, Nat use, Stage from) : i_(i), use_(use), from_(from) {}

std::vector<AdversaryEvent> AnswerAdversary::step(Stage s, const AdversaryView& view) {
  std::vector<AdversaryEvent> out;
  if (s < from_) return out;
  for (Nat x : view.witnesses) {
    if (!answered_.insert(x).second || view.world.computations().live(CompKey{MachineKind::Psi, i_, x})) continue;
    out.push_back(AdversaryEvent{s, Converge{MachineKind::Psi, i_, x, use_, 0}});
  }
  return out;
}

// ---------------------------------------------------------------- fuzz

FuzzAdversary::FuzzAdversary(FuzzParams params) : p_(std::move(params)), rng_(p_.seed) {
  for (std::size_t k = 0; k < p_.phi.size(); ++k) paces_.push_back(p_.pace == 0 ? 0 : p_.pace + below(p_.pace));
  for (std::size_t k = 0; k < p_.psi.size(); ++k) stubborn_.push_back(below(100) < p_.stubborn);
}

std::uint64_t FuzzAdversary::below(std::uint64_t n) {
  if (n <= 1) return 0;
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_);
}

std::vector<AdversaryEvent> FuzzAdversary::step(Stage s, const AdversaryView& view) {
  std::vector<AdversaryEvent> out;
  const World& world = view.world;
  // Phi may run past the newest witness so that Gamma reaches the witnesses.
  const Nat span = std::max(p_.span + (p_.grow == 0 ? 0 : s / p_.grow), world.witness_source.peek() + p_.span);
  const auto count = below(p_.rate + 1);
  // Moves chosen within one step must not collide with each other.
  std::vector<CompKey> pending;
  std::vector<std::pair<int, Nat>> pending_w;
  auto taken = [&](const CompKey& k) {
    return world.computations().live(k) || std::find(pending.begin(), pending.end(), k) != pending.end();
  };

  // Phi_i extends the agreement one argument at a time and stalls while a
  // wrong answer blocks it. W changes at the frontier never contradict a
  // Phi answer chosen earlier in the same step.
  auto frontier = [&](int i) {
    const Nat a = world.agreement(i);
    return std::find(pending.begin(), pending.end(), CompKey{MachineKind::Phi, i, a}) != pending.end() ? a + 1 : a;
  };

  for (std::size_t k = 0; k < p_.phi.size(); ++k) {
    const int i = p_.phi[k];
    const Nat x = frontier(i);
    if (paces_[k] == 0 || s % paces_[k] != 0 || x >= span || taken(CompKey{MachineKind::Phi, i, x})) continue;
    const int outv = world.w(i).contains(x) ? 1 : 0;
    const Nat use = below(2) == 0 ? x + 1 : 1 + below(world.witness_source.peek() + 4);
    pending.push_back(CompKey{MachineKind::Phi, i, x});
    out.push_back({s, Converge{MachineKind::Phi, i, x, use, outv}});
  }

  for (std::uint64_t e = 0; e < count; ++e) {
    const auto roll = below(100);
    if (roll < 45 && !p_.phi.empty()) {
      const int i = p_.phi[below(p_.phi.size())];
      const Nat x = frontier(i);
      if (x >= span || taken(CompKey{MachineKind::Phi, i, x})) continue;
      const bool in_w = world.w(i).contains(x) ||
                        std::find(pending_w.begin(), pending_w.end(), std::pair{i, x}) != pending_w.end();
      const Nat peek = world.witness_source.peek();
      // A wrong answer reads A above the next witness, so a later
      // diagonalization can destroy it.
      const bool wrong = below(400) == 0;
      const int outv = wrong != in_w ? 1 : 0;
      const Nat use = wrong ? peek + 1 + below(8) : below(2) == 0 ? x + 1 : 1 + below(peek + 4);
      pending.push_back(CompKey{MachineKind::Phi, i, x});
      out.push_back({s, Converge{MachineKind::Phi, i, x, use, outv}});
    } else if (roll < 60 && !p_.phi.empty()) {
      const int i = p_.phi[below(p_.phi.size())];
      const Nat f = frontier(i);
      Nat n = 0;
      if (below(8) == 0 && f > 0) {
        // Below the agreement only where the disagreement is recoverable.
        n = below(f);
        const Computation* c = world.computations().find(CompKey{MachineKind::Phi, i, n});
        if (c == nullptr || c->use <= world.witness_source.peek()) continue;
      } else {
        if (f >= span) continue;
        n = f + below(span - f);
      }
      const bool dup = std::find(pending_w.begin(), pending_w.end(), std::pair{i, n}) != pending_w.end();
      if (world.w(i).contains(n) || dup) continue;
      pending_w.emplace_back(i, n);
      out.push_back({s, WAdd{i, n}});
    } else if (roll < 90 && !p_.psi.empty()) {
      const std::size_t k = below(p_.psi.size());
      const int i = p_.psi[k];
      const Nat x = (!view.witnesses.empty() && below(4) != 0) ? view.witnesses[below(view.witnesses.size())]
                                                              : below(span);
      const CompKey key{MachineKind::Psi, i, x};
      if (taken(key)) continue;
      const bool stubborn = stubborn_[k];
      const int outv = !stubborn && below(8) == 0 ? 1 : 0;
      // Half of the uses, and every stubborn one, clear every marker issued so far.
      const Nat use = !stubborn && below(2) == 0 ? 1 + below(world.marker_source.peek() + 8)
                                                 : world.marker_source.peek() + 1 + below(16);
      pending.push_back(key);
      out.push_back({s, Converge{MachineKind::Psi, i, x, use, outv}});
    }
  }
  return out;
}

// ---------------------------------------------------------------- composite

std::vector<AdversaryEvent> Adversary::step(Stage s, World& world, std::span<const Nat> witnesses) {
  std::vector<AdversaryEvent> all;
  for (auto& part : parts_) {
    auto events = part->step(s, AdversaryView{world, witnesses});
    for (auto& e : events) {
      e.at = s;
      apply(e, world);
      all.push_back(std::move(e));
    }
  }
  return all;
}

}  // namespace smp
