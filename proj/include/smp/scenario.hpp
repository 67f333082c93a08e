#pragma once

// Line-oriented scenario files: mode header, declarations, built-in opponent
// components and scripted `at <stage>` directives.

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "smp/adversary.hpp"
#include "smp/core.hpp"
#include "smp/engine.hpp"

namespace smp {

struct ParseError : Error {
  ParseError(int line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line(line) {}
  int line;
};

struct TrackSpec {
  int i = 0;
  Nat gap = 1;
  Nat step = 1;
};

struct HoldSpec {
  int i = 0;
  Nat x = 0;
  Nat margin = 0;
  Stage from = 0;
};

struct AnswerSpec {
  int i = 0;
  Nat use = 1;
  Stage from = 0;
};

struct Scenario {
  enum class Mode : std::uint8_t { Scripted, Fuzz } mode = Mode::Scripted;
  std::uint64_t seed = 0;
  Stage stages = 0;
  // Fuzz knobs (optional on the mode line).
  unsigned rate = 2;
  Nat span = 4;
  Stage grow = 250;
  Stage pace = 8;
  unsigned stubborn = 50;

  std::set<int> phi;
  std::set<int> psi;
  std::set<int> w;
  std::vector<TrackSpec> tracks;
  std::vector<HoldSpec> holds;
  std::vector<AnswerSpec> answers;
  std::vector<AdversaryEvent> events;
};

/// Throws ParseError on malformed lines and ConsistencyError on undeclared
/// indices or out-of-order stages.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::string& path);

/// R-requirements need PHI i and W i declared; S-requirements need PSI i.
EngineConfig engine_config(const Scenario& sc);
std::unique_ptr<Adversary> make_adversary(const Scenario& sc);

}  // namespace smp
