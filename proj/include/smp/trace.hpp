#pragma once

// Trace output, DOT export of the visited tree, and the replay checker that
// rebuilds the shared state from a trace alone.

#include <cstddef>
#include <istream>
#include <ostream>
#include <string>

#include "smp/engine.hpp"
#include "smp/scenario.hpp"

namespace smp {

/// Writes one TraceEvent line per event.
class StreamSink final : public TraceSink {
 public:
  explicit StreamSink(std::ostream& out) : out_(out) {}
  void emit(const TraceEvent& e) override { out_ << e.line() << '\n'; }

 private:
  std::ostream& out_;
};

/// Graphviz digraph of the nodes visited so far; edges carry outcome tokens.
std::string dot_export(const Engine& engine);

struct ReplayResult {
  bool ok = true;
  Stage stages = 0;
  std::size_t hashes = 0;
  std::size_t line = 0;  // first offending line when !ok
  std::string error;
};

/// Rebuilds A, B, the W sets and the live Phi/Psi computations from the
/// adversary and enumerate events of `trace`, and compares the recomputed
/// hash with every hash event. Also checks stage order and enumeration
/// parity. Does not run the engine.
ReplayResult replay_check(const Scenario& sc, std::istream& trace);

}  // namespace smp
