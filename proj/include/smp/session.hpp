#pragma once

// One run of a scenario: engine, opponents and the online monitor.

#include "smp/engine.hpp"
#include "smp/monitor.hpp"
#include "smp/scenario.hpp"

namespace smp {

class Session {
 public:
  explicit Session(Scenario sc, TraceSink* sink = nullptr);
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  /// Runs and checks one stage.
  const StageRecord& step();
  /// Runs the remaining stages of the scenario's budget.
  void run();
  bool done() const noexcept { return engine_.world().stage() >= sc_.stages; }

  const Scenario& scenario() const noexcept { return sc_; }
  const Engine& engine() const noexcept { return engine_; }
  const Monitor& monitor() const noexcept { return monitor_; }
  /// Engine and monitor findings so far.
  const std::vector<Violation>& violations() const noexcept { return monitor_.violations(); }

 private:
  Scenario sc_;
  Engine engine_;
  Monitor monitor_;
};

}  // namespace smp
