#include "smp/session.hpp"

namespace smp {

Session::Session(Scenario sc, TraceSink* sink)
    : sc_(std::move(sc)), engine_(engine_config(sc_), make_adversary(sc_)), monitor_(engine_) {
  engine_.set_sink(sink);
}

const StageRecord& Session::step() {
  const StageRecord& rec = engine_.run_stage();
  monitor_.check_stage(rec);
  return rec;
}

void Session::run() {
  while (!done()) step();
}

}  // namespace smp
