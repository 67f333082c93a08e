#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "smp/session.hpp"
#include "smp/trace.hpp"

using namespace smp;

namespace {

// Exit codes: 0 clean, 1 invariant violation or replay mismatch, 2 bad input,
// 3 Gamma well-definedness failure.
constexpr int kViolation = 1;
constexpr int kBadInput = 2;
constexpr int kIllDefined = 3;

void print(std::ostream& out, const Violation& v) {
  out << "violation s=" << v.stage << " kind=" << to_string(v.kind) << " node=" << v.node << ' ' << v.details
      << '\n';
}

bool ill_defined(const std::vector<Violation>& vs) {
  for (const auto& v : vs) {
    if (v.kind == ViolationKind::WellDefinedness) return true;
  }
  return false;
}

struct RunOptions {
  std::string scenario;
  std::string trace;
  std::string dot;
  bool summary = false;
  bool check = false;
};

int run(const RunOptions& o) {
  const Scenario sc = load_scenario(o.scenario);
  std::ofstream trace_file;
  std::optional<StreamSink> sink;
  if (!o.trace.empty()) {
    trace_file.open(o.trace);
    if (!trace_file) throw Error("cannot write " + o.trace);
    sink.emplace(trace_file);
  }
  Session session(sc, sink ? &*sink : nullptr);
  int status = 0;
  while (!session.done()) {
    const std::size_t before = session.violations().size();
    session.step();
    if (o.check && session.violations().size() > before) {
      for (std::size_t k = before; k < session.violations().size(); ++k) print(std::cerr, session.violations()[k]);
      std::cerr << "stopped at stage " << session.violations()[before].stage << '\n';
      status = kViolation;
      break;
    }
  }
  if (!o.check) {
    for (const auto& v : session.violations()) print(std::cerr, v);
  }
  if (ill_defined(session.violations())) status = kIllDefined;
  if (!o.dot.empty()) {
    std::ofstream dot(o.dot);
    if (!dot) throw Error("cannot write " + o.dot);
    dot << dot_export(session.engine());
  }
  if (o.summary) std::cout << session.monitor().report().text();
  return status;
}

int replay(const std::string& scenario, const std::string& trace) {
  const Scenario sc = load_scenario(scenario);
  std::ifstream in(trace);
  if (!in) throw Error("cannot open trace " + trace);
  const ReplayResult r = replay_check(sc, in);
  if (!r.ok) {
    std::cerr << "replay failed at line " << r.line << ": " << r.error << '\n';
    return kViolation;
  }
  std::cout << "replay ok stages=" << r.stages << " hashes=" << r.hashes << '\n';
  return 0;
}

struct FuzzOptions {
  std::uint64_t first = 0;
  std::uint64_t seeds = 10;
  Stage stages = 10000;
  std::string params;  // extra `key=value` tokens for the mode line
};

int fuzz(const FuzzOptions& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<ViolationKind, std::size_t> counts;
  int status = 0;
  for (std::uint64_t seed = o.first; seed < o.first + o.seeds; ++seed) {
    const std::string header =
        "mode fuzz seed=" + std::to_string(seed) + " stages=" + std::to_string(o.stages) + " " + o.params + "\n";
    Session session(parse_scenario(header));
    try {
      session.run();
    } catch (const WellDefinednessViolation& e) {
      std::cerr << "seed " << seed << ": " << e.what() << '\n';
      ++counts[ViolationKind::WellDefinedness];
      status = kIllDefined;
      continue;
    }
    for (const auto& v : session.violations()) {
      if (counts[v.kind]++ == 0) {
        std::cerr << "seed " << seed << ' ';
        print(std::cerr, v);
      }
    }
    if (!session.violations().empty() && status == 0) status = kViolation;
    if (ill_defined(session.violations())) status = kIllDefined;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t total = 0;
  for (const auto& [k, n] : counts) {
    std::cout << to_string(k) << ' ' << n << '\n';
    total += n;
  }
  std::cout << "seeds=" << o.seeds << " stages=" << o.stages << " violations=" << total << " secs=" << secs << '\n';
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator of the strong minimal pair priority tree"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario");
  run_cmd->add_option("scenario", ro.scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--trace", ro.trace, "Write the event trace to this file");
  run_cmd->add_option("--dot", ro.dot, "Write the visited tree as Graphviz DOT");
  run_cmd->add_flag("--summary", ro.summary, "Print the satisfaction report");
  run_cmd->add_flag("--check", ro.check, "Stop at the first invariant violation");

  std::string rp_scenario, rp_trace;
  auto* replay_cmd = app.add_subcommand("replay", "Recompute the stage hashes of a trace");
  replay_cmd->add_option("scenario", rp_scenario, "Scenario file")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("trace", rp_trace, "Trace file")->required()->check(CLI::ExistingFile);

  FuzzOptions fo;
  auto* fuzz_cmd = app.add_subcommand("fuzz", "Run seeded fuzz scenarios under the monitor");
  fuzz_cmd->add_option("--first", fo.first, "First seed");
  fuzz_cmd->add_option("--seeds", fo.seeds, "Number of seeds");
  fuzz_cmd->add_option("--stages", fo.stages, "Stages per seed");
  fuzz_cmd->add_option("--params", fo.params, "Extra mode parameters, e.g. \"pace=4 stubborn=80\"");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return run(ro);
    if (*replay_cmd) return replay(rp_scenario, rp_trace);
    return fuzz(fo);
  } catch (const WellDefinednessViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIllDefined;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  }
}
