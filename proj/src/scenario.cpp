#include "smp/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace smp {

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::uint64_t parse_nat(std::string_view s, int line, std::string_view what) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ParseError(line, "expected a natural number for " + std::string(what) + ", got '" + std::string(s) + "'");
  }
  return v;
}

int parse_index(std::string_view s, int line) {
  const auto v = parse_nat(s, line, "index");
  if (v > 1'000'000) throw ParseError(line, "index out of range");
  return static_cast<int>(v);
}

// Parses `key=<nat>`.
std::uint64_t keyed(const std::string& tok, std::string_view key, int line) {
  const std::string prefix = std::string(key) + "=";
  if (tok.rfind(prefix, 0) != 0) throw ParseError(line, "expected " + prefix + "<nat>, got '" + tok + "'");
  return parse_nat(std::string_view(tok).substr(prefix.size()), line, key);
}

MachineKind machine(const std::string& tok, int line) {
  if (tok == "PHI") return MachineKind::Phi;
  if (tok == "PSI") return MachineKind::Psi;
  throw ParseError(line, "expected PHI or PSI, got '" + tok + "'");
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario sc;
  bool have_mode = false;
  Stage last_at = 0;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto t = split(raw);
    if (t.empty()) continue;
    const std::string& head = t[0];

    if (head == "mode") {
      if (have_mode) throw ParseError(lineno, "duplicate mode line");
      if (t.size() < 4) throw ParseError(lineno, "expected: mode scripted|fuzz seed=<nat> stages=<nat>");
      if (t[1] == "scripted") {
        sc.mode = Scenario::Mode::Scripted;
      } else if (t[1] == "fuzz") {
        sc.mode = Scenario::Mode::Fuzz;
      } else {
        throw ParseError(lineno, "unknown mode '" + t[1] + "'");
      }
      sc.seed = keyed(t[2], "seed", lineno);
      sc.stages = keyed(t[3], "stages", lineno);
      for (std::size_t k = 4; k < t.size(); ++k) {
        const auto eq = t[k].find('=');
        const std::string key = t[k].substr(0, eq == std::string::npos ? t[k].size() : eq);
        if (key == "rate") {
          sc.rate = static_cast<unsigned>(keyed(t[k], "rate", lineno));
        } else if (key == "span") {
          sc.span = keyed(t[k], "span", lineno);
        } else if (key == "grow") {
          sc.grow = keyed(t[k], "grow", lineno);
        } else if (key == "pace") {
          sc.pace = keyed(t[k], "pace", lineno);
        } else if (key == "stubborn") {
          sc.stubborn = static_cast<unsigned>(keyed(t[k], "stubborn", lineno));
        } else {
          throw ParseError(lineno, "unknown mode parameter '" + t[k] + "'");
        }
      }
      have_mode = true;
      continue;
    }
    if (!have_mode) throw ParseError(lineno, "the mode line must come first");

    if (head == "declare") {
      if (t.size() != 3) throw ParseError(lineno, "expected: declare PHI|PSI|W <i>");
      const int i = parse_index(t[2], lineno);
      if (t[1] == "W") {
        sc.w.insert(i);
      } else if (machine(t[1], lineno) == MachineKind::Phi) {
        sc.phi.insert(i);
      } else {
        sc.psi.insert(i);
      }
      continue;
    }

    if (head == "adversary") {
      if ((t.size() == 4 || t.size() == 5) && t[1] == "track") {
        const int i = parse_index(t[2], lineno);
        if (!sc.phi.contains(i) || !sc.w.contains(i)) {
          throw ConsistencyError("line " + std::to_string(lineno) + ": track " + std::to_string(i) +
                                 " needs PHI and W declared");
        }
        const Nat step = t.size() == 5 ? keyed(t[4], "step", lineno) : 1;
        sc.tracks.push_back({i, keyed(t[3], "gap", lineno), step});
        continue;
      }
      if ((t.size() == 6 || t.size() == 7) && t[1] == "hold" && t[2] == "PSI") {
        const int i = parse_index(t[3], lineno);
        if (!sc.psi.contains(i)) {
          throw ConsistencyError("line " + std::to_string(lineno) + ": PSI " + std::to_string(i) + " is not declared");
        }
        const Stage from = t.size() == 7 ? keyed(t[6], "from", lineno) : 0;
        sc.holds.push_back({i, keyed(t[4], "x", lineno), keyed(t[5], "margin", lineno), from});
        continue;
      }
      if ((t.size() == 5 || t.size() == 6) && t[1] == "answer" && t[2] == "PSI") {
        const int i = parse_index(t[3], lineno);
        if (!sc.psi.contains(i)) {
          throw ConsistencyError("line " + std::to_string(lineno) + ": PSI " + std::to_string(i) + " is not declared");
        }
        const Stage from = t.size() == 6 ? keyed(t[5], "from", lineno) : 0;
        sc.answers.push_back({i, keyed(t[4], "use", lineno), from});
        continue;
      }
      throw ParseError(lineno,
                       "expected: adversary track <i> gap=<nat> [step=<nat>] | adversary hold PSI <i> x=<n> margin=<m> [from=<s>]"
                       " | adversary answer PSI <i> use=<u> [from=<s>]");
    }

    if (head == "at") {
      if (t.size() < 4) throw ParseError(lineno, "incomplete directive");
      const Stage s = parse_nat(t[1], lineno, "stage");
      if (s < last_at) {
        throw ConsistencyError("line " + std::to_string(lineno) + ": stage " + std::to_string(s) +
                               " is earlier than " + std::to_string(last_at));
      }
      last_at = s;
      const int i = parse_index(t[3], lineno);
      if (t[2] == "W") {
        if (t.size() != 6 || t[4] != "add") throw ParseError(lineno, "expected: at <s> W <i> add <n>");
        if (!sc.w.contains(i)) {
          throw ConsistencyError("line " + std::to_string(lineno) + ": W " + std::to_string(i) + " is not declared");
        }
        sc.events.push_back({s, WAdd{i, parse_nat(t[5], lineno, "n")}});
        continue;
      }
      const MachineKind k = machine(t[2], lineno);
      if (t.size() != 7) throw ParseError(lineno, "expected: at <s> PHI|PSI <i> x=<n> use=<u> out=<0|1>");
      const auto& declared = k == MachineKind::Phi ? sc.phi : sc.psi;
      if (!declared.contains(i)) {
        throw ConsistencyError("line " + std::to_string(lineno) + ": " + t[2] + " " + std::to_string(i) +
                               " is not declared");
      }
      const Nat x = keyed(t[4], "x", lineno);
      const Nat use = keyed(t[5], "use", lineno);
      const auto out = keyed(t[6], "out", lineno);
      if (out > 1) throw ParseError(lineno, "out must be 0 or 1");
      sc.events.push_back({s, Converge{k, i, x, use, static_cast<int>(out)}});
      continue;
    }
    throw ParseError(lineno, "unknown directive '" + head + "'");
  }
  if (!have_mode) throw ParseError(lineno, "missing mode line");

  if (sc.mode == Scenario::Mode::Fuzz && sc.phi.empty() && sc.psi.empty() && sc.w.empty()) {
    for (int i = 0; i < 3; ++i) {
      sc.phi.insert(i);
      sc.psi.insert(i);
      sc.w.insert(i);
    }
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open scenario " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

EngineConfig engine_config(const Scenario& sc) {
  EngineConfig cfg;
  for (int i : sc.phi) {
    if (sc.w.contains(i)) cfg.r_indices.push_back(i);
  }
  cfg.s_indices.assign(sc.psi.begin(), sc.psi.end());
  cfg.w_indices.assign(sc.w.begin(), sc.w.end());
  // Witnesses and markers start above every scripted W element and Phi argument.
  Nat seed = 0;
  for (const auto& e : sc.events) {
    if (const auto* w = std::get_if<WAdd>(&e.payload)) {
      seed = std::max(seed, w->n + 1);
    } else if (const auto& c = std::get<Converge>(e.payload); c.kind == MachineKind::Phi) {
      seed = std::max(seed, c.x + 1);
    }
  }
  if (sc.mode == Scenario::Mode::Fuzz) seed = std::max(seed, sc.span);
  cfg.fresh_seed = seed;
  return cfg;
}

std::unique_ptr<Adversary> make_adversary(const Scenario& sc) {
  auto adv = std::make_unique<Adversary>();
  if (!sc.events.empty()) adv->add(std::make_unique<ScriptedAdversary>(sc.events));
  for (const auto& t : sc.tracks) adv->add(std::make_unique<TrackingAdversary>(t.i, t.gap, t.step));
  for (const auto& h : sc.holds) adv->add(std::make_unique<HoldAdversary>(h.i, h.x, h.margin, h.from));
  for (const auto& a : sc.answers) adv->add(std::make_unique<AnswerAdversary>(a.i, a.use, a.from));
  if (sc.mode == Scenario::Mode::Fuzz) {
    FuzzParams p;
    p.seed = sc.seed;
    p.rate = sc.rate;
    p.span = sc.span;
    p.grow = sc.grow;
    p.pace = sc.pace;
    p.stubborn = sc.stubborn;
    for (int i : sc.phi) {
      if (sc.w.contains(i)) p.phi.push_back(i);
    }
    p.psi.assign(sc.psi.begin(), sc.psi.end());
    adv->add(std::make_unique<FuzzAdversary>(p));
  }
  return adv;
}

}  // namespace smp
