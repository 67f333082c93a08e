#include "smp/trace.hpp"

#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace smp {

std::string dot_export(const Engine& engine) {
  const Tree& tree = engine.tree();
  std::ostringstream out;
  out << "digraph tree {\n  node [shape=box, fontname=\"monospace\"];\n";
  for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
    if (!engine.ever_visited(id)) continue;
    const TreeNode& n = tree.node(id);
    out << "  n" << id << " [label=\"" << n.label << "\", tooltip=\"" << n.path << "\"];\n";
  }
  for (NodeId id = 0; id < static_cast<NodeId>(tree.size()); ++id) {
    if (!engine.ever_visited(id)) continue;
    const TreeNode& n = tree.node(id);
    for (int o = 0; o < static_cast<int>(n.outcomes.size()); ++o) {
      const NodeId c = tree.peek_child(id, o);
      if (c < 0 || !engine.ever_visited(c)) continue;
      out << "  n" << id << " -> n" << c << " [label=\"" << n.outcomes[static_cast<std::size_t>(o)].token()
          << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

namespace {

class ReplayError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Fields = std::unordered_map<std::string, std::string>;

Fields fields(const std::string& line) {
  Fields f;
  std::istringstream in(line);
  for (std::string tok; in >> tok;) {
    // Free-text details (violation messages) carry bare words.
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    f.emplace(tok.substr(0, eq), tok.substr(eq + 1));
  }
  return f;
}

const std::string& get(const Fields& f, const std::string& key) {
  auto it = f.find(key);
  if (it == f.end()) throw ReplayError("missing " + key);
  return it->second;
}

std::uint64_t nat(const Fields& f, const std::string& key, int base = 10) {
  const std::string& v = get(f, key);
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
  if (ec != std::errc() || p != v.data() + v.size()) throw ReplayError("bad value " + key + "=" + v);
  return out;
}

// The shared state as far as the hash sees it.
struct Mirror {
  std::set<Nat> a, b;
  std::map<int, std::set<Nat>> w;
  std::map<CompKey, Computation> live;
  std::multimap<Nat, CompKey> by_use[2];  // Phi reads A, Psi reads B
  std::uint64_t state = 0;

  void add_member(std::uint64_t code, std::set<Nat>& set, Nat n) {
    if (!set.insert(n).second) throw ReplayError("duplicate member " + std::to_string(n));
    state += member_hash(code, n);
  }

  void enumerate(Oracle o, Nat n) {
    add_member(o == Oracle::A ? 0 : 1, o == Oracle::A ? a : b, n);
    auto& idx = by_use[o == Oracle::A ? 0 : 1];
    for (auto it = idx.upper_bound(n); it != idx.end(); it = idx.erase(it)) {
      auto c = live.find(it->second);
      state -= computation_hash(c->second);
      live.erase(c);
    }
  }

  void converge(const Computation& c) {
    if (live.contains(c.key)) throw ReplayError("convergence on a live computation");
    live.emplace(c.key, c);
    by_use[c.key.kind == MachineKind::Phi ? 0 : 1].emplace(c.use, c.key);
    state += computation_hash(c);
  }
};

}  // namespace

ReplayResult replay_check(const Scenario& sc, std::istream& trace) {
  ReplayResult res;
  Mirror m;
  for (int i : sc.w) m.w[i];
  std::optional<Stage> current;
  bool hashed = false;
  std::string line;
  try {
    while (std::getline(trace, line)) {
      ++res.line;
      if (line.empty()) continue;
      const Fields f = fields(line);
      const Stage s = nat(f, "s");
      const std::string& parity = get(f, "parity");
      if (parity != (s % 2 == 0 ? "A" : "B")) throw ReplayError("parity does not match the stage");
      if (!current || s != *current) {
        if (current && !hashed) throw ReplayError("stage " + std::to_string(*current) + " has no hash");
        if (current ? s != *current + 1 : s != 0) throw ReplayError("stages out of order");
        current = s;
        hashed = false;
      }
      if (hashed) throw ReplayError("event after the stage hash");
      const std::string& kind = get(f, "kind");
      if (kind == "adversary") {
        const std::string& ev = get(f, "ev");
        const int i = static_cast<int>(nat(f, "i"));
        if (ev == "W") {
          auto it = m.w.find(i);
          if (it == m.w.end()) throw ReplayError("W " + std::to_string(i) + " is not declared");
          m.add_member(2 + static_cast<std::uint64_t>(i), it->second, nat(f, "n"));
        } else if (ev == "PHI" || ev == "PSI") {
          Computation c;
          c.key = {ev == "PHI" ? MachineKind::Phi : MachineKind::Psi, i, nat(f, "x")};
          c.use = nat(f, "use");
          c.output = static_cast<int>(nat(f, "out"));
          m.converge(c);
        } else {
          throw ReplayError("unknown adversary event " + ev);
        }
      } else if (kind == "enumerate") {
        const std::string& set = get(f, "set");
        if (set != "A" && set != "B") throw ReplayError("unknown set " + set);
        if (set != parity) throw ReplayError(set + "-enumeration at a " + parity + "-stage");
        m.enumerate(set == "A" ? Oracle::A : Oracle::B, nat(f, "n"));
      } else if (kind == "hash") {
        const std::uint64_t want = nat(f, "h", 16);
        const std::uint64_t got = stage_hash(s, m.state);
        if (got != want) throw ReplayError("hash mismatch at stage " + std::to_string(s));
        hashed = true;
        ++res.hashes;
        res.stages = s + 1;
      }
    }
    if (current && !hashed) throw ReplayError("stage " + std::to_string(*current) + " has no hash");
    if (res.stages != sc.stages) {
      throw ReplayError("trace covers " + std::to_string(res.stages) + " stages, scenario has " +
                        std::to_string(sc.stages));
    }
  } catch (const std::exception& e) {
    res.ok = false;
    res.error = e.what();
  }
  return res;
}

}  // namespace smp
