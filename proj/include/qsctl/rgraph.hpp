#pragma once

#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qsctl/model.hpp"

namespace qsctl {

// One state of the composed reachability graph: a vector of component local
// states (system order) plus the union of the signals those locals emit.
struct GlobalState {
  std::vector<int> locals;  // index into RGraph::local_names[k]
  std::set<std::string> outputs;
  std::string name;  // local names joined with '_'
};

// A composed arc. moved[k] is true exactly when component k's contributing
// arc was a non-ear, i.e. the projection onto k changed.
struct RArc {
  StateId from = 0;
  StateId to = 0;
  Guard guard;
  std::vector<bool> moved;
};

// The reachability graph. compose() produces the full RG; to_rg_at() prunes
// ears from non-terminal states, giving the RG@ form every evaluator works
// on. States carry stable ids in canonical BFS order, so identical systems
// compose to identical graphs.
struct RGraph {
  std::vector<std::string> automata;                  // component names
  std::vector<std::vector<std::string>> local_names;  // per component
  std::vector<GlobalState> states;
  StateId initial = 0;
  std::vector<RArc> arcs;
  std::vector<bool> terminal;  // all out-arcs are self-loops
  bool rg_at = false;

  // Derived indexes, rebuilt by finalize().
  std::vector<std::vector<int>> out;  // arc indices by source
  std::vector<std::vector<int>> in;   // arc indices by target
  std::map<std::string, StateId> name_to_id;

  int state_count() const { return static_cast<int>(states.size()); }
  int arc_count() const { return static_cast<int>(arcs.size()); }

  void check_state(StateId s) const {
    if (s < 0 || s >= state_count())
      throw eval_error("unknown state id " + std::to_string(s));
  }

  const std::string& state_name(StateId s) const {
    check_state(s);
    return states[s].name;
  }

  StateId find_state(const std::string& name) const {
    auto it = name_to_id.find(name);
    if (it == name_to_id.end())
      throw eval_error("unknown state '" + name + "'");
    return it->second;
  }

  int automaton_index(const std::string& name) const {
    for (std::size_t k = 0; k < automata.size(); ++k)
      if (automata[k] == name) return static_cast<int>(k);
    throw eval_error("unknown automaton '" + name + "'");
  }

  void finalize() {
    out.assign(states.size(), {});
    in.assign(states.size(), {});
    for (std::size_t i = 0; i < arcs.size(); ++i) {
      out[arcs[i].from].push_back(static_cast<int>(i));
      in[arcs[i].to].push_back(static_cast<int>(i));
    }
    terminal.assign(states.size(), false);
    for (StateId s = 0; s < state_count(); ++s) {
      bool all_self = !out[s].empty();
      for (int ai : out[s])
        if (arcs[ai].to != s) all_self = false;
      terminal[s] = all_self;
    }
    name_to_id.clear();
    for (StateId s = 0; s < state_count(); ++s) {
      auto [it, fresh] = name_to_id.emplace(states[s].name, s);
      if (!fresh) {
        // Underscore-joined names can collide; disambiguate with the id.
        states[s].name += "#" + std::to_string(s);
        name_to_id.emplace(states[s].name, s);
      }
    }
  }
};

// Breadth-first product construction. From every reached global state the
// emitted internal signals are fixed active, all other internal signals
// fixed inactive (closed world), and the external signals stay free; a joint
// arc is added for every per-component arc tuple whose conjoined guard is
// satisfiable under that split. All components step in lock-step, ears
// standing for "component stays". Parallel joint arcs with the same
// endpoints are merged by disjoining their guards (their moved masks are
// necessarily equal).
inline RGraph compose(const System& sys, std::size_t state_limit = 1000000) {
  RGraph rg;
  const std::size_t n = sys.automata.size();
  SystemSignals sig = signals_of(sys);

  for (const Automaton& a : sys.automata) {
    rg.automata.push_back(a.name);
    rg.local_names.push_back(a.states);
  }

  // Per component, per local state: (guard, target local index, ear?).
  struct LocalArc {
    Guard guard;
    int to;
    bool ear;
  };
  std::vector<std::vector<std::vector<LocalArc>>> local_arcs(n);
  std::vector<std::map<std::string, int>> local_index(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Automaton& a = sys.automata[k];
    for (std::size_t i = 0; i < a.states.size(); ++i)
      local_index[k][a.states[i]] = static_cast<int>(i);
    local_arcs[k].resize(a.states.size());
    for (const ModelArc& arc : a.arcs) {
      int from = local_index[k].at(arc.from);
      int to = local_index[k].at(arc.to);
      local_arcs[k][from].push_back(LocalArc{arc.guard, to, from == to});
    }
  }

  auto make_state = [&](const std::vector<int>& locals) {
    GlobalState g;
    g.locals = locals;
    std::vector<std::string> parts;
    for (std::size_t k = 0; k < n; ++k) {
      const Automaton& a = sys.automata[k];
      const std::string& local = a.states[locals[k]];
      const auto& outs = a.outputs_of(local);
      g.outputs.insert(outs.begin(), outs.end());
      parts.push_back(local);
    }
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (k) g.name += '_';
      g.name += parts[k];
    }
    if (n == 0) g.name = "empty";
    return g;
  };

  std::map<std::vector<int>, StateId> seen;
  std::deque<StateId> queue;

  std::vector<int> init(n);
  for (std::size_t k = 0; k < n; ++k)
    init[k] = local_index[k].at(sys.automata[k].initial);
  rg.states.push_back(make_state(init));
  seen[init] = 0;
  queue.push_back(0);

  while (!queue.empty()) {
    StateId sid = queue.front();
    queue.pop_front();
    const GlobalState g = rg.states[sid];  // copy: states vector may grow

    Valuation fixed;
    for (const std::string& s : sig.internal) fixed[s] = g.outputs.count(s) > 0;

    // Odometer over one out-arc per component.
    std::vector<std::size_t> pick(n, 0);
    bool exhausted = false;
    for (std::size_t k = 0; k < n; ++k)
      if (local_arcs[k][g.locals[k]].empty()) exhausted = true;

    std::map<std::pair<StateId, StateId>, int> merged;  // (from,to) -> arc index

    while (!exhausted) {
      std::vector<Guard> parts;
      std::vector<int> target(n);
      std::vector<bool> moved(n, false);
      for (std::size_t k = 0; k < n; ++k) {
        const LocalArc& la = local_arcs[k][g.locals[k]][pick[k]];
        parts.push_back(la.guard);
        target[k] = la.to;
        moved[k] = !la.ear;
      }
      Guard joint = Guard::conj(std::move(parts));
      if (satisfiable_under(joint, fixed, sig.external).satisfiable) {
        StateId tid;
        auto it = seen.find(target);
        if (it != seen.end()) {
          tid = it->second;
        } else {
          if (rg.states.size() >= state_limit)
            throw resource_error("reachability graph exceeds the state limit of " +
                                 std::to_string(state_limit) + " states");
          tid = static_cast<StateId>(rg.states.size());
          rg.states.push_back(make_state(target));
          seen[target] = tid;
          queue.push_back(tid);
        }
        auto key = std::make_pair(sid, tid);
        auto mit = merged.find(key);
        if (mit != merged.end()) {
          RArc& existing = rg.arcs[mit->second];
          existing.guard = Guard::disj({existing.guard, joint});
        } else {
          merged[key] = static_cast<int>(rg.arcs.size());
          rg.arcs.push_back(RArc{sid, tid, joint, moved});
        }
      }
      // Advance the odometer.
      std::size_t k = 0;
      for (; k < n; ++k) {
        if (++pick[k] < local_arcs[k][g.locals[k]].size()) break;
        pick[k] = 0;
      }
      if (k == n) exhausted = true;
    }

    // The empty product contributes a single state with one always-enabled
    // ear, produced by the empty odometer tuple above.
    if (n == 0) break;
  }

  rg.finalize();
  return rg;
}

// RG@ form: a state is terminal iff all its outgoing arcs are self-loops.
// Non-terminal states lose their self-loops; terminal states keep exactly
// one (guards of duplicates disjoined), so the succession relation stays
// total.
inline RGraph to_rg_at(const RGraph& rg) {
  RGraph out = rg;
  out.arcs.clear();
  std::vector<bool> term(rg.states.size(), false);
  for (StateId s = 0; s < rg.state_count(); ++s) {
    bool all_self = !rg.out[s].empty();
    for (int ai : rg.out[s])
      if (rg.arcs[ai].to != s) all_self = false;
    term[s] = all_self;
  }
  for (StateId s = 0; s < rg.state_count(); ++s) {
    int kept_self = -1;
    for (int ai : rg.out[s]) {
      const RArc& a = rg.arcs[ai];
      if (a.to == s) {
        if (!term[s]) continue;
        if (kept_self >= 0) {
          RArc& k = out.arcs[kept_self];
          k.guard = Guard::disj({k.guard, a.guard});
          continue;
        }
        kept_self = static_cast<int>(out.arcs.size());
      }
      out.arcs.push_back(a);
    }
  }
  out.rg_at = true;
  out.finalize();
  return out;
}

// Deterministic DOT text: states in id order, arcs in stored order. Byte
// stable for identical graphs.
inline std::string export_dot(const RGraph& rg) {
  std::string dot = "digraph rg {\n  rankdir=LR;\n";
  for (StateId s = 0; s < rg.state_count(); ++s) {
    const GlobalState& g = rg.states[s];
    std::string label = g.name + "\\n{";
    bool first = true;
    for (const std::string& sig : g.outputs) {
      if (!first) label += ",";
      first = false;
      label += sig;
    }
    label += "}";
    dot += "  s" + std::to_string(s) + " [label=\"" + label + "\"";
    if (s == rg.initial) dot += ", style=bold";
    if (!rg.terminal.empty() && rg.terminal[s]) dot += ", peripheries=2";
    dot += "];\n";
  }
  for (const RArc& a : rg.arcs) {
    dot += "  s" + std::to_string(a.from) + " -> s" + std::to_string(a.to) +
           " [label=\"" + a.guard.text() + "\"];\n";
  }
  dot += "}\n";
  return dot;
}

}  // namespace qsctl
