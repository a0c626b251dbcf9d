#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qsctl/guard.hpp"

namespace qsctl {

// One guarded transition of a component automaton. from == to is an "ear"
// (self-loop); ears are legal.
struct ModelArc {
  std::string from;
  std::string to;
  Guard guard;
};

// A Moore-style component automaton: signals are emitted by states, guards
// read the combined signal state of the whole system plus external inputs.
struct Automaton {
  std::string name;
  std::vector<std::string> states;  // declaration order; first is the default initial
  std::string initial;
  std::map<std::string, std::set<std::string>> outputs;
  std::vector<ModelArc> arcs;

  bool has_state(const std::string& s) const {
    for (const auto& st : states)
      if (st == s) return true;
    return false;
  }

  const std::set<std::string>& outputs_of(const std::string& s) const {
    static const std::set<std::string> kEmpty;
    auto it = outputs.find(s);
    return it == outputs.end() ? kEmpty : it->second;
  }

  std::vector<const ModelArc*> out_arcs(const std::string& s) const {
    std::vector<const ModelArc*> out;
    for (const ModelArc& a : arcs)
      if (a.from == s) out.push_back(&a);
    return out;
  }
};

struct SystemSignals {
  std::set<std::string> internal;  // emitted by some state of some automaton
  std::set<std::string> external;  // declared inputs from the outside world
};

struct System {
  std::vector<Automaton> automata;
  std::set<std::string> external_signals;
};

// Partition of the system's alphabet into generated and external signals.
inline SystemSignals signals_of(const System& sys) {
  SystemSignals sig;
  for (const Automaton& a : sys.automata)
    for (const auto& [_, outs] : a.outputs) sig.internal.insert(outs.begin(), outs.end());
  sig.external = sys.external_signals;
  return sig;
}

// Checks every structural invariant and reports all violations; an empty
// result means the system is valid. Never throws.
inline std::vector<Diagnostic> validate_system(const System& sys) {
  std::vector<Diagnostic> diags;
  SystemSignals sig = signals_of(sys);
  std::set<std::string> alphabet = sig.internal;
  alphabet.insert(sig.external.begin(), sig.external.end());

  std::set<std::string> automaton_names;
  for (const Automaton& a : sys.automata) {
    if (!automaton_names.insert(a.name).second)
      diags.push_back({a.name, "", "duplicate automaton name"});

    std::set<std::string> state_names;
    for (const std::string& s : a.states)
      if (!state_names.insert(s).second)
        diags.push_back({a.name, s, "duplicate state name"});

    if (a.states.empty()) {
      diags.push_back({a.name, "", "automaton has no states"});
      continue;
    }
    if (!a.has_state(a.initial))
      diags.push_back({a.name, a.initial, "initial state is not declared"});

    for (const ModelArc& arc : a.arcs) {
      if (!a.has_state(arc.from))
        diags.push_back({a.name, arc.from, "arc leaves an undeclared state"});
      if (!a.has_state(arc.to))
        diags.push_back({a.name, arc.to, "arc enters an undeclared state"});
      for (const std::string& ref : arc.guard.signals())
        if (!alphabet.count(ref))
          diags.push_back({a.name, arc.from,
                           "guard references undeclared signal '" + ref + "'"});
    }

    for (const std::string& s : a.states) {
      std::vector<Guard> out;
      for (const ModelArc& arc : a.arcs)
        if (arc.from == s) out.push_back(arc.guard);
      bool refs_known = true;
      for (const Guard& g : out)
        for (const std::string& ref : g.signals())
          if (!alphabet.count(ref)) refs_known = false;
      if (refs_known && !is_complete(out, alphabet))
        diags.push_back({a.name, s, "incomplete at state '" + s +
                                        "': out-guards do not cover all inputs"});
    }
  }

  for (const std::string& s : sig.external)
    if (sig.internal.count(s))
      diags.push_back({"", s,
                       "signal ownership conflict: '" + s +
                           "' is declared external but generated by a state"});
  return diags;
}

// ---------------------------------------------------------------------------
// Model file format, one directive per line ('#' starts a comment):
//
//   automaton NAME
//   state NAME [emits sig, sig, ...]
//   initial NAME                       (default: first state listed)
//   arc FROM -> TO [when GUARD]        (default guard: 1)
//   external sig, sig, ...
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_names(const std::string& list, int line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : list + ",") {
    if (c == ',') {
      cur = trim(cur);
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (out.empty())
    throw parse_error("model line " + std::to_string(line) +
                      ": expected a name list");
  return out;
}

}  // namespace detail

inline System parse_model(std::string_view text) {
  System sys;
  Automaton* cur = nullptr;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  auto need_automaton = [&](const char* what) -> Automaton& {
    if (!cur)
      throw parse_error("model line " + std::to_string(line) + ": '" +
                        std::string(what) + "' outside of an automaton");
    return *cur;
  };
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::string s = detail::trim(raw);
    if (s.empty()) continue;
    std::istringstream ls(s);
    std::string kw;
    ls >> kw;
    if (kw == "automaton") {
      std::string name;
      ls >> name;
      if (name.empty())
        throw parse_error("model line " + std::to_string(line) +
                          ": automaton needs a name");
      sys.automata.push_back(Automaton{name, {}, "", {}, {}});
      cur = &sys.automata.back();
    } else if (kw == "state") {
      Automaton& a = need_automaton("state");
      std::string name, emits;
      ls >> name >> emits;
      if (name.empty())
        throw parse_error("model line " + std::to_string(line) +
                          ": state needs a name");
      a.states.push_back(name);
      if (a.initial.empty()) a.initial = name;
      if (!emits.empty()) {
        if (emits != "emits")
          throw parse_error("model line " + std::to_string(line) +
                            ": expected 'emits', got '" + emits + "'");
        std::string rest;
        std::getline(ls, rest);
        for (const std::string& sig : detail::split_names(rest, line))
          a.outputs[name].insert(sig);
      }
    } else if (kw == "initial") {
      Automaton& a = need_automaton("initial");
      std::string name;
      ls >> name;
      if (name.empty())
        throw parse_error("model line " + std::to_string(line) +
                          ": initial needs a state name");
      a.initial = name;
    } else if (kw == "arc") {
      Automaton& a = need_automaton("arc");
      std::string from, arrow, to, when;
      ls >> from >> arrow >> to >> when;
      if (from.empty() || arrow != "->" || to.empty())
        throw parse_error("model line " + std::to_string(line) +
                          ": expected 'arc FROM -> TO [when GUARD]'");
      Guard g = Guard::constant(true);
      if (!when.empty()) {
        if (when != "when")
          throw parse_error("model line " + std::to_string(line) +
                            ": expected 'when', got '" + when + "'");
        std::string rest;
        std::getline(ls, rest);
        try {
          g = parse_guard(rest);
        } catch (const parse_error& e) {
          throw parse_error("model line " + std::to_string(line) + ": " +
                            e.what());
        }
      }
      a.arcs.push_back(ModelArc{from, to, g});
    } else if (kw == "external") {
      std::string rest;
      std::getline(ls, rest);
      for (const std::string& sig : detail::split_names(rest, line))
        sys.external_signals.insert(sig);
    } else {
      throw parse_error("model line " + std::to_string(line) +
                        ": unknown directive '" + kw + "'");
    }
  }
  return sys;
}

}  // namespace qsctl
