#pragma once

#include <string>

#include <json.hpp>

#include "qsctl/cbs.hpp"
#include "qsctl/charsets.hpp"

// JSON renderings of graphs, check reports and characteristic sets. All
// output is deterministically ordered so identical inputs produce identical
// bytes.

namespace qsctl {

using json = nlohmann::ordered_json;

inline json rgraph_to_json(const RGraph& rg) {
  json j;
  j["automata"] = rg.automata;
  j["initial"] = rg.initial;
  json states = json::array();
  for (StateId s = 0; s < rg.state_count(); ++s) {
    const GlobalState& g = rg.states[s];
    json locals = json::array();
    for (std::size_t k = 0; k < g.locals.size(); ++k)
      locals.push_back(rg.local_names[k][g.locals[k]]);
    states.push_back(json{{"id", s},
                          {"name", g.name},
                          {"locals", locals},
                          {"outputs", std::vector<std::string>(
                                          g.outputs.begin(), g.outputs.end())},
                          {"terminal", rg.terminal.empty() ? false
                                                           : bool(rg.terminal[s])}});
  }
  j["states"] = states;
  json arcs = json::array();
  for (const RArc& a : rg.arcs) {
    json moved = json::array();
    for (bool m : a.moved) moved.push_back(m);
    arcs.push_back(json{{"from", a.from},
                        {"to", a.to},
                        {"guard", a.guard.text()},
                        {"moved", moved}});
  }
  j["arcs"] = arcs;
  return j;
}

inline json charsets_to_json(const RGraph& rg, const CharSets& cs) {
  auto names = [&](const std::set<StateId>& ids) {
    json out = json::array();
    for (StateId s : ids) out.push_back(rg.state_name(s));
    return out;
  };
  json j;
  j["state"] = rg.state_name(cs.state);
  j["fut"] = names(cs.fut);
  j["pas"] = names(cs.pas);
  j["cyc"] = names(cs.cyc);
  j["end"] = names(cs.end_);
  j["beg"] = names(cs.beg);
  j["state_count"] = cs.gs;
  return j;
}

// First arc connecting two states, in stored order.
inline const RArc* arc_between(const RGraph& rg, StateId from, StateId to) {
  for (int ai : rg.out[from])
    if (rg.arcs[ai].to == to) return &rg.arcs[ai];
  return nullptr;
}

inline json witness_to_json(const RGraph& rg, const Witness& w) {
  json path = json::array();
  for (StateId s : w.path) path.push_back(rg.state_name(s));
  json guards = json::array();
  for (std::size_t i = 0; i + 1 < w.path.size(); ++i) {
    const RArc* a = arc_between(rg, w.path[i], w.path[i + 1]);
    guards.push_back(a ? a->guard.text() : "?");
  }
  json j;
  j["path"] = path;
  j["guards"] = guards;
  if (w.cycle_start) {
    j["cycle_start"] = static_cast<int>(*w.cycle_start);
    const RArc* back = arc_between(rg, w.path.back(), w.path[*w.cycle_start]);
    j["cycle_guard"] = back ? back->guard.text() : "?";
  } else {
    j["cycle_start"] = nullptr;
  }
  return j;
}

struct CheckReport {
  std::string formula;
  std::string anchor;
  bool verdict = false;
  std::optional<Witness> witness;
  bool want_witness = false;
  bool want_stats = false;
  EvalStats stats;
  std::optional<bool> oracle_agrees;
};

inline json report_to_json(const RGraph& rg, const CheckReport& r) {
  json j;
  j["formula"] = r.formula;
  j["anchor"] = r.anchor;
  j["verdict"] = r.verdict;
  if (r.want_witness) {
    if (r.witness)
      j["witness"] = witness_to_json(rg, *r.witness);
    else
      j["witness"] = nullptr;
  }
  if (r.want_stats) {
    j["stats"] = json{{"evaluations", r.stats.evals},
                      {"memo_hits", r.stats.memo_hits},
                      {"spheres_built", r.stats.total.spheres_built},
                      {"states_visited", r.stats.total.states_visited},
                      {"arcs_followed", r.stats.total.arcs_followed}};
  }
  if (r.oracle_agrees) j["oracle_agrees"] = *r.oracle_agrees;
  return j;
}

}  // namespace qsctl
