#pragma once

#include <deque>
#include <set>
#include <vector>

#include "qsctl/rgraph.hpp"

namespace qsctl {

namespace detail {

// BFS over out-arcs (forward) or in-arcs (reverse), starting from the
// neighbours of s. s itself enters the result only when a path of length
// >= 1 leads back to it, i.e. when s lies on a cycle.
inline std::set<StateId> reach_from(const RGraph& rg, StateId s, bool forward) {
  rg.check_state(s);
  std::set<StateId> result;
  std::vector<char> visited(rg.states.size(), 0);
  std::deque<StateId> queue;
  const auto& adj = forward ? rg.out : rg.in;
  auto push_neighbours = [&](StateId u) {
    for (int ai : adj[u]) {
      StateId v = forward ? rg.arcs[ai].to : rg.arcs[ai].from;
      if (!visited[v]) {
        visited[v] = 1;
        result.insert(v);
        queue.push_back(v);
      }
    }
  };
  push_neighbours(s);
  while (!queue.empty()) {
    StateId u = queue.front();
    queue.pop_front();
    push_neighbours(u);
  }
  return result;
}

}  // namespace detail

// States reachable from s by a path of length >= 1.
inline std::set<StateId> future(const RGraph& rg, StateId s) {
  return detail::reach_from(rg, s, true);
}

// States from which s is reachable by a path of length >= 1.
inline std::set<StateId> past(const RGraph& rg, StateId s) {
  return detail::reach_from(rg, s, false);
}

// The five characteristic sets of a state. The identities
//   cyc = fut ∩ pas,  end_ = fut − pas,  beg = pas − fut,
//   beg = pas − cyc,  end_ = fut − cyc
// hold by construction; gs records the total state count of the graph.
struct CharSets {
  StateId state = 0;
  std::set<StateId> fut;
  std::set<StateId> pas;
  std::set<StateId> cyc;   // cyclic future/past: fut ∩ pas
  std::set<StateId> end_;  // ending future: fut − pas
  std::set<StateId> beg;   // beginning past: pas − fut
  int gs = 0;

  bool on_cycle() const { return cyc.count(state) > 0; }
};

inline CharSets char_sets(const RGraph& rg, StateId s) {
  CharSets cs;
  cs.state = s;
  cs.fut = future(rg, s);
  cs.pas = past(rg, s);
  cs.gs = rg.state_count();
  for (StateId u : cs.fut) {
    if (cs.pas.count(u))
      cs.cyc.insert(u);
    else
      cs.end_.insert(u);
  }
  for (StateId u : cs.pas)
    if (!cs.fut.count(u)) cs.beg.insert(u);
  return cs;
}

}  // namespace qsctl
