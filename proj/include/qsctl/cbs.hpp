#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qsctl/formula.hpp"

namespace qsctl {

// ---------------------------------------------------------------------------
// The sphere-search rule
//
// SPH_0 is the seed. Sphere i is scanned in insertion order; a state where
// cond1 holds ends the run with cond1res immediately. Otherwise every state
// where cond2 holds gets its successors inserted into sphere i+1, skipping
// states already in any sphere and states outside the search universe. An
// empty next sphere ends the run with cond2res.
// ---------------------------------------------------------------------------

struct CbsStats {
  int spheres_built = 0;      // non-empty spheres constructed, seed included
  long states_visited = 0;    // states inserted into spheres
  long arcs_followed = 0;     // out-arcs enumerated while expanding
};

struct CbsSpec {
  // Search universe; states outside it never enter a sphere. Empty optional
  // means the whole graph.
  std::optional<std::set<StateId>> src;
  std::vector<StateId> seed;  // SPH_0, in scan order
  std::function<bool(StateId)> cond1;  // early-termination condition
  bool cond1res = false;
  std::function<bool(StateId)> cond2;  // expansion condition
  bool cond2res = true;
};

struct CbsOutcome {
  bool verdict = false;
  std::optional<StateId> trigger;        // state where cond1 fired
  std::vector<StateId> witness_path;     // seed -> trigger via parent links
  CbsStats stats;
  std::vector<std::vector<StateId>> spheres;  // contents of each non-empty sphere
  std::map<StateId, StateId> parent;     // insertion parents (seeds absent)
};

// The counterexample path of a finished run, or none for cond2res verdicts.
inline std::optional<std::vector<StateId>> extract_witness(const CbsOutcome& o) {
  if (!o.trigger) return std::nullopt;
  return o.witness_path;
}

inline CbsOutcome run_cbs(const RGraph& rg, const CbsSpec& spec) {
  CbsOutcome out;
  auto in_src = [&](StateId s) { return !spec.src || spec.src->count(s) > 0; };
  for (StateId s : spec.seed) {
    rg.check_state(s);
    if (!in_src(s))
      throw config_error("sphere seed state " + std::to_string(s) +
                         " lies outside the search universe");
  }

  std::vector<char> visited(rg.states.size(), 0);
  std::vector<StateId> sphere;
  for (StateId s : spec.seed) {
    if (visited[s]) continue;
    visited[s] = 1;
    sphere.push_back(s);
  }

  auto finish_hit = [&](StateId t) {
    out.verdict = spec.cond1res;
    out.trigger = t;
    std::vector<StateId> path{t};
    auto it = out.parent.find(t);
    while (it != out.parent.end()) {
      path.push_back(it->second);
      it = out.parent.find(it->second);
    }
    out.witness_path.assign(path.rbegin(), path.rend());
    return out;
  };

  while (!sphere.empty()) {
    out.stats.spheres_built += 1;
    out.stats.states_visited += static_cast<long>(sphere.size());
    out.spheres.push_back(sphere);

    for (StateId s : sphere)
      if (spec.cond1(s)) return finish_hit(s);

    std::vector<StateId> next;
    for (StateId s : sphere) {
      if (!spec.cond2(s)) continue;
      for (int ai : rg.out[s]) {
        out.stats.arcs_followed += 1;
        StateId t = rg.arcs[ai].to;
        if (visited[t] || !in_src(t)) continue;
        visited[t] = 1;
        out.parent[t] = s;
        next.push_back(t);
      }
    }
    sphere = std::move(next);
  }

  out.verdict = spec.cond2res;
  return out;
}

// Component k is terminal at s when no arc reachable from s ever moves k;
// from s on, the projection onto k is frozen.
inline bool component_terminal(const RGraph& rg, StateId s, int component) {
  rg.check_state(s);
  std::vector<char> visited(rg.states.size(), 0);
  std::vector<StateId> stack{s};
  visited[s] = 1;
  while (!stack.empty()) {
    StateId u = stack.back();
    stack.pop_back();
    for (int ai : rg.out[u]) {
      const RArc& a = rg.arcs[ai];
      if (!a.moved.empty() && a.moved[component]) return false;
      if (!visited[a.to]) {
        visited[a.to] = 1;
        stack.push_back(a.to);
      }
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Top-down formula evaluation
// ---------------------------------------------------------------------------

// A counterexample produced by a false verdict: a path from the anchor of
// the certifying run, optionally closed into a lasso. `node` is the formula
// node the path refutes at path.front().
struct Witness {
  std::vector<StateId> path;
  std::optional<std::size_t> cycle_start;  // index where the lasso cycle begins
  const FormulaNode* node = nullptr;
};

struct EvalResult {
  bool value = false;
  std::optional<Witness> witness;  // only accompanies false verdicts
};

// One sphere-search run performed on behalf of a formula node, kept for
// statistics and for the arc-bound checks.
struct RunRecord {
  const FormulaNode* node = nullptr;
  FKind op = FKind::ConstTrue;
  StateId anchor = 0;
  CbsStats stats;
  long src_arcs = 0;  // arc count of the run's search universe
};

struct EvalStats {
  long evals = 0;      // eval() dispatches actually performed
  long memo_hits = 0;
  CbsStats total;      // summed over all runs
};

// Per-evaluation context: the graph, the variable bindings, the memo cache,
// and bookkeeping. A context is bound to one formula tree (free-variable
// sets are precomputed per node). Contexts are not shared across threads.
class EvalContext {
 public:
  EvalContext(const RGraph& rg, const Formula& root,
              const std::set<std::string>& prebound = {})
      : rg_(&rg), free_vars_(collect_free_vars(root, prebound)) {}

  const RGraph& rg() const { return *rg_; }
  Environment& env() { return env_; }
  const Environment& env() const { return env_; }

  void set_use_memo(bool on) { use_memo_ = on; }
  bool use_memo() const { return use_memo_; }

  const std::vector<RunRecord>& run_log() const { return run_log_; }
  const EvalStats& stats() const { return stats_; }

  // {s} ∪ FUT(s), cached: the search universe of AUw/AG runs anchored at s.
  const std::set<StateId>& universe_of(StateId s) {
    auto it = universes_.find(s);
    if (it != universes_.end()) return it->second;
    std::set<StateId> u = future(*rg_, s);
    u.insert(s);
    return universes_.emplace(s, std::move(u)).first->second;
  }

  long arcs_within(const std::set<StateId>& src) {
    long n = 0;
    for (StateId s : src) n += static_cast<long>(rg_->out[s].size());
    return n;
  }

  void log_run(const FormulaNode* node, FKind op, StateId anchor,
               const CbsStats& stats, long src_arcs) {
    run_log_.push_back(RunRecord{node, op, anchor, stats, src_arcs});
    stats_.total.spheres_built += stats.spheres_built;
    stats_.total.states_visited += stats.states_visited;
    stats_.total.arcs_followed += stats.arcs_followed;
  }

  // --- memoization, keyed by node, state, and the bindings of exactly the
  // --- variables free in that node
  using MemoKey = std::tuple<const FormulaNode*, StateId,
                             std::vector<std::pair<std::string, StateId>>>;

  std::optional<EvalResult> memo_find(const FormulaNode* node, StateId s) {
    if (!use_memo_) return std::nullopt;
    auto it = memo_.find(key_for(node, s));
    if (it == memo_.end()) return std::nullopt;
    ++stats_.memo_hits;
    return it->second;
  }

  void memo_store(const FormulaNode* node, StateId s, const EvalResult& r) {
    if (use_memo_) memo_[key_for(node, s)] = r;
  }

  void count_eval() { ++stats_.evals; }

 private:
  MemoKey key_for(const FormulaNode* node, StateId s) const {
    std::vector<std::pair<std::string, StateId>> binds;
    auto it = free_vars_.find(node);
    if (it != free_vars_.end()) {
      for (const std::string& v : it->second) {
        auto b = env_.find(v);
        if (b != env_.end()) binds.emplace_back(v, b->second);
      }
    }
    return {node, s, std::move(binds)};
  }

  const RGraph* rg_;
  Environment env_;
  FreeVarMap free_vars_;
  bool use_memo_ = true;
  std::map<MemoKey, EvalResult> memo_;
  std::map<StateId, std::set<StateId>> universes_;
  std::vector<RunRecord> run_log_;
  EvalStats stats_;
};

EvalResult eval(const Formula& f, StateId s, EvalContext& ctx);

namespace detail {

inline bool holds(const Formula& f, StateId s, EvalContext& ctx) {
  return eval(f, s, ctx).value;
}

// Weak until by sphere search: expand through states where phi holds and psi
// does not; any reached state satisfying neither ends the run false. The
// expansion condition phi ∧ ¬psi stops paths at their first psi-state, so a
// state beyond it can no longer flip the verdict.
inline EvalResult eval_auw(const FormulaNode* node, const Formula& phi,
                           const Formula& psi, StateId s, EvalContext& ctx) {
  const std::set<StateId>& universe = ctx.universe_of(s);
  CbsSpec spec;
  spec.src = universe;
  spec.seed = {s};
  spec.cond1 = [&](StateId t) {
    return !holds(phi, t, ctx) && !holds(psi, t, ctx);
  };
  spec.cond1res = false;
  spec.cond2 = [&](StateId t) {
    return holds(phi, t, ctx) && !holds(psi, t, ctx);
  };
  spec.cond2res = true;
  CbsOutcome out = run_cbs(ctx.rg(), spec);
  ctx.log_run(node, FKind::AUw, s, out.stats, ctx.arcs_within(universe));
  EvalResult r{out.verdict, std::nullopt};
  if (!out.verdict && out.trigger)
    r.witness = Witness{out.witness_path, std::nullopt, node};
  return r;
}

// AF by the danger set: D is the set of ¬phi states reachable from s through
// ¬phi states. The verdict is false exactly when D contains a cycle — that
// cycle plus its approach path is a run on which phi never holds. A self-loop
// at a ¬phi state is such a cycle and ends the search immediately.
inline EvalResult eval_af(const FormulaNode* node, const Formula& phi,
                          StateId s, EvalContext& ctx) {
  const RGraph& rg = ctx.rg();
  auto self_loop = [&](StateId t) {
    for (int ai : rg.out[t])
      if (rg.arcs[ai].to == t) return true;
    return false;
  };

  CbsSpec spec;
  spec.seed = holds(phi, s, ctx) ? std::vector<StateId>{} : std::vector<StateId>{s};
  spec.cond1 = [&](StateId t) { return !holds(phi, t, ctx) && self_loop(t); };
  spec.cond1res = false;
  spec.cond2 = [&](StateId t) { return !holds(phi, t, ctx); };
  spec.cond2res = true;
  CbsOutcome out = run_cbs(rg, spec);
  ctx.log_run(node, FKind::AF, s, out.stats, rg.arc_count());

  if (out.trigger) {
    // Lasso: approach path to the looping state, cycle = the ear itself.
    Witness w;
    w.path = out.witness_path;
    w.cycle_start = w.path.size() - 1;
    w.node = node;
    return {false, w};
  }

  // Danger set: the ¬phi states among the sphere members (phi-successors are
  // inserted into spheres but never expanded).
  std::set<StateId> danger;
  for (const auto& sphere : out.spheres)
    for (StateId t : sphere)
      if (!holds(phi, t, ctx)) danger.insert(t);

  // Back-edge search restricted to the danger set.
  std::map<StateId, int> color;  // 0 white, 1 gray, 2 black
  for (StateId t : danger) color[t] = 0;
  std::vector<StateId> dfs_path;
  std::vector<StateId> cycle;
  std::function<bool(StateId)> dfs = [&](StateId u) {
    color[u] = 1;
    dfs_path.push_back(u);
    for (int ai : rg.out[u]) {
      StateId v = rg.arcs[ai].to;
      auto it = color.find(v);
      if (it == color.end()) continue;
      if (it->second == 1) {
        auto begin = std::find(dfs_path.begin(), dfs_path.end(), v);
        cycle.assign(begin, dfs_path.end());
        return true;
      }
      if (it->second == 0 && dfs(v)) return true;
    }
    color[u] = 2;
    dfs_path.pop_back();
    return false;
  };
  for (StateId t : danger) {
    if (color[t] == 0 && dfs(t)) break;
  }
  if (cycle.empty()) return {true, std::nullopt};

  // Stem from the anchor to the cycle entry, via the run's parent links.
  Witness w;
  w.node = node;
  StateId entry = cycle.front();
  std::vector<StateId> stem{entry};
  auto it = out.parent.find(entry);
  while (it != out.parent.end()) {
    stem.push_back(it->second);
    it = out.parent.find(it->second);
  }
  w.path.assign(stem.rbegin(), stem.rend());
  w.cycle_start = w.path.size() - 1;
  for (std::size_t i = 1; i < cycle.size(); ++i) w.path.push_back(cycle[i]);
  return {false, w};
}

// First-move semantics for AX[a]: explore the region reachable without
// moving component a; every arc that does move a must land on a phi state.
// Branches on which a never moves are vacuously satisfied, which covers
// anchors whose projection onto a is terminal.
inline EvalResult eval_axa(const FormulaNode* node, StateId s, EvalContext& ctx) {
  const RGraph& rg = ctx.rg();
  const Formula& phi = node->kids[0];
  const int comp = rg.automaton_index(node->automaton);

  CbsStats stats;
  std::vector<char> visited(rg.states.size(), 0);
  std::map<StateId, StateId> parent;
  std::vector<StateId> sphere{s};
  visited[s] = 1;
  std::set<StateId> checked_targets;

  EvalResult result{true, std::nullopt};
  while (!sphere.empty() && result.value) {
    stats.spheres_built += 1;
    stats.states_visited += static_cast<long>(sphere.size());
    std::vector<StateId> next;
    for (StateId u : sphere) {
      for (int ai : rg.out[u]) {
        stats.arcs_followed += 1;
        const RArc& a = rg.arcs[ai];
        bool moves = !a.moved.empty() && a.moved[comp];
        if (moves) {
          if (!checked_targets.insert(a.to).second) continue;
          if (!holds(phi, a.to, ctx)) {
            Witness w;
            w.node = node;
            std::vector<StateId> rev{u};
            auto it = parent.find(u);
            while (it != parent.end()) {
              rev.push_back(it->second);
              it = parent.find(it->second);
            }
            w.path.assign(rev.rbegin(), rev.rend());
            w.path.push_back(a.to);
            result = {false, w};
          }
        } else if (!visited[a.to]) {
          visited[a.to] = 1;
          parent[a.to] = u;
          next.push_back(a.to);
        }
        if (!result.value) break;
      }
      if (!result.value) break;
    }
    sphere = std::move(next);
  }
  ctx.log_run(node, FKind::AXa, s, stats, rg.arc_count());
  return result;
}

}  // namespace detail

// Top-down evaluation of a bind-checked formula at a state. Connectives
// short-circuit, temporal operators run sphere searches that stop at the
// first decisive state, and quantifiers stop at the first decisive binding.
// Sub-formula verdicts are memoized per (node, state, visible bindings).
inline EvalResult eval(const Formula& f, StateId s, EvalContext& ctx) {
  ctx.rg().check_state(s);
  const FormulaNode* node = f.get();
  if (auto hit = ctx.memo_find(node, s)) return *hit;
  ctx.count_eval();

  const RGraph& rg = ctx.rg();
  EvalResult r;
  switch (f->kind) {
    case FKind::ConstTrue: r = {true, std::nullopt}; break;
    case FKind::ConstFalse: r = {false, std::nullopt}; break;
    case FKind::Signal:
      r = {rg.states[s].outputs.count(f->signal) > 0, std::nullopt};
      break;
    case FKind::InState:
      r = {resolve_term(f->term, rg, ctx.env()) == s, std::nullopt};
      break;
    case FKind::InSet: {
      std::set<StateId> members = resolve_set(*f->set, rg, ctx.env());
      r = {members.count(s) > 0, std::nullopt};
      break;
    }
    case FKind::InProj: {
      int k = rg.automaton_index(f->automaton);
      int local = -1;
      for (std::size_t i = 0; i < rg.local_names[k].size(); ++i)
        if (rg.local_names[k][i] == f->local) local = static_cast<int>(i);
      if (local < 0)
        throw eval_error("automaton '" + f->automaton + "' has no state '" +
                         f->local + "'");
      r = {rg.states[s].locals[k] == local, std::nullopt};
      break;
    }
    case FKind::Not: {
      EvalResult kid = eval(f->kids[0], s, ctx);
      r = {!kid.value, std::nullopt};
      break;
    }
    case FKind::And: {
      EvalResult a = eval(f->kids[0], s, ctx);
      if (!a.value) {
        r = {false, a.witness};
      } else {
        EvalResult b = eval(f->kids[1], s, ctx);
        r = {b.value, b.value ? std::nullopt : b.witness};
      }
      break;
    }
    case FKind::Or: {
      EvalResult a = eval(f->kids[0], s, ctx);
      if (a.value) {
        r = {true, std::nullopt};
      } else {
        // Both disjuncts matter to a false verdict; neither witness alone
        // certifies it, so none is propagated.
        r = {eval(f->kids[1], s, ctx).value, std::nullopt};
      }
      break;
    }
    case FKind::Implies: {
      // A false antecedent settles the implication without touching the
      // consequent.
      EvalResult a = eval(f->kids[0], s, ctx);
      if (!a.value) {
        r = {true, std::nullopt};
      } else {
        EvalResult b = eval(f->kids[1], s, ctx);
        r = {b.value, b.value ? std::nullopt : b.witness};
      }
      break;
    }
    case FKind::AX: {
      r = {true, std::nullopt};
      for (int ai : rg.out[s]) {
        StateId t = rg.arcs[ai].to;
        if (!detail::holds(f->kids[0], t, ctx)) {
          Witness w;
          w.path = {s, t};
          w.node = node;
          r = {false, w};
          break;
        }
      }
      break;
    }
    case FKind::AG: {
      // AG phi is A[phi Uw 0].
      static const Formula kFalse = f_const(false);
      r = detail::eval_auw(node, f->kids[0], kFalse, s, ctx);
      break;
    }
    case FKind::AUw:
      r = detail::eval_auw(node, f->kids[0], f->kids[1], s, ctx);
      break;
    case FKind::AF:
      r = detail::eval_af(node, f->kids[0], s, ctx);
      break;
    case FKind::AXa:
      r = detail::eval_axa(node, s, ctx);
      break;
    case FKind::Forall:
    case FKind::Exists: {
      const bool is_forall = f->kind == FKind::Forall;
      std::set<StateId> range = resolve_set(*f->range, rg, ctx.env());
      r = {is_forall, std::nullopt};
      auto saved = ctx.env().find(f->var) != ctx.env().end()
                       ? std::optional<StateId>(ctx.env()[f->var])
                       : std::nullopt;
      for (StateId u : range) {
        ctx.env()[f->var] = u;
        EvalResult body = eval(f->kids[0], s, ctx);
        if (is_forall && !body.value) {
          r = {false, std::nullopt};
          break;
        }
        if (!is_forall && body.value) {
          r = {true, std::nullopt};
          break;
        }
      }
      if (saved)
        ctx.env()[f->var] = *saved;
      else
        ctx.env().erase(f->var);
      break;
    }
  }
  ctx.memo_store(node, s, r);
  return r;
}

}  // namespace qsctl
