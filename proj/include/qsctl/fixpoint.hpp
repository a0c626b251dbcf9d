#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "qsctl/cbs.hpp"

namespace qsctl {

// Dense bit set over state ids; the working currency of the fixed-point
// labeller.
class StateMask {
 public:
  StateMask() = default;
  explicit StateMask(int n, bool fill = false)
      : n_(n), bits_((n + 63) / 64, fill ? ~std::uint64_t{0} : 0) {
    trim();
  }

  int size() const { return n_; }

  bool test(int i) const { return (bits_[i / 64] >> (i % 64)) & 1; }
  void set(int i) { bits_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(int i) { bits_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }

  int count() const {
    int c = 0;
    for (std::uint64_t w : bits_) c += __builtin_popcountll(w);
    return c;
  }

  bool operator==(const StateMask& o) const { return bits_ == o.bits_; }
  bool operator!=(const StateMask& o) const { return !(*this == o); }

  StateMask& operator&=(const StateMask& o) {
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] &= o.bits_[i];
    return *this;
  }
  StateMask& operator|=(const StateMask& o) {
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= o.bits_[i];
    return *this;
  }

  friend StateMask operator&(StateMask a, const StateMask& b) { return a &= b; }
  friend StateMask operator|(StateMask a, const StateMask& b) { return a |= b; }

  StateMask complement() const {
    StateMask out = *this;
    for (auto& w : out.bits_) w = ~w;
    out.trim();
    return out;
  }

  StateMask minus(const StateMask& o) const { return *this & o.complement(); }

  std::set<StateId> to_set() const {
    std::set<StateId> out;
    for (int i = 0; i < n_; ++i)
      if (test(i)) out.insert(i);
    return out;
  }

 private:
  void trim() {
    if (n_ % 64 != 0 && !bits_.empty())
      bits_.back() &= (std::uint64_t{1} << (n_ % 64)) - 1;
  }

  int n_ = 0;
  std::vector<std::uint64_t> bits_;
};

// Result of the bottom-up labeller: for every node it reached (quantifier
// bodies are grounded into fresh trees, so their instances appear under
// their own identities), the set of states where the node holds.
struct Labeling {
  std::map<const FormulaNode*, StateMask> sets;
  std::vector<Formula> grounded;  // keeps grounded instances alive
  int max_iterations = 0;         // largest fixed-point iteration count

  bool holds(const FormulaNode* node, StateId s) const {
    return sets.at(node).test(s);
  }
};

namespace detail {

// pre∀(Z): states all of whose successors lie in Z. Terminal self-loops are
// ordinary arcs, keeping the relation total.
inline StateMask pre_all(const RGraph& rg, const StateMask& z) {
  StateMask out(rg.state_count());
  for (StateId s = 0; s < rg.state_count(); ++s) {
    bool all = true;
    for (int ai : rg.out[s])
      if (!z.test(rg.arcs[ai].to)) {
        all = false;
        break;
      }
    if (all && !rg.out[s].empty()) out.set(s);
  }
  return out;
}

// pre∃(Z): states with at least one successor in Z.
inline StateMask pre_any(const RGraph& rg, const StateMask& z) {
  StateMask out(rg.state_count());
  for (StateId s = 0; s < rg.state_count(); ++s)
    for (int ai : rg.out[s])
      if (z.test(rg.arcs[ai].to)) {
        out.set(s);
        break;
      }
  return out;
}

struct Labeller {
  const RGraph& rg;
  Labeling& result;

  StateMask from_ids(const std::set<StateId>& ids) const {
    StateMask m(rg.state_count());
    for (StateId s : ids) m.set(s);
    return m;
  }

  void note_iterations(int n) {
    if (n > result.max_iterations) result.max_iterations = n;
  }

  StateMask run(const Formula& f) {
    const int n = rg.state_count();
    StateMask m(n);
    switch (f->kind) {
      case FKind::ConstTrue:
        m = StateMask(n, true);
        break;
      case FKind::ConstFalse:
        break;
      case FKind::Signal:
        for (StateId s = 0; s < n; ++s)
          if (rg.states[s].outputs.count(f->signal)) m.set(s);
        break;
      case FKind::InState: {
        // Quantified variables were grounded away; only literal names remain.
        m.set(rg.find_state(f->term.name));
        break;
      }
      case FKind::InSet:
        m = from_ids(resolve_set(*f->set, rg, Environment{}));
        break;
      case FKind::InProj:
        m = from_ids(resolve_set(*s_by_proj(f->automaton, f->local), rg,
                                 Environment{}));
        break;
      case FKind::Not:
        m = run(f->kids[0]).complement();
        break;
      case FKind::And:
        m = run(f->kids[0]) & run(f->kids[1]);
        break;
      case FKind::Or:
        m = run(f->kids[0]) | run(f->kids[1]);
        break;
      case FKind::Implies:
        m = run(f->kids[0]).complement() | run(f->kids[1]);
        break;
      case FKind::AX:
        m = pre_all(rg, run(f->kids[0]));
        break;
      case FKind::AG: {
        // Greatest fixed point of Z = [phi] ∩ pre∀(Z).
        StateMask phi = run(f->kids[0]);
        StateMask z(n, true);
        int iter = 0;
        for (;;) {
          ++iter;
          StateMask next = phi & pre_all(rg, z);
          if (next == z) break;
          z = next;
        }
        note_iterations(iter);
        m = z;
        break;
      }
      case FKind::AF: {
        // Least fixed point of Z = [phi] ∪ pre∀(Z).
        StateMask phi = run(f->kids[0]);
        StateMask z(n);
        int iter = 0;
        for (;;) {
          ++iter;
          StateMask next = phi | pre_all(rg, z);
          if (next == z) break;
          z = next;
        }
        note_iterations(iter);
        m = z;
        break;
      }
      case FKind::AUw: {
        // A[phi Uw psi] is the complement of E[¬psi U ¬(phi ∨ psi)].
        StateMask phi = run(f->kids[0]);
        StateMask psi = run(f->kids[1]);
        StateMask target = (phi | psi).complement();
        StateMask keep = psi.complement();
        StateMask z(n);
        int iter = 0;
        for (;;) {
          ++iter;
          StateMask next = target | (keep & pre_any(rg, z));
          if (next == z) break;
          z = next;
        }
        note_iterations(iter);
        m = z.complement();
        break;
      }
      case FKind::AXa: {
        // Least fixed point of the violating states: some arc moves the
        // component onto a ¬phi state, or some non-moving arc leads to a
        // violating state. AX[a] phi is the complement.
        StateMask phi = run(f->kids[0]);
        int comp = rg.automaton_index(f->automaton);
        StateMask bad(n);
        int iter = 0;
        for (;;) {
          ++iter;
          StateMask next = bad;
          for (StateId s = 0; s < n; ++s) {
            if (next.test(s)) continue;
            for (int ai : rg.out[s]) {
              const RArc& a = rg.arcs[ai];
              bool moves = !a.moved.empty() && a.moved[comp];
              if (moves ? !phi.test(a.to) : bad.test(a.to)) {
                next.set(s);
                break;
              }
            }
          }
          if (next == bad) break;
          bad = next;
        }
        note_iterations(iter);
        m = bad.complement();
        break;
      }
      case FKind::Forall:
      case FKind::Exists: {
        // Outer grounding already substituted every enclosing binding, so a
        // range reaching this point is static.
        std::set<StateId> range = resolve_set(*f->range, rg, Environment{});
        const bool is_forall = f->kind == FKind::Forall;
        m = StateMask(n, is_forall);
        for (StateId u : range) {
          Formula grounded = substitute(f->kids[0], f->var, u, rg);
          result.grounded.push_back(grounded);
          StateMask body = run(grounded);
          if (is_forall)
            m &= body;
          else
            m |= body;
        }
        break;
      }
    }
    result.sets[f.get()] = m;
    return m;
  }
};

// A range referencing a variable bound by an enclosing quantifier cannot be
// evaluated set-first; the bottom-up route rejects such formulas.
inline void reject_dynamic_ranges(const FormulaNode& f,
                                  std::set<std::string> binders) {
  if (f.kind == FKind::Forall || f.kind == FKind::Exists) {
    std::set<std::string> used;
    set_free_vars(*f.range, binders, used);
    if (!used.empty())
      throw eval_error("the bottom-up labeller cannot evaluate the dynamic "
                       "quantifier range '" +
                       print_set(*f.range) + "'");
    binders.insert(f.var);
  }
  for (const Formula& k : f.kids) reject_dynamic_ranges(*k, binders);
}

}  // namespace detail

// Classical bottom-up labelling by fixed points over the (reachable) RG@
// states: the independent route against which the sphere engine is checked.
// Quantifiers must have statically resolvable ranges; they are expanded into
// finite meets/joins of grounded bodies.
inline Labeling label(const RGraph& rg, const Formula& f) {
  detail::reject_dynamic_ranges(*f, {});
  Labeling result;
  detail::Labeller labeller{rg, result};
  labeller.run(f);
  return result;
}

}  // namespace qsctl
