#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qsctl/charsets.hpp"

namespace qsctl {

// ---------------------------------------------------------------------------
// Syntax trees
// ---------------------------------------------------------------------------

enum class FKind {
  ConstTrue,
  ConstFalse,
  Signal,   // a signal generated in the current state
  InState,  // staying in a named state / a bound state variable
  InSet,    // staying in one of a set of states
  InProj,   // the projection onto an automaton equals a given local state
  Not,
  And,
  Or,
  Implies,
  AG,
  AF,
  AX,
  AUw,     // weak until, kids = {phi, psi}
  AXa,     // next-in-automaton
  Forall,  // quantifier over a state set
  Exists,
};

enum class SetKind { All, BySignal, ByProj, Literal, CharSet, Union, Intersect, Diff };

enum class CharKind { Fut, Pas, Cyc, End, Beg };

// A state term is a bare name: either a variable bound by an enclosing
// quantifier or a literal global-state name. Which one it is depends on the
// binders in scope; resolution happens at bind-check/eval time, variables
// shadowing state names.
struct StateTerm {
  std::string name;
};

struct SetExpr;
using SetPtr = std::shared_ptr<const SetExpr>;

struct SetExpr {
  SetKind kind = SetKind::All;
  std::string signal;             // BySignal
  std::string automaton, local;   // ByProj
  std::vector<std::string> members;  // Literal
  CharKind cs = CharKind::Fut;    // CharSet
  StateTerm term;                 // CharSet anchor
  SetPtr lhs, rhs;                // Union / Intersect / Diff
};

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

struct FormulaNode {
  FKind kind = FKind::ConstTrue;
  std::string signal;            // Signal
  StateTerm term;                // InState
  SetPtr set;                    // InSet
  std::string automaton, local;  // InProj; automaton also names AXa's component
  std::string var;               // quantifiers
  SetPtr range;                  // quantifiers
  std::vector<Formula> kids;
};

// Bindings of state variables, extended as quantifiers are entered.
using Environment = std::map<std::string, StateId>;

// --- construction helpers ---------------------------------------------------

inline Formula f_const(bool v) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = v ? FKind::ConstTrue : FKind::ConstFalse;
  return n;
}
inline Formula f_signal(std::string name) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = FKind::Signal;
  n->signal = std::move(name);
  return n;
}
inline Formula f_in_state(std::string name) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = FKind::InState;
  n->term = StateTerm{std::move(name)};
  return n;
}
inline Formula f_in_set(SetPtr set) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = FKind::InSet;
  n->set = std::move(set);
  return n;
}
inline Formula f_in_proj(std::string automaton, std::string local) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = FKind::InProj;
  n->automaton = std::move(automaton);
  n->local = std::move(local);
  return n;
}
inline Formula f_unary(FKind kind, Formula kid) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = kind;
  n->kids = {std::move(kid)};
  return n;
}
inline Formula f_binary(FKind kind, Formula a, Formula b) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = kind;
  n->kids = {std::move(a), std::move(b)};
  return n;
}
inline Formula f_axa(std::string automaton, Formula kid) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = FKind::AXa;
  n->automaton = std::move(automaton);
  n->kids = {std::move(kid)};
  return n;
}
inline Formula f_quant(FKind kind, std::string var, SetPtr range, Formula body) {
  auto n = std::make_shared<FormulaNode>();
  n->kind = kind;
  n->var = std::move(var);
  n->range = std::move(range);
  n->kids = {std::move(body)};
  return n;
}

inline SetPtr s_all() {
  auto s = std::make_shared<SetExpr>();
  s->kind = SetKind::All;
  return s;
}
inline SetPtr s_by_signal(std::string name) {
  auto s = std::make_shared<SetExpr>();
  s->kind = SetKind::BySignal;
  s->signal = std::move(name);
  return s;
}
inline SetPtr s_by_proj(std::string automaton, std::string local) {
  auto s = std::make_shared<SetExpr>();
  s->kind = SetKind::ByProj;
  s->automaton = std::move(automaton);
  s->local = std::move(local);
  return s;
}
inline SetPtr s_literal(std::vector<std::string> members) {
  auto s = std::make_shared<SetExpr>();
  s->kind = SetKind::Literal;
  s->members = std::move(members);
  return s;
}
inline SetPtr s_charset(CharKind ck, std::string term) {
  auto s = std::make_shared<SetExpr>();
  s->kind = SetKind::CharSet;
  s->cs = ck;
  s->term = StateTerm{std::move(term)};
  return s;
}
inline SetPtr s_binop(SetKind kind, SetPtr a, SetPtr b) {
  auto s = std::make_shared<SetExpr>();
  s->kind = kind;
  s->lhs = std::move(a);
  s->rhs = std::move(b);
  return s;
}

// ---------------------------------------------------------------------------
// Name resolution
// ---------------------------------------------------------------------------

// A state term resolves through the environment first (bound variables
// shadow state names), then through the graph's state-name table.
inline StateId resolve_term(const StateTerm& t, const RGraph& rg,
                            const Environment& env) {
  auto it = env.find(t.name);
  if (it != env.end()) return it->second;
  return rg.find_state(t.name);
}

// Evaluates a set expression to a concrete, deterministically ordered state
// set. CharSet ranges over bound variables make this dependent on env.
inline std::set<StateId> resolve_set(const SetExpr& s, const RGraph& rg,
                                     const Environment& env) {
  switch (s.kind) {
    case SetKind::All: {
      std::set<StateId> all;
      for (StateId i = 0; i < rg.state_count(); ++i) all.insert(i);
      return all;
    }
    case SetKind::BySignal: {
      std::set<StateId> out;
      for (StateId i = 0; i < rg.state_count(); ++i)
        if (rg.states[i].outputs.count(s.signal)) out.insert(i);
      return out;
    }
    case SetKind::ByProj: {
      int k = rg.automaton_index(s.automaton);
      int local = -1;
      for (std::size_t i = 0; i < rg.local_names[k].size(); ++i)
        if (rg.local_names[k][i] == s.local) local = static_cast<int>(i);
      if (local < 0)
        throw eval_error("unknown local state '" + s.local + "' of automaton '" +
                         s.automaton + "'");
      std::set<StateId> out;
      for (StateId i = 0; i < rg.state_count(); ++i)
        if (rg.states[i].locals[k] == local) out.insert(i);
      return out;
    }
    case SetKind::Literal: {
      std::set<StateId> out;
      for (const std::string& name : s.members) out.insert(rg.find_state(name));
      return out;
    }
    case SetKind::CharSet: {
      StateId anchor = resolve_term(s.term, rg, env);
      CharSets cs = char_sets(rg, anchor);
      switch (s.cs) {
        case CharKind::Fut: return cs.fut;
        case CharKind::Pas: return cs.pas;
        case CharKind::Cyc: return cs.cyc;
        case CharKind::End: return cs.end_;
        case CharKind::Beg: return cs.beg;
      }
      return {};
    }
    case SetKind::Union:
    case SetKind::Intersect:
    case SetKind::Diff: {
      std::set<StateId> a = resolve_set(*s.lhs, rg, env);
      std::set<StateId> b = resolve_set(*s.rhs, rg, env);
      std::set<StateId> out;
      if (s.kind == SetKind::Union) {
        out = a;
        out.insert(b.begin(), b.end());
      } else if (s.kind == SetKind::Intersect) {
        for (StateId x : a)
          if (b.count(x)) out.insert(x);
      } else {
        for (StateId x : a)
          if (!b.count(x)) out.insert(x);
      }
      return out;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Pretty printing
// ---------------------------------------------------------------------------

inline std::string print_set(const SetExpr& s);

namespace detail {

inline const char* charkind_name(CharKind ck) {
  switch (ck) {
    case CharKind::Fut: return "FUT";
    case CharKind::Pas: return "PAS";
    case CharKind::Cyc: return "CYC";
    case CharKind::End: return "END";
    case CharKind::Beg: return "BEG";
  }
  return "?";
}

// Set-expression levels: Union/Diff 0, Intersect 1, atoms 2.
inline int set_level(const SetExpr& s) {
  switch (s.kind) {
    case SetKind::Union:
    case SetKind::Diff: return 0;
    case SetKind::Intersect: return 1;
    default: return 2;
  }
}

inline void render_set(const SetExpr& s, std::string& out) {
  auto child = [&](const SetExpr& k, int min_level) {
    if (set_level(k) < min_level) {
      out += '(';
      render_set(k, out);
      out += ')';
    } else {
      render_set(k, out);
    }
  };
  switch (s.kind) {
    case SetKind::All: out += "all"; return;
    case SetKind::BySignal: out += "sig(" + s.signal + ")"; return;
    case SetKind::ByProj: out += "proj(" + s.automaton + "." + s.local + ")"; return;
    case SetKind::Literal: {
      out += '{';
      for (std::size_t i = 0; i < s.members.size(); ++i) {
        if (i) out += ", ";
        out += s.members[i];
      }
      out += '}';
      return;
    }
    case SetKind::CharSet:
      out += charkind_name(s.cs);
      out += '(' + s.term.name + ')';
      return;
    case SetKind::Union:
      child(*s.lhs, 0);
      out += " | ";
      child(*s.rhs, 1);
      return;
    case SetKind::Diff:
      child(*s.lhs, 0);
      out += " - ";
      child(*s.rhs, 1);
      return;
    case SetKind::Intersect:
      child(*s.lhs, 1);
      out += " & ";
      child(*s.rhs, 2);
      return;
  }
}

// Formula levels: Implies 0, Or 1, And 2, prefixes (including quantifiers) 3,
// atoms 4. Prefix operators bind tighter than every binary connective.
inline int formula_level(const FormulaNode& f) {
  switch (f.kind) {
    case FKind::Implies: return 0;
    case FKind::Or: return 1;
    case FKind::And: return 2;
    case FKind::Not:
    case FKind::AG:
    case FKind::AF:
    case FKind::AX:
    case FKind::AXa:
    case FKind::Forall:
    case FKind::Exists: return 3;
    default: return 4;
  }
}

inline void render_formula(const FormulaNode& f, std::string& out) {
  auto child = [&](const FormulaNode& k, int min_level) {
    if (formula_level(k) < min_level) {
      out += '(';
      render_formula(k, out);
      out += ')';
    } else {
      render_formula(k, out);
    }
  };
  switch (f.kind) {
    case FKind::ConstTrue: out += '1'; return;
    case FKind::ConstFalse: out += '0'; return;
    case FKind::Signal: out += f.signal; return;
    case FKind::InState: out += "in " + f.term.name; return;
    case FKind::InSet: {
      out += "in ";
      if (set_level(*f.set) < 2) {
        out += '(';
        render_set(*f.set, out);
        out += ')';
      } else {
        render_set(*f.set, out);
      }
      return;
    }
    case FKind::InProj:
      out += "in proj(" + f.automaton + "." + f.local + ")";
      return;
    case FKind::Not:
      out += '!';
      child(*f.kids[0], 3);
      return;
    case FKind::And:
      child(*f.kids[0], 2);
      out += " & ";
      child(*f.kids[1], 3);
      return;
    case FKind::Or:
      child(*f.kids[0], 1);
      out += " | ";
      child(*f.kids[1], 2);
      return;
    case FKind::Implies:
      child(*f.kids[0], 1);
      out += " -> ";
      child(*f.kids[1], 0);  // right associative
      return;
    case FKind::AG:
    case FKind::AF:
    case FKind::AX:
      out += f.kind == FKind::AG ? "AG " : f.kind == FKind::AF ? "AF " : "AX ";
      child(*f.kids[0], 3);
      return;
    case FKind::AXa:
      out += "AX[" + f.automaton + "] ";
      child(*f.kids[0], 3);
      return;
    case FKind::AUw:
      out += "A[";
      render_formula(*f.kids[0], out);
      out += " Uw ";
      render_formula(*f.kids[1], out);
      out += ']';
      return;
    case FKind::Forall:
    case FKind::Exists:
      out += f.kind == FKind::Forall ? "forall " : "exists ";
      out += f.var + " in ";
      render_set(*f.range, out);
      out += ": ";
      child(*f.kids[0], 3);
      return;
  }
}

}  // namespace detail

inline std::string print_set(const SetExpr& s) {
  std::string out;
  detail::render_set(s, out);
  return out;
}

inline std::string print_formula(const Formula& f) {
  std::string out;
  detail::render_formula(*f, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing
//
//   formula := or ('->' formula)?
//   or      := and ('|' and)*
//   and     := prefix ('&' prefix)*
//   prefix  := '!' prefix | 'AG' prefix | 'AF' prefix | 'AX' '[' ident ']' prefix
//            | 'AX' prefix | 'A' '[' formula 'Uw' formula ']'
//            | ('forall'|'exists') ident 'in' setexpr ':' prefix
//            | atom
//   atom    := '1' | '0' | ident | 'in' in_target | '(' formula ')'
//   in_target := ident | setatom
//   setexpr := setterm (('|'|'-') setterm)*
//   setterm := setatom ('&' setatom)*
//   setatom := 'all' | 'sig' '(' ident ')' | 'proj' '(' ident '.' ident ')'
//            | ('FUT'|'PAS'|'CYC'|'END'|'BEG') '(' ident ')'
//            | '{' ident (',' ident)* '}' | '(' setexpr ')'
//
// Prefix operators (temporal, quantifiers, '!') bind tighter than '&', '|'
// and '->'; '->' is right associative.
// ---------------------------------------------------------------------------

namespace detail {

class FormulaParser {
 public:
  explicit FormulaParser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = parse_formula();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return f;
  }

 private:
  Formula parse_formula() {
    Formula lhs = parse_or();
    if (eat_symbol("->")) return f_binary(FKind::Implies, lhs, parse_formula());
    return lhs;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (eat_symbol("|")) lhs = f_binary(FKind::Or, lhs, parse_and());
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_prefix();
    while (eat_symbol("&")) lhs = f_binary(FKind::And, lhs, parse_prefix());
    return lhs;
  }

  Formula parse_prefix() {
    skip_ws();
    if (eat_symbol("!")) return f_unary(FKind::Not, parse_prefix());
    std::size_t mark = pos_;
    std::string word = peek_word();
    if (word == "AG" || word == "AF") {
      take_word();
      return f_unary(word == "AG" ? FKind::AG : FKind::AF, parse_prefix());
    }
    if (word == "AX") {
      take_word();
      if (eat_symbol("[")) {
        std::string automaton = ident();
        expect_symbol("]");
        return f_axa(std::move(automaton), parse_prefix());
      }
      return f_unary(FKind::AX, parse_prefix());
    }
    if (word == "A") {
      take_word();
      expect_symbol("[");
      Formula phi = parse_formula();
      std::string sep = take_word();
      if (sep != "Uw") fail("expected 'Uw' in A[.. Uw ..]");
      Formula psi = parse_formula();
      expect_symbol("]");
      return f_binary(FKind::AUw, phi, psi);
    }
    if (word == "forall" || word == "exists") {
      take_word();
      std::string var = ident();
      if (take_word() != "in") fail("expected 'in' after quantified variable");
      SetPtr range = parse_setexpr();
      expect_symbol(":");
      Formula body = parse_prefix();
      return f_quant(word == "forall" ? FKind::Forall : FKind::Exists,
                     std::move(var), std::move(range), std::move(body));
    }
    pos_ = mark;
    return parse_atom();
  }

  Formula parse_atom() {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '1') {
      ++pos_;
      return f_const(true);
    }
    if (pos_ < text_.size() && text_[pos_] == '0') {
      ++pos_;
      return f_const(false);
    }
    if (eat_symbol("(")) {
      Formula f = parse_formula();
      expect_symbol(")");
      return f;
    }
    std::string word = peek_word();
    if (word == "in") {
      take_word();
      return parse_in_target();
    }
    if (word.empty()) fail("expected a formula atom");
    if (is_keyword(word)) fail("keyword '" + word + "' cannot be an atom");
    take_word();
    return f_signal(std::move(word));
  }

  // After 'in': a bare name is a state term; anything else is a set atom.
  Formula parse_in_target() {
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '{' || text_[pos_] == '('))
      return f_in_set(parse_setatom());
    std::string word = peek_word();
    if (word.empty()) fail("expected a state or set after 'in'");
    if (word == "sig" || word == "proj" || is_charkind(word) || word == "all")
      return f_in_set(parse_setatom());
    take_word();
    if (is_keyword(word)) fail("keyword '" + word + "' cannot name a state");
    return f_in_state(std::move(word));
  }

  SetPtr parse_setexpr() {
    SetPtr lhs = parse_setterm();
    for (;;) {
      if (eat_symbol("|")) {
        lhs = s_binop(SetKind::Union, lhs, parse_setterm());
      } else if (peek_minus()) {
        eat_symbol("-");
        lhs = s_binop(SetKind::Diff, lhs, parse_setterm());
      } else {
        return lhs;
      }
    }
  }

  SetPtr parse_setterm() {
    SetPtr lhs = parse_setatom();
    while (eat_symbol("&")) lhs = s_binop(SetKind::Intersect, lhs, parse_setatom());
    return lhs;
  }

  SetPtr parse_setatom() {
    skip_ws();
    if (eat_symbol("(")) {
      SetPtr s = parse_setexpr();
      expect_symbol(")");
      return s;
    }
    if (eat_symbol("{")) {
      std::vector<std::string> members;
      if (!eat_symbol("}")) {
        members.push_back(ident());
        while (eat_symbol(",")) members.push_back(ident());
        expect_symbol("}");
      }
      return s_literal(std::move(members));
    }
    std::string word = take_word();
    if (word == "all") return s_all();
    if (word == "sig") {
      expect_symbol("(");
      std::string name = ident();
      expect_symbol(")");
      return s_by_signal(std::move(name));
    }
    if (word == "proj") {
      expect_symbol("(");
      std::string automaton = ident();
      expect_symbol(".");
      std::string local = ident();
      expect_symbol(")");
      return s_by_proj(std::move(automaton), std::move(local));
    }
    if (is_charkind(word)) {
      expect_symbol("(");
      std::string term = ident();
      expect_symbol(")");
      CharKind ck = word == "FUT"   ? CharKind::Fut
                    : word == "PAS" ? CharKind::Pas
                    : word == "CYC" ? CharKind::Cyc
                    : word == "END" ? CharKind::End
                                    : CharKind::Beg;
      return s_charset(ck, std::move(term));
    }
    fail("expected a set expression, got '" + word + "'");
  }

  // --- token helpers ---

  static bool is_charkind(const std::string& w) {
    return w == "FUT" || w == "PAS" || w == "CYC" || w == "END" || w == "BEG";
  }

  static bool is_keyword(const std::string& w) {
    return w == "AG" || w == "AF" || w == "AX" || w == "A" || w == "Uw" ||
           w == "in" || w == "forall" || w == "exists" || w == "sig" ||
           w == "proj" || w == "all" || is_charkind(w);
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  std::string peek_word() {
    skip_ws();
    std::size_t p = pos_;
    if (p < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[p])) ||
                             text_[p] == '_')) {
      std::size_t start = p;
      ++p;
      while (p < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[p])) ||
                                  text_[p] == '_'))
        ++p;
      return std::string(text_.substr(start, p - start));
    }
    return "";
  }

  std::string take_word() {
    std::string w = peek_word();
    if (w.empty()) fail("expected a word");
    skip_ws();
    pos_ += w.size();
    return w;
  }

  std::string ident() {
    std::string w = take_word();
    if (is_keyword(w)) fail("keyword '" + w + "' cannot be a name");
    return w;
  }

  bool peek_minus() {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == '-' &&
           (pos_ + 1 >= text_.size() || text_[pos_ + 1] != '>');
  }

  bool eat_symbol(std::string_view sym) {
    skip_ws();
    // A lone '-' must not swallow the first half of '->'.
    if (sym == "-" && !peek_minus()) return false;
    if (text_.substr(pos_).starts_with(sym)) {
      pos_ += sym.size();
      return true;
    }
    return false;
  }

  void expect_symbol(std::string_view sym) {
    if (!eat_symbol(sym))
      fail("expected '" + std::string(sym) + "'");
  }

  [[noreturn]] void fail(const std::string& what) {
    throw parse_error("formula syntax error at offset " + std::to_string(pos_) +
                      ": " + what);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Formula parse_formula(std::string_view text) {
  return detail::FormulaParser(text).parse();
}

// ---------------------------------------------------------------------------
// Bind checking, free variables, substitution
// ---------------------------------------------------------------------------

struct BindReport {
  std::vector<Diagnostic> diagnostics;
  // true when some quantifier range references an outer variable and is
  // therefore only resolvable once that variable is bound
  bool has_dynamic_range = false;
  std::string first_dynamic_range;  // printable form of the first such range

  bool ok() const { return diagnostics.empty(); }
};

namespace detail {

inline void set_free_vars(const SetExpr& s, const std::set<std::string>& binders,
                          std::set<std::string>& out) {
  switch (s.kind) {
    case SetKind::CharSet:
      if (binders.count(s.term.name)) out.insert(s.term.name);
      return;
    case SetKind::Union:
    case SetKind::Intersect:
    case SetKind::Diff:
      set_free_vars(*s.lhs, binders, out);
      set_free_vars(*s.rhs, binders, out);
      return;
    default:
      return;
  }
}

struct BindChecker {
  const RGraph& rg;
  BindReport report;

  void diag(std::string msg) { report.diagnostics.push_back({"", "", std::move(msg)}); }

  void check_term(const StateTerm& t, const std::set<std::string>& binders) {
    if (binders.count(t.name)) return;
    if (!rg.name_to_id.count(t.name))
      diag("unbound variable or unknown state '" + t.name + "'");
  }

  void check_proj(const std::string& automaton, const std::string& local) {
    bool found_automaton = false;
    for (std::size_t k = 0; k < rg.automata.size(); ++k) {
      if (rg.automata[k] != automaton) continue;
      found_automaton = true;
      bool found_local = false;
      for (const std::string& s : rg.local_names[k])
        if (s == local) found_local = true;
      if (!found_local)
        diag("automaton '" + automaton + "' has no state '" + local + "'");
    }
    if (!found_automaton) diag("unknown automaton '" + automaton + "'");
  }

  void check_set(const SetExpr& s, const std::set<std::string>& binders) {
    switch (s.kind) {
      case SetKind::All: return;
      case SetKind::BySignal:
        // Signals that no state emits are legal but denote the empty set;
        // nothing to check structurally.
        return;
      case SetKind::ByProj:
        check_proj(s.automaton, s.local);
        return;
      case SetKind::Literal:
        for (const std::string& m : s.members)
          if (!rg.name_to_id.count(m)) diag("unknown state '" + m + "'");
        return;
      case SetKind::CharSet:
        check_term(s.term, binders);
        return;
      case SetKind::Union:
      case SetKind::Intersect:
      case SetKind::Diff:
        check_set(*s.lhs, binders);
        check_set(*s.rhs, binders);
        return;
    }
  }

  void check(const FormulaNode& f, std::set<std::string> binders) {
    switch (f.kind) {
      case FKind::ConstTrue:
      case FKind::ConstFalse:
      case FKind::Signal:
        return;
      case FKind::InState:
        check_term(f.term, binders);
        return;
      case FKind::InSet:
        check_set(*f.set, binders);
        return;
      case FKind::InProj:
        check_proj(f.automaton, f.local);
        return;
      case FKind::AXa: {
        bool found = false;
        for (const std::string& a : rg.automata)
          if (a == f.automaton) found = true;
        if (!found) diag("unknown automaton '" + f.automaton + "'");
        check(*f.kids[0], binders);
        return;
      }
      case FKind::Forall:
      case FKind::Exists: {
        check_set(*f.range, binders);
        std::set<std::string> range_vars;
        set_free_vars(*f.range, binders, range_vars);
        if (!range_vars.empty() && !report.has_dynamic_range) {
          report.has_dynamic_range = true;
          report.first_dynamic_range = print_set(*f.range);
        }
        binders.insert(f.var);
        check(*f.kids[0], binders);
        return;
      }
      default:
        for (const Formula& k : f.kids) check(*k, binders);
        return;
    }
  }
};

}  // namespace detail

// Verifies that every state variable is bound, every referenced name exists,
// and classifies quantifier ranges as static or dynamic. `prebound` names
// variables the caller will supply through an Environment.
inline BindReport bind_check(const Formula& f, const RGraph& rg,
                             const std::set<std::string>& prebound = {}) {
  detail::BindChecker checker{rg, {}};
  checker.check(*f, prebound);
  return std::move(checker.report);
}

// Free state variables per node, computed against the binder structure of
// this particular tree. Used to key memoization on exactly the bindings a
// sub-formula can observe.
using FreeVarMap = std::map<const FormulaNode*, std::vector<std::string>>;

namespace detail {

inline void collect_free_vars(const Formula& f, std::set<std::string> binders,
                              FreeVarMap& out) {
  std::set<std::string> mine;
  switch (f->kind) {
    case FKind::InState:
      if (binders.count(f->term.name)) mine.insert(f->term.name);
      break;
    case FKind::InSet:
      set_free_vars(*f->set, binders, mine);
      break;
    case FKind::Forall:
    case FKind::Exists: {
      set_free_vars(*f->range, binders, mine);
      std::set<std::string> inner = binders;
      inner.insert(f->var);
      collect_free_vars(f->kids[0], inner, out);
      for (const std::string& v : out.at(f->kids[0].get()))
        if (v != f->var && binders.count(v)) mine.insert(v);
      out[f.get()] = {mine.begin(), mine.end()};
      return;
    }
    default:
      break;
  }
  for (const Formula& k : f->kids) {
    collect_free_vars(k, binders, out);
    for (const std::string& v : out.at(k.get())) mine.insert(v);
  }
  out[f.get()] = {mine.begin(), mine.end()};
}

}  // namespace detail

inline FreeVarMap collect_free_vars(const Formula& f,
                                    const std::set<std::string>& prebound = {}) {
  FreeVarMap out;
  detail::collect_free_vars(f, prebound, out);
  return out;
}

namespace detail {

inline SetPtr substitute_set(const SetPtr& s, const std::string& var,
                             const std::string& state_name) {
  switch (s->kind) {
    case SetKind::CharSet:
      if (s->term.name == var) {
        auto copy = std::make_shared<SetExpr>(*s);
        copy->term.name = state_name;
        return copy;
      }
      return s;
    case SetKind::Union:
    case SetKind::Intersect:
    case SetKind::Diff: {
      SetPtr lhs = substitute_set(s->lhs, var, state_name);
      SetPtr rhs = substitute_set(s->rhs, var, state_name);
      if (lhs == s->lhs && rhs == s->rhs) return s;
      auto copy = std::make_shared<SetExpr>(*s);
      copy->lhs = lhs;
      copy->rhs = rhs;
      return copy;
    }
    default:
      return s;
  }
}

}  // namespace detail

// Replaces every free occurrence of `var` with the literal name of `state`.
// Quantifiers that rebind `var` shadow it, as usual.
inline Formula substitute(const Formula& f, const std::string& var,
                          StateId state, const RGraph& rg) {
  const std::string& state_name = rg.state_name(state);
  switch (f->kind) {
    case FKind::InState:
      if (f->term.name == var) return f_in_state(state_name);
      return f;
    case FKind::InSet: {
      SetPtr s = detail::substitute_set(f->set, var, state_name);
      if (s == f->set) return f;
      return f_in_set(s);
    }
    case FKind::Forall:
    case FKind::Exists: {
      SetPtr range = detail::substitute_set(f->range, var, state_name);
      Formula body =
          f->var == var ? f->kids[0] : substitute(f->kids[0], var, state, rg);
      if (range == f->range && body == f->kids[0]) return f;
      return f_quant(f->kind, f->var, range, body);
    }
    default: {
      std::vector<Formula> kids;
      bool changed = false;
      for (const Formula& k : f->kids) {
        Formula nk = substitute(k, var, state, rg);
        changed |= nk != k;
        kids.push_back(nk);
      }
      if (!changed) return f;
      auto copy = std::make_shared<FormulaNode>(*f);
      copy->kids = std::move(kids);
      return copy;
    }
  }
}

}  // namespace qsctl
