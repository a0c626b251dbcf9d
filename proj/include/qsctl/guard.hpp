#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qsctl/base.hpp"

namespace qsctl {

// A Valuation maps signal names to active-flags. It may be partial; the
// operations below state what coverage they require.
using Valuation = std::map<std::string, bool>;

enum class GuardKind { True, False, Signal, Not, And, Or };

// Boolean formula over signal names, as written on automaton arcs. The
// constants stand for "arc may always be followed" (1) and "no arc" (0).
//
// Guards are immutable, structurally normalized values: nested And/Or are
// flattened and children sorted into a canonical order, so equal guards
// compare and render equal. Copies share the underlying tree.
class Guard {
 public:
  Guard() : Guard(constant(true)) {}

  static Guard constant(bool v) {
    return Guard(std::make_shared<const Node>(
        Node{v ? GuardKind::True : GuardKind::False, {}, {}}));
  }

  static Guard signal_ref(std::string name) {
    if (name.empty()) throw config_error("guard: empty signal name");
    return Guard(std::make_shared<const Node>(
        Node{GuardKind::Signal, std::move(name), {}}));
  }

  static Guard negate(Guard g) {
    return Guard(std::make_shared<const Node>(
        Node{GuardKind::Not, {}, {std::move(g)}}));
  }

  // Flattens nested conjunctions and sorts children. Empty input yields the
  // neutral element (1), a single child collapses to that child.
  static Guard conj(std::vector<Guard> kids) {
    return nary(GuardKind::And, std::move(kids));
  }

  static Guard disj(std::vector<Guard> kids) {
    return nary(GuardKind::Or, std::move(kids));
  }

  GuardKind kind() const { return node_->kind; }
  const std::string& signal() const { return node_->signal; }
  const std::vector<Guard>& children() const { return node_->kids; }

  bool operator==(const Guard& o) const {
    if (node_ == o.node_) return true;
    if (kind() != o.kind() || signal() != o.signal()) return false;
    return children() == o.children();
  }
  bool operator!=(const Guard& o) const { return !(*this == o); }

  // Every signal name referenced anywhere in the tree.
  std::set<std::string> signals() const {
    std::set<std::string> out;
    collect_signals(out);
    return out;
  }

  void collect_signals(std::set<std::string>& out) const {
    if (kind() == GuardKind::Signal) out.insert(signal());
    for (const Guard& k : children()) k.collect_signals(out);
  }

  // Canonical rendering in the concrete syntax: ! > & > |, parentheses where
  // a child binds looser than its parent.
  std::string text() const {
    std::string out;
    render(out);
    return out;
  }

 private:
  struct Node {
    GuardKind kind;
    std::string signal;
    std::vector<Guard> kids;
  };

  explicit Guard(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Guard nary(GuardKind kind, std::vector<Guard> kids) {
    std::vector<Guard> flat;
    for (Guard& k : kids) {
      if (k.kind() == kind) {
        for (const Guard& inner : k.children()) flat.push_back(inner);
      } else {
        flat.push_back(std::move(k));
      }
    }
    if (flat.empty()) return constant(kind == GuardKind::And);
    if (flat.size() == 1) return flat.front();
    std::sort(flat.begin(), flat.end(),
              [](const Guard& a, const Guard& b) { return cmp(a, b) < 0; });
    return Guard(std::make_shared<const Node>(Node{kind, {}, std::move(flat)}));
  }

  static int cmp(const Guard& a, const Guard& b) {
    if (a.kind() != b.kind())
      return static_cast<int>(a.kind()) < static_cast<int>(b.kind()) ? -1 : 1;
    if (int c = a.signal().compare(b.signal()); c != 0) return c;
    const auto& ka = a.children();
    const auto& kb = b.children();
    for (std::size_t i = 0; i < ka.size() && i < kb.size(); ++i) {
      if (int c = cmp(ka[i], kb[i]); c != 0) return c;
    }
    if (ka.size() != kb.size()) return ka.size() < kb.size() ? -1 : 1;
    return 0;
  }

  // Precedence levels for rendering: Or 0, And 1, Not/atoms 2.
  int level() const {
    switch (kind()) {
      case GuardKind::Or: return 0;
      case GuardKind::And: return 1;
      default: return 2;
    }
  }

  void render(std::string& out) const {
    switch (kind()) {
      case GuardKind::True: out += '1'; return;
      case GuardKind::False: out += '0'; return;
      case GuardKind::Signal: out += signal(); return;
      case GuardKind::Not: {
        out += '!';
        const Guard& k = children().front();
        if (k.level() < 2) {
          out += '(';
          k.render(out);
          out += ')';
        } else {
          k.render(out);
        }
        return;
      }
      case GuardKind::And:
      case GuardKind::Or: {
        const char* sep = kind() == GuardKind::And ? " & " : " | ";
        bool first = true;
        for (const Guard& k : children()) {
          if (!first) out += sep;
          first = false;
          if (k.level() < level()) {
            out += '(';
            k.render(out);
            out += ')';
          } else {
            k.render(out);
          }
        }
        return;
      }
    }
  }

  std::shared_ptr<const Node> node_;
};

inline Guard operator!(const Guard& g) { return Guard::negate(g); }
inline Guard operator&(const Guard& a, const Guard& b) {
  return Guard::conj({a, b});
}
inline Guard operator|(const Guard& a, const Guard& b) {
  return Guard::disj({a, b});
}

// Standard Boolean semantics under a total valuation of the referenced
// signals. A referenced signal missing from `v` is an evaluation error.
inline bool eval_guard(const Guard& g, const Valuation& v) {
  switch (g.kind()) {
    case GuardKind::True: return true;
    case GuardKind::False: return false;
    case GuardKind::Signal: {
      auto it = v.find(g.signal());
      if (it == v.end())
        throw eval_error("unbound signal '" + g.signal() + "' in guard");
      return it->second;
    }
    case GuardKind::Not: return !eval_guard(g.children().front(), v);
    case GuardKind::And:
      for (const Guard& k : g.children())
        if (!eval_guard(k, v)) return false;
      return true;
    case GuardKind::Or:
      for (const Guard& k : g.children())
        if (eval_guard(k, v)) return true;
      return false;
  }
  return false;  // unreachable
}

struct SatResult {
  bool satisfiable = false;
  std::optional<Valuation> witness;  // total over fixed ∪ free when satisfiable
};

// Does some assignment to `free` extend `fixed` to satisfy g? Decided by
// exhaustive enumeration over the free signals g actually references;
// unreferenced free signals default to false in the witness. fixed and free
// must be disjoint and jointly cover the signals of g.
inline SatResult satisfiable_under(const Guard& g, const Valuation& fixed,
                                   const std::set<std::string>& free) {
  for (const auto& [name, _] : fixed) {
    if (free.count(name))
      throw config_error("signal '" + name + "' is both fixed and free");
  }
  std::vector<std::string> enumerated;
  for (const std::string& name : g.signals()) {
    if (fixed.count(name)) continue;
    if (!free.count(name))
      throw eval_error("signal '" + name + "' is neither fixed nor free");
    enumerated.push_back(name);
  }
  const std::size_t n = enumerated.size();
  Valuation v = fixed;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    for (std::size_t i = 0; i < n; ++i)
      v[enumerated[i]] = (bits >> i) & 1;
    if (eval_guard(g, v)) {
      Valuation w = v;
      for (const std::string& name : free)
        if (!w.count(name)) w[name] = false;
      return {true, std::move(w)};
    }
  }
  return {false, std::nullopt};
}

// True iff the disjunction of out_guards is a tautology. Checked by
// enumerating valuations of the referenced signals only; unreferenced
// alphabet signals cannot change the verdict.
inline bool is_complete(const std::vector<Guard>& out_guards,
                        const std::set<std::string>& alphabet) {
  (void)alphabet;
  std::set<std::string> referenced;
  for (const Guard& g : out_guards) g.collect_signals(referenced);
  std::vector<std::string> names(referenced.begin(), referenced.end());
  const std::size_t n = names.size();
  Valuation v;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
    for (std::size_t i = 0; i < n; ++i) v[names[i]] = (bits >> i) & 1;
    bool any = false;
    for (const Guard& g : out_guards) {
      if (eval_guard(g, v)) {
        any = true;
        break;
      }
    }
    if (!any) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Concrete syntax:  or := and ('|' and)* ; and := not ('&' not)* ;
//                   not := '!' not | '1' | '0' | ident | '(' or ')'
// ---------------------------------------------------------------------------

namespace detail {

class GuardParser {
 public:
  explicit GuardParser(std::string_view text) : text_(text) {}

  Guard parse() {
    Guard g = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return g;
  }

 private:
  Guard parse_or() {
    std::vector<Guard> kids{parse_and()};
    while (eat('|')) kids.push_back(parse_and());
    return kids.size() == 1 ? kids.front() : Guard::disj(std::move(kids));
  }

  Guard parse_and() {
    std::vector<Guard> kids{parse_not()};
    while (eat('&')) kids.push_back(parse_not());
    return kids.size() == 1 ? kids.front() : Guard::conj(std::move(kids));
  }

  Guard parse_not() {
    skip_ws();
    if (eat('!')) return Guard::negate(parse_not());
    if (eat('1')) return Guard::constant(true);
    if (eat('0')) return Guard::constant(false);
    if (eat('(')) {
      Guard g = parse_or();
      if (!eat(')')) fail("expected ')'");
      return g;
    }
    return Guard::signal_ref(ident());
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < text_.size() &&
        (std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
         text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
              text_[pos_] == '_'))
        ++pos_;
    }
    if (start == pos_) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw parse_error("guard syntax error at offset " + std::to_string(pos_) +
                      ": " + what + " in \"" + std::string(text_) + "\"");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Guard parse_guard(std::string_view text) {
  return detail::GuardParser(text).parse();
}

}  // namespace qsctl
