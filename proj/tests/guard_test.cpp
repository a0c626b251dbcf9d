#include "qsctl/guard.hpp"

#include <doctest.h>

#include <random>

using namespace qsctl;

namespace {

Guard sig(const char* name) { return Guard::signal_ref(name); }

// Brute-force satisfiability: enumerate all 2^|free| extensions of fixed,
// over the full free set, not just the referenced signals.
bool brute_force_sat(const Guard& g, const Valuation& fixed,
                     const std::set<std::string>& free) {
  std::vector<std::string> names(free.begin(), free.end());
  Valuation v = fixed;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << names.size()); ++bits) {
    for (std::size_t i = 0; i < names.size(); ++i)
      v[names[i]] = (bits >> i) & 1;
    if (eval_guard(g, v)) return true;
  }
  return false;
}

Guard random_guard(std::mt19937& rng, const std::vector<std::string>& pool,
                   int depth) {
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 5);
  switch (kind(rng)) {
    case 0:
    case 1: {
      std::uniform_int_distribution<int> pick(0, int(pool.size()) - 1);
      return Guard::signal_ref(pool[pick(rng)]);
    }
    case 2:
      return Guard::constant(rng() & 1);
    case 3:
      return Guard::negate(random_guard(rng, pool, depth - 1));
    case 4:
      return random_guard(rng, pool, depth - 1) &
             random_guard(rng, pool, depth - 1);
    default:
      return random_guard(rng, pool, depth - 1) |
             random_guard(rng, pool, depth - 1);
  }
}

}  // namespace

TEST_CASE("guard evaluation follows standard boolean semantics") {
  // q | p & m with only q active: & binds tighter than |.
  Guard g = sig("q") | (sig("p") & sig("m"));
  CHECK(eval_guard(g, {{"q", true}, {"p", false}, {"m", false}}));
  CHECK_FALSE(eval_guard(g, {{"q", false}, {"p", true}, {"m", false}}));
  CHECK(eval_guard(g, {{"q", false}, {"p", true}, {"m", true}}));

  CHECK(eval_guard(Guard::constant(true), {}));
  CHECK_FALSE(eval_guard(Guard::constant(false), {{"a", true}}));
}

TEST_CASE("guard evaluation agrees with a truth table") {
  Guard g = !sig("a") & (sig("b") | sig("a"));
  for (bool a : {false, true}) {
    for (bool b : {false, true}) {
      bool expected = !a && (b || a);
      CHECK(eval_guard(g, {{"a", a}, {"b", b}}) == expected);
    }
  }
  CHECK(eval_guard(g, {{"a", false}, {"b", true}}));
}

TEST_CASE("guard evaluation rejects unbound signals") {
  Guard g = sig("q") & sig("missing");
  CHECK_THROWS_WITH_AS(eval_guard(g, {{"q", true}}),
                       doctest::Contains("missing"), eval_error);
}

TEST_CASE("satisfiable_under enumerates the free signals") {
  Guard g = sig("call") & !sig("x");
  SatResult r = satisfiable_under(g, {{"call", true}}, {"x"});
  REQUIRE(r.satisfiable);
  REQUIRE(r.witness.has_value());
  CHECK((*r.witness).at("call") == true);
  CHECK((*r.witness).at("x") == false);

  CHECK_FALSE(satisfiable_under(Guard::constant(false), {}, {"a"}).satisfiable);
  CHECK_FALSE(satisfiable_under(sig("a") & !sig("a"), {}, {"a"}).satisfiable);
}

TEST_CASE("satisfiable_under rejects overlapping fixed and free domains") {
  CHECK_THROWS_AS(satisfiable_under(sig("a"), {{"a", true}}, {"a"}),
                  config_error);
}

TEST_CASE("satisfiable_under needs full coverage of referenced signals") {
  CHECK_THROWS_AS(satisfiable_under(sig("a") & sig("b"), {{"a", true}}, {}),
                  eval_error);
}

TEST_CASE("is_complete detects tautological out-guard sets") {
  std::set<std::string> alphabet{"a", "b"};
  CHECK(is_complete({sig("a"), !sig("a")}, alphabet));
  CHECK_FALSE(is_complete({sig("a") & sig("b")}, alphabet));
  CHECK(is_complete({Guard::constant(true)}, alphabet));
  CHECK_FALSE(is_complete({}, alphabet));
}

TEST_CASE("negation and De Morgan duals hold under evaluation") {
  std::mt19937 rng(20260101);
  std::vector<std::string> pool{"a", "b", "c"};
  for (int i = 0; i < 200; ++i) {
    Guard g = random_guard(rng, pool, 3);
    Guard h = random_guard(rng, pool, 3);
    for (int bits = 0; bits < 8; ++bits) {
      Valuation v{{"a", bool(bits & 1)}, {"b", bool(bits & 2)}, {"c", bool(bits & 4)}};
      CHECK(eval_guard(!g, v) == !eval_guard(g, v));
      CHECK(eval_guard(!(g & h), v) == eval_guard(!g | !h, v));
      CHECK(eval_guard(!(g | h), v) == eval_guard(!g & !h, v));
    }
  }
}

TEST_CASE("satisfiable_under matches brute force with 12 free signals") {
  std::mt19937 rng(20260205);
  std::vector<std::string> pool{"a", "b", "c", "d", "e", "f",
                                "g", "h", "i", "j", "k", "l"};
  for (int i = 0; i < 25; ++i) {
    Guard g = random_guard(rng, pool, 5);
    std::set<std::string> free(pool.begin(), pool.end());
    SatResult r = satisfiable_under(g, {}, free);
    CHECK(r.satisfiable == brute_force_sat(g, {}, free));
    if (r.satisfiable) CHECK(eval_guard(g, *r.witness));
  }
}

TEST_CASE("satisfiable_under matches brute-force enumeration") {
  std::mt19937 rng(20260202);
  std::vector<std::string> pool{"a", "b", "c", "d", "e"};
  for (int i = 0; i < 300; ++i) {
    Guard g = random_guard(rng, pool, 4);
    // Split the pool into fixed and free at random.
    Valuation fixed;
    std::set<std::string> free;
    for (const std::string& name : pool) {
      int die = int(rng() % 3);
      if (die == 0)
        fixed[name] = rng() & 1;
      else if (die == 1)
        free.insert(name);
      // die == 2: leave the signal out entirely when g does not use it
    }
    for (const std::string& name : g.signals())
      if (!fixed.count(name)) free.insert(name);
    SatResult r = satisfiable_under(g, fixed, free);
    CHECK(r.satisfiable == brute_force_sat(g, fixed, free));
    if (r.satisfiable) {
      CHECK(eval_guard(g, *r.witness));
      for (const std::string& name : free) CHECK(r.witness->count(name) == 1);
    }
  }
}

TEST_CASE("is_complete accepts every excluded-middle pair") {
  std::mt19937 rng(20260303);
  std::vector<std::string> pool{"a", "b", "c"};
  for (int i = 0; i < 100; ++i) {
    Guard g = random_guard(rng, pool, 3);
    CHECK(is_complete({g, !g}, {"a", "b", "c"}));
  }
}

TEST_CASE("guard text parses back to an equal guard") {
  std::mt19937 rng(20260404);
  std::vector<std::string> pool{"alpha", "b2", "_c"};
  for (int i = 0; i < 200; ++i) {
    Guard g = random_guard(rng, pool, 4);
    Guard reparsed = parse_guard(g.text());
    CHECK(reparsed == g);
    CHECK(reparsed.text() == g.text());
  }
}

TEST_CASE("guard parser handles precedence and parentheses") {
  Guard g = parse_guard("q | p & m");
  CHECK(eval_guard(g, {{"q", false}, {"p", true}, {"m", true}}));
  CHECK_FALSE(eval_guard(g, {{"q", false}, {"p", true}, {"m", false}}));

  Guard h = parse_guard("(q | p) & m");
  CHECK_FALSE(eval_guard(h, {{"q", true}, {"p", false}, {"m", false}}));

  CHECK(parse_guard("!a & (b | a)") == (!sig("a") & (sig("b") | sig("a"))));
  CHECK(parse_guard(" 1 ") == Guard::constant(true));
  CHECK_THROWS_AS(parse_guard("a &"), parse_error);
  CHECK_THROWS_AS(parse_guard("(a"), parse_error);
  CHECK_THROWS_AS(parse_guard(""), parse_error);
  CHECK_THROWS_AS(parse_guard("a b"), parse_error);
}

TEST_CASE("guards normalize structurally") {
  CHECK((sig("b") & sig("a")) == (sig("a") & sig("b")));
  CHECK((sig("a") & (sig("b") & sig("c"))) == ((sig("a") & sig("b")) & sig("c")));
  CHECK(Guard::conj({}) == Guard::constant(true));
  CHECK(Guard::disj({}) == Guard::constant(false));
  CHECK(Guard::conj({sig("a")}) == sig("a"));
  CHECK((sig("b") & sig("a")).text() == "a & b");
  CHECK((!(sig("a") | sig("b"))).text() == "!(a | b)");
}
