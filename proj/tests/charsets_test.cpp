#include "qsctl/charsets.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support/generators.hpp"

using namespace qsctl;
using testsupport::graph_from_edges;
using testsupport::random_rgat;

namespace {

RGraph load_rgat(const char* name) {
  std::ifstream in(std::string(QSCTL_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  System sys = parse_model(buf.str());
  REQUIRE(validate_system(sys).empty());
  return to_rg_at(compose(sys));
}

void check_identities(const RGraph& rg, StateId s) {
  CharSets cs = char_sets(rg, s);
  auto inter = [](const std::set<StateId>& a, const std::set<StateId>& b) {
    std::set<StateId> out;
    for (StateId x : a)
      if (b.count(x)) out.insert(x);
    return out;
  };
  auto minus = [](const std::set<StateId>& a, const std::set<StateId>& b) {
    std::set<StateId> out;
    for (StateId x : a)
      if (!b.count(x)) out.insert(x);
    return out;
  };
  CHECK(cs.cyc == inter(cs.fut, cs.pas));
  CHECK(cs.end_ == minus(cs.fut, cs.pas));
  CHECK(cs.beg == minus(cs.pas, cs.fut));
  CHECK(cs.beg == minus(cs.pas, cs.cyc));
  CHECK(cs.end_ == minus(cs.fut, cs.cyc));
}

}  // namespace

TEST_CASE("future and past of a chain") {
  RGraph rg = graph_from_edges(3, {{0, 1}, {1, 2}, {2, 2}});
  CHECK(future(rg, 1) == std::set<StateId>{2});
  CHECK(past(rg, 1) == std::set<StateId>{0});
  CHECK(future(rg, 2) == std::set<StateId>{2});  // terminal ear
}

TEST_CASE("a state is in its own future exactly when it lies on a cycle") {
  RGraph cyc = graph_from_edges(2, {{0, 1}, {1, 0}});
  CHECK(future(cyc, 0) == std::set<StateId>{0, 1});
  CHECK(past(cyc, 0) == std::set<StateId>{0, 1});

  RGraph chain = graph_from_edges(2, {{0, 1}, {1, 1}});
  CHECK(future(chain, 0).count(0) == 0);
  CHECK(past(chain, 0).empty());
}

TEST_CASE("unknown state ids are rejected") {
  RGraph rg = graph_from_edges(2, {{0, 1}, {1, 1}});
  CHECK_THROWS_AS(future(rg, 5), eval_error);
  CHECK_THROWS_AS(past(rg, -1), eval_error);
  CHECK_THROWS_AS(char_sets(rg, 2), eval_error);
}

TEST_CASE("char_sets of chain and cycle shapes") {
  RGraph chain = graph_from_edges(3, {{0, 1}, {1, 2}, {2, 2}});
  CharSets at_b = char_sets(chain, 1);
  CHECK(at_b.beg == std::set<StateId>{0});
  CHECK(at_b.end_ == std::set<StateId>{2});
  CHECK(at_b.cyc.empty());
  CHECK(at_b.gs == 3);

  RGraph cyc = graph_from_edges(2, {{0, 1}, {1, 0}});
  CharSets at_a = char_sets(cyc, 0);
  CHECK(at_a.cyc == std::set<StateId>{0, 1});
  CHECK(at_a.beg.empty());
  CHECK(at_a.end_.empty());
  CHECK(at_a.on_cycle());
}

TEST_CASE("past equals future on the reversed graph") {
  std::mt19937 rng(20260707);
  for (int i = 0; i < 40; ++i) {
    RGraph rg = random_rgat(rng, 5 + int(rng() % 20));
    // Reverse every arc by hand.
    RGraph rev = rg;
    rev.arcs.clear();
    for (const RArc& a : rg.arcs)
      rev.arcs.push_back(RArc{a.to, a.from, a.guard, a.moved});
    rev.finalize();
    for (StateId s = 0; s < rg.state_count(); ++s)
      CHECK(past(rg, s) == future(rev, s));
  }
}

TEST_CASE("characteristic-set identities hold on random graphs") {
  std::mt19937 rng(20260808);
  for (int i = 0; i < 100; ++i) {
    RGraph rg = random_rgat(rng, 3 + int(rng() % 28));
    for (StateId s = 0; s < rg.state_count(); ++s) check_identities(rg, s);
  }
}

TEST_CASE("states on paths through s fall into exactly one bucket") {
  std::mt19937 rng(20260909);
  for (int i = 0; i < 40; ++i) {
    RGraph rg = random_rgat(rng, 4 + int(rng() % 16));
    for (StateId s = 0; s < rg.state_count(); ++s) {
      CharSets cs = char_sets(rg, s);
      std::set<StateId> along = cs.pas;
      along.insert(s);
      along.insert(cs.fut.begin(), cs.fut.end());
      for (StateId u : along) {
        int buckets = 0;
        if (cs.beg.count(u)) ++buckets;
        if (u == s || cs.cyc.count(u)) ++buckets;
        if (cs.end_.count(u)) ++buckets;
        CHECK(buckets == 1);
      }
    }
  }
}

TEST_CASE("all states split into past, self and future on comparable graphs") {
  // Only when every state is comparable to s does GS = PAS ∪ {s} ∪ FUT hold;
  // a simple cycle and a chain through s are such graphs.
  RGraph cyc = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
  for (StateId s = 0; s < 4; ++s) {
    CharSets cs = char_sets(cyc, s);
    std::set<StateId> all = cs.pas;
    all.insert(s);
    all.insert(cs.fut.begin(), cs.fut.end());
    CHECK(int(all.size()) == cs.gs);
  }

  RGraph chain = graph_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 3}});
  CharSets cs = char_sets(chain, 2);
  std::set<StateId> all = cs.pas;
  all.insert(2);
  all.insert(cs.fut.begin(), cs.fut.end());
  CHECK(int(all.size()) == cs.gs);
}

TEST_CASE("the corrected client-server fixture has a purely cyclic future") {
  RGraph v2 = load_rgat("clientserver_v2.csm");
  StateId req_idle = v2.find_state("req_idle");
  CharSets cs = char_sets(v2, req_idle);
  CHECK(cs.end_.empty());
  // Equivalent phrasing: everything reachable can come back.
  for (StateId u : cs.fut) CHECK(cs.pas.count(u) == 1);

  check_identities(v2, req_idle);
  RGraph v1 = load_rgat("clientserver_v1.csm");
  for (StateId s = 0; s < v1.state_count(); ++s) check_identities(v1, s);
}
