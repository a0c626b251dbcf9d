#include "qsctl/fixpoint.hpp"

#include <doctest.h>

#include <deque>
#include <fstream>
#include <sstream>

#include "support/generators.hpp"

using namespace qsctl;
using testsupport::graph_from_edges;

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

// EF target by reverse reachability: states from which some path reaches a
// target state in zero or more steps.
std::set<StateId> reverse_reach(const RGraph& rg, const StateMask& target) {
  std::set<StateId> out;
  std::deque<StateId> queue;
  for (StateId s = 0; s < rg.state_count(); ++s)
    if (target.test(s)) {
      out.insert(s);
      queue.push_back(s);
    }
  while (!queue.empty()) {
    StateId u = queue.front();
    queue.pop_front();
    for (int ai : rg.in[u]) {
      StateId v = rg.arcs[ai].from;
      if (out.insert(v).second) queue.push_back(v);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("AG of a tautology labels every state") {
  RGraph rg = load_rgat("clientserver_v1.csm");
  Formula f = parse_formula("AG 1");
  Labeling lab = label(rg, f);
  CHECK(lab.sets.at(f.get()).count() == rg.state_count());
}

TEST_CASE("AF resp fails at req_idle in the uncorrected system") {
  RGraph v1 = load_rgat("clientserver_v1.csm");
  Formula f = parse_formula("AF resp");
  Labeling lab = label(v1, f);
  CHECK_FALSE(lab.holds(f.get(), v1.find_state("req_idle")));

  RGraph v2 = load_rgat("clientserver_v2.csm");
  Labeling lab2 = label(v2, f);
  CHECK(lab2.holds(f.get(), v2.find_state("req_idle")));
}

TEST_CASE("boolean nodes obey the set algebra of their children") {
  std::mt19937 rng(20270101);
  for (int i = 0; i < 30; ++i) {
    RGraph rg = testsupport::random_rgat(rng, 4 + int(rng() % 16));
    Formula a = testsupport::random_formula(rng, rg, 2);
    Formula b = testsupport::random_formula(rng, rg, 2);
    Formula f = f_binary(FKind::And, a, b);
    Formula g = f_binary(FKind::Or, a, b);
    Formula h = f_unary(FKind::Not, a);
    Labeling lf = label(rg, f);
    Labeling lg = label(rg, g);
    Labeling lh = label(rg, h);
    CHECK(lf.sets.at(f.get()) == (lf.sets.at(a.get()) & lf.sets.at(b.get())));
    CHECK(lg.sets.at(g.get()) == (lg.sets.at(a.get()) | lg.sets.at(b.get())));
    CHECK(lh.sets.at(h.get()) == lh.sets.at(a.get()).complement());
  }
}

TEST_CASE("AG equals the complement of reaching the complement") {
  std::mt19937 rng(20270202);
  for (int i = 0; i < 40; ++i) {
    RGraph rg = testsupport::random_rgat(rng, 4 + int(rng() % 20));
    Formula phi = testsupport::random_formula(rng, rg, 1);
    Formula ag = f_unary(FKind::AG, phi);
    Labeling lab = label(rg, ag);
    std::set<StateId> ef_not_phi =
        reverse_reach(rg, lab.sets.at(phi.get()).complement());
    StateMask expect(rg.state_count(), true);
    for (StateId s : ef_not_phi) expect.reset(s);
    CHECK(lab.sets.at(ag.get()) == expect);
  }
}

TEST_CASE("weak until with a false right side degenerates to AG") {
  std::mt19937 rng(20270303);
  for (int i = 0; i < 40; ++i) {
    RGraph rg = testsupport::random_rgat(rng, 4 + int(rng() % 20));
    Formula phi = testsupport::random_formula(rng, rg, 2);
    Formula auw = f_binary(FKind::AUw, phi, f_const(false));
    Formula ag = f_unary(FKind::AG, phi);
    Labeling la = label(rg, auw);
    Labeling lb = label(rg, ag);
    CHECK(la.sets.at(auw.get()) == lb.sets.at(ag.get()));
  }
}

TEST_CASE("fixed-point iteration counts stay within the state count") {
  std::mt19937 rng(20270404);
  for (int i = 0; i < 30; ++i) {
    RGraph rg = testsupport::random_rgat(rng, 4 + int(rng() % 25));
    Formula f = testsupport::random_formula(rng, rg, 3);
    Labeling lab = label(rg, f);
    CHECK(lab.max_iterations <= rg.state_count() + 1);
  }
}

TEST_CASE("static quantifiers ground into meets and joins") {
  RGraph rg = graph_from_edges(3, {{0, 1}, {1, 2}, {2, 0}},
                               {{"p"}, {"p"}, {}});
  Formula f = parse_formula("exists v in sig(p): in v");
  Labeling lab = label(rg, f);
  CHECK(lab.sets.at(f.get()).to_set() == std::set<StateId>{0, 1});

  Formula g = parse_formula("forall v in all: AF in v");
  Labeling lg = label(rg, g);
  CHECK(lg.sets.at(g.get()).count() == 3);  // one cycle through everything
}

TEST_CASE("dynamic quantifier ranges are rejected with the range named") {
  RGraph rg = graph_from_edges(2, {{0, 1}, {1, 0}});
  Formula f = parse_formula("forall v in all: exists u in FUT(v): in u");
  CHECK_THROWS_WITH_AS(label(rg, f), doctest::Contains("FUT(v)"), eval_error);
}

TEST_CASE("the sphere engine agrees with the labeller everywhere") {
  std::mt19937 rng(20270505);
  int graphs = 60;
  for (int i = 0; i < graphs; ++i) {
    RGraph rg = testsupport::random_rgat(rng, 5 + int(rng() % 26));
    for (int j = 0; j < 10; ++j) {
      Formula f = testsupport::random_formula(rng, rg, 3);
      Labeling lab = label(rg, f);
      EvalContext ctx(rg, f);
      for (StateId s = 0; s < rg.state_count(); ++s) {
        bool top_down = eval(f, s, ctx).value;
        bool bottom_up = lab.holds(f.get(), s);
        CHECK_MESSAGE(top_down == bottom_up,
                      "disagreement on ", print_formula(f), " at state ", s,
                      " (graph ", i, ")");
      }
    }
  }
}
