#include "qsctl/model.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace qsctl;

namespace {

std::string fixture_path(const char* name) {
  return std::string(QSCTL_FIXTURE_DIR) + "/" + name;
}

System load_fixture(const char* name) {
  std::ifstream in(fixture_path(name));
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

bool has_diag_containing(const std::vector<Diagnostic>& diags,
                         const std::string& needle) {
  for (const Diagnostic& d : diags)
    if (d.str().find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("a one-state automaton with a single ear guarded 1 is valid") {
  System sys = parse_model("automaton A\nstate s\narc s -> s when 1\n");
  CHECK(validate_system(sys).empty());
}

TEST_CASE("an incomplete state is diagnosed") {
  System sys = parse_model(
      "automaton A\n"
      "state s emits a\n"
      "state t\n"
      "arc s -> t when a\n"
      "arc t -> t when 1\n");
  auto diags = validate_system(sys);
  REQUIRE(diags.size() == 1);
  CHECK(has_diag_containing(diags, "incomplete at state 's'"));
}

TEST_CASE("a signal both external and generated is an ownership conflict") {
  System sys = parse_model(
      "automaton A\n"
      "state s emits a\n"
      "arc s -> s when 1\n"
      "external a\n");
  auto diags = validate_system(sys);
  CHECK(has_diag_containing(diags, "signal ownership conflict"));
}

TEST_CASE("undeclared guard signals are diagnosed, not implicitly external") {
  System sys = parse_model(
      "automaton A\n"
      "state s\n"
      "arc s -> s when typo\n");
  auto diags = validate_system(sys);
  CHECK(has_diag_containing(diags, "undeclared signal 'typo'"));
}

TEST_CASE("duplicate names and dangling references are diagnosed") {
  System sys;
  Automaton a;
  a.name = "A";
  a.states = {"s", "s"};
  a.initial = "nowhere";
  a.arcs.push_back(ModelArc{"s", "ghost", Guard::constant(true)});
  sys.automata = {a, a};
  auto diags = validate_system(sys);
  CHECK(has_diag_containing(diags, "duplicate automaton name"));
  CHECK(has_diag_containing(diags, "duplicate state name"));
  CHECK(has_diag_containing(diags, "initial state is not declared"));
  CHECK(has_diag_containing(diags, "arc enters an undeclared state"));
}

TEST_CASE("validate_system is idempotent and side-effect-free") {
  System sys = load_fixture("clientserver_v1.csm");
  auto first = validate_system(sys);
  auto second = validate_system(sys);
  CHECK(first.empty());
  CHECK(second.empty());
  CHECK(sys.automata.size() == 2);
}

TEST_CASE("signals_of partitions the alphabet") {
  System sys = load_fixture("clientserver_v1.csm");
  SystemSignals sig = signals_of(sys);
  CHECK(sig.internal == std::set<std::string>{"call", "resp", "respx"});
  CHECK(sig.external == std::set<std::string>{"x"});

  SystemSignals v2 = signals_of(load_fixture("clientserver_v2.csm"));
  CHECK(v2.internal ==
        std::set<std::string>{"acall", "aresp", "call", "resp", "respx"});
  CHECK(v2.external == std::set<std::string>{"x"});

  CHECK(signals_of(System{}).internal.empty());
  CHECK(signals_of(System{}).external.empty());

  System solo = parse_model("automaton A\nstate s\narc s -> s when 1\n");
  CHECK(signals_of(solo).external.empty());
}

TEST_CASE("shared output signals are allowed") {
  // Two automata may generate the same signal; it is active when either
  // current local state emits it.
  System sys = parse_model(
      "automaton A\nstate s emits p\narc s -> s when 1\n"
      "automaton B\nstate t emits p\narc t -> t when 1\n");
  CHECK(validate_system(sys).empty());
  CHECK(signals_of(sys).internal == std::set<std::string>{"p"});
}

TEST_CASE("the bundled fixtures validate cleanly") {
  CHECK(validate_system(load_fixture("clientserver_v1.csm")).empty());
  CHECK(validate_system(load_fixture("clientserver_v2.csm")).empty());
  CHECK(validate_system(load_fixture("chain.csm")).empty());
  CHECK(validate_system(load_fixture("single.csm")).empty());
}

TEST_CASE("the model parser reports malformed lines") {
  CHECK_THROWS_AS(parse_model("state s\n"), parse_error);  // outside automaton
  CHECK_THROWS_AS(parse_model("automaton A\narc a b\n"), parse_error);
  CHECK_THROWS_AS(parse_model("automaton A\nstate s gives p\n"), parse_error);
  CHECK_THROWS_AS(parse_model("wibble\n"), parse_error);
  CHECK_THROWS_AS(parse_model("automaton A\nstate s\narc s -> s when a &\n"),
                  parse_error);
}

TEST_CASE("the model parser applies defaults") {
  System sys = parse_model(
      "# comment line\n"
      "automaton A\n"
      "state s emits p, q\n"
      "state t\n"
      "initial t\n"
      "arc s -> t\n"  // no 'when': guard 1
      "arc t -> s when p\n"
      "arc t -> t when !p\n");
  REQUIRE(sys.automata.size() == 1);
  const Automaton& a = sys.automata[0];
  CHECK(a.initial == "t");
  CHECK(a.outputs_of("s") == std::set<std::string>{"p", "q"});
  CHECK(a.outputs_of("t").empty());
  CHECK(a.arcs[0].guard == Guard::constant(true));
}
