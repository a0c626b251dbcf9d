// qsctl: compose CSM automata systems into reachability graphs and check
// QsCTL temporal formulas on them, top-down, by sphere search.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "qsctl/json_out.hpp"
#include "qsctl/qsctl.hpp"

namespace {

constexpr int kExitTrue = 0;
constexpr int kExitFalse = 1;
constexpr int kExitUsage = 2;
constexpr int kExitResource = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qsctl::config_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw qsctl::config_error("cannot write '" + path + "'");
  out << text;
}

// Parse + validate a model file, or fail with diagnostics on stderr.
qsctl::System load_system(const std::string& path) {
  qsctl::System sys = qsctl::parse_model(read_file(path));
  std::vector<qsctl::Diagnostic> diags = qsctl::validate_system(sys);
  if (!diags.empty()) {
    std::cerr << "validation failed for '" << path << "':\n";
    for (const auto& d : diags) std::cerr << "  " << d.str() << "\n";
    throw qsctl::parse_error("invalid model");
  }
  return sys;
}

struct ComposeOptions {
  std::string model;
  std::string dot_path;
  std::string json_path;
  bool rg_at = false;
  std::size_t state_limit = 1000000;
};

int cmd_compose(const ComposeOptions& opt) {
  qsctl::System sys = load_system(opt.model);
  qsctl::RGraph rg = qsctl::compose(sys, opt.state_limit);
  if (opt.rg_at) rg = qsctl::to_rg_at(rg);
  std::cout << "states: " << rg.state_count() << "\n"
            << "arcs: " << rg.arc_count() << "\n";
  if (!opt.dot_path.empty()) write_file(opt.dot_path, qsctl::export_dot(rg));
  if (!opt.json_path.empty())
    write_file(opt.json_path, qsctl::rgraph_to_json(rg).dump(2) + "\n");
  return kExitTrue;
}

struct CheckOptions {
  std::string model;
  std::string formula;
  std::string anchor;
  bool oracle = false;
  bool witness = false;
  bool stats = false;
  bool exit_zero = false;
  std::size_t state_limit = 1000000;
};

int cmd_check(const CheckOptions& opt) {
  qsctl::System sys = load_system(opt.model);
  qsctl::RGraph rg = qsctl::to_rg_at(qsctl::compose(sys, opt.state_limit));

  std::string text = opt.formula;
  if (!text.empty() && text[0] == '@') text = read_file(text.substr(1));
  qsctl::Formula f = qsctl::parse_formula(text);
  qsctl::BindReport bind = qsctl::bind_check(f, rg);
  if (!bind.ok()) {
    std::cerr << "formula does not bind:\n";
    for (const auto& d : bind.diagnostics) std::cerr << "  " << d.str() << "\n";
    throw qsctl::parse_error("invalid formula");
  }

  qsctl::StateId anchor =
      opt.anchor.empty() ? rg.initial : rg.find_state(opt.anchor);

  qsctl::EvalContext ctx(rg, f);
  qsctl::EvalResult res = qsctl::eval(f, anchor, ctx);

  qsctl::CheckReport report;
  report.formula = qsctl::print_formula(f);
  report.anchor = rg.state_name(anchor);
  report.verdict = res.value;
  report.witness = res.witness;
  report.want_witness = opt.witness;
  report.want_stats = opt.stats;
  report.stats = ctx.stats();

  if (opt.oracle) {
    if (bind.has_dynamic_range)
      throw qsctl::eval_error(
          "--oracle cannot evaluate the dynamic quantifier range '" +
          bind.first_dynamic_range + "'");
    qsctl::Labeling lab = qsctl::label(rg, f);
    report.oracle_agrees = lab.holds(f.get(), anchor) == res.value;
  }

  std::cout << qsctl::report_to_json(rg, report).dump(2) << "\n";
  if (opt.exit_zero) return kExitTrue;
  return res.value ? kExitTrue : kExitFalse;
}

struct CharsetsOptions {
  std::string model;
  std::string state;
};

int cmd_charsets(const CharsetsOptions& opt) {
  qsctl::System sys = load_system(opt.model);
  qsctl::RGraph rg = qsctl::to_rg_at(qsctl::compose(sys));
  qsctl::StateId s = rg.find_state(opt.state);
  qsctl::CharSets cs = qsctl::char_sets(rg, s);

  // Self-check of the defining identities before reporting anything.
  auto inter = [](const std::set<qsctl::StateId>& a,
                  const std::set<qsctl::StateId>& b) {
    std::set<qsctl::StateId> out;
    for (qsctl::StateId x : a)
      if (b.count(x)) out.insert(x);
    return out;
  };
  auto minus = [](const std::set<qsctl::StateId>& a,
                  const std::set<qsctl::StateId>& b) {
    std::set<qsctl::StateId> out;
    for (qsctl::StateId x : a)
      if (!b.count(x)) out.insert(x);
    return out;
  };
  bool ok = cs.cyc == inter(cs.fut, cs.pas) && cs.end_ == minus(cs.fut, cs.pas) &&
            cs.beg == minus(cs.pas, cs.fut) && cs.beg == minus(cs.pas, cs.cyc) &&
            cs.end_ == minus(cs.fut, cs.cyc);

  qsctl::json j = qsctl::charsets_to_json(rg, cs);
  j["identities_ok"] = ok;
  std::cout << j.dump(2) << "\n";
  return ok ? kExitTrue : kExitFalse;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qsctl: a sphere-search model checker for CSM automata systems"};
  app.require_subcommand(1);

  ComposeOptions compose_opt;
  CLI::App* compose = app.add_subcommand(
      "compose", "compose a model into its reachability graph");
  compose->add_option("model", compose_opt.model, "model file")->required();
  compose->add_option("--dot", compose_opt.dot_path, "write DOT text here");
  compose->add_option("--json", compose_opt.json_path, "write a JSON dump here");
  compose->add_flag("--rg-at", compose_opt.rg_at,
                    "prune ears from non-terminal states first");
  compose->add_option("--state-limit", compose_opt.state_limit,
                      "abort composition beyond this many states");

  CheckOptions check_opt;
  CLI::App* check =
      app.add_subcommand("check", "evaluate a QsCTL formula on a model");
  check->add_option("model", check_opt.model, "model file")->required();
  check->add_option("formula", check_opt.formula,
                    "formula text, or @file to read it from a file")
      ->required();
  check->add_flag("--oracle", check_opt.oracle,
                  "also run the bottom-up labeller and report agreement");
  check->add_flag("--witness", check_opt.witness, "report a counterexample");
  check->add_flag("--stats", check_opt.stats, "report traversal statistics");
  check->add_option("--anchor", check_opt.anchor,
                    "evaluate at this state instead of the initial one");
  check->add_flag("--exit-zero", check_opt.exit_zero,
                  "exit 0 on a completed check regardless of the verdict");
  check->add_option("--state-limit", check_opt.state_limit,
                    "abort composition beyond this many states");

  CharsetsOptions charsets_opt;
  CLI::App* charsets = app.add_subcommand(
      "charsets", "characteristic sets FUT/PAS/CYC/END/BEG of a state");
  charsets->add_option("model", charsets_opt.model, "model file")->required();
  charsets->add_option("state", charsets_opt.state, "global state name")
      ->required();

  try {
    app.parse(argc, argv);
    if (compose->parsed()) return cmd_compose(compose_opt);
    if (check->parsed()) return cmd_check(check_opt);
    if (charsets->parsed()) return cmd_charsets(charsets_opt);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const qsctl::resource_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
