#pragma once

#include <stdexcept>
#include <string>

namespace qsctl {

// Global states of a reachability graph are addressed by dense integer ids
// assigned in canonical BFS order.
using StateId = int;

// Text could not be parsed; the message carries the position.
struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Semantic failure during evaluation: unbound signal, unknown state name,
// formula shape the callee cannot handle.
struct eval_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Caller-supplied configuration is inconsistent (e.g. overlapping fixed and
// free signal domains).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An explicit resource limit was exceeded.
struct resource_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One validation or bind-check finding. Validation never throws; it reports
// every violation it can locate.
struct Diagnostic {
  std::string automaton;  // may be empty for system-level findings
  std::string state;      // may be empty
  std::string message;

  std::string str() const {
    std::string out;
    if (!automaton.empty()) {
      out += automaton;
      if (!state.empty()) {
        out += '.';
        out += state;
      }
      out += ": ";
    }
    out += message;
    return out;
  }
};

}  // namespace qsctl
