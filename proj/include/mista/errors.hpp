#pragma once

#include <stdexcept>
#include <string>

namespace mista {

// invalid parameter or argument outside an operation's stated domain
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// request would exceed a hard size/overflow guard
struct SizeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numerical solver failed to reach its required residual
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// drift function has no detectable root (defensive; see docs)
struct NoRootError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// optimizer found no feasible point in the search domain
struct NoFeasiblePointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mista
