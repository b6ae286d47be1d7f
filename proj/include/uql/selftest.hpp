#pragma once

#include <ostream>

namespace uql {

// Runs the fast property suites (soft-operator identities, solver residuals,
// Bellman contraction, environment stochasticity, rng and replay behavior,
// checkpoint and config round trips), printing one [ok]/[FAIL] line per
// suite. Returns true when every suite passes.
bool run_selftest(std::ostream& out);

}  // namespace uql
