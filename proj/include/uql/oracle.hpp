#pragma once

#include <vector>

#include "uql/mdp.hpp"
#include "uql/qtable.hpp"
#include "uql/soft_numerics.hpp"

namespace uql {

struct GroundTruth {
  QTable q_star;
  std::vector<double> v_star;              // max_a q_star(s, a)
  std::vector<std::vector<int>> pi_star;   // optimal action sets (ties)
};

// One exact application of the soft Bellman operator
//   B_w[Q](s,a) = r(s,a) + discount * sum_s' p(s'|s,a) mmax_w(Q(s',.)).
// w == 0 gives the standard operator.
QTable bellman_apply(const TabularMdp& mdp, std::span<const double> prior,
                     double w, const QTable& q);

// Fixed point of B_w from Q = 0, stopping when the sweep residual is at most
// tol*(1-discount)/discount, which guarantees sup-norm error <= tol.
QTable soft_value_iteration(const TabularMdp& mdp, std::span<const double> prior,
                            double w, double tol = 1e-10);

// Exact solution of the hard Bellman equations. Actions within tie_tol of
// the per-state maximum are all recorded as optimal.
GroundTruth value_iteration(const TabularMdp& mdp, double tol = 1e-10,
                            double tie_tol = 1e-9);

// V^pi for the deterministic policy pi(s) = actions[s], iterated to the same
// stopping rule as value iteration.
std::vector<double> policy_evaluation(const TabularMdp& mdp,
                                      const std::vector<int>& actions,
                                      double tol = 1e-10);

}  // namespace uql
