#pragma once

#include <optional>
#include <span>
#include <vector>

#include "uql/mdp.hpp"
#include "uql/oracle.hpp"
#include "uql/qtable.hpp"
#include "uql/soft_numerics.hpp"

namespace uql {

// One metrics snapshot during a run. probe_values/probe_biases are parallel
// to the probe-state list the run was configured with. All recorded values
// must be finite; the recorder throws otherwise.
struct RunRecord {
  long step = 0;
  std::vector<double> probe_values;
  std::vector<double> probe_biases;
  double policy_agreement = 0.0;
  double ensemble_spread = 0.0;
  std::optional<double> median_beta;
  std::optional<double> greedy_return_mc;
};

struct Trajectory {
  std::vector<Transition> steps;
  double discounted_return = 0.0;
};

// Ensemble-mean action values at a state.
std::vector<double> mean_action_values(std::span<const QTable> members, int s);

// argmax of the ensemble mean; ties break to the lowest action id.
int greedy_action(std::span<const QTable> members, int s);

// Value estimate max_a mean_i Q_i(s,a). K == 1 degenerates to the table max.
double estimate_value(std::span<const QTable> members, int s);

// estimate_value(s) - V*(s).
double estimate_bias(std::span<const QTable> members, const GroundTruth& truth,
                     int s);

// Fraction of non-terminal states whose greedy action is optimal.
double policy_agreement(std::span<const QTable> members, const TabularMdp& mdp,
                        const GroundTruth& truth);

// Largest pairwise sup-norm distance between members.
double ensemble_spread(std::span<const QTable> members);

// Follows the ensemble-greedy policy from `start` until a terminal state or
// the horizon cap; accumulates the discounted return.
Trajectory rollout_greedy(const TabularMdp& mdp, std::span<const QTable> members,
                          int start, int horizon, Rng& rng);

struct InitialStateBias {
  double mc = 0.0;     // mean over rollouts of estimate(s0) - return
  double exact = 0.0;  // E_start[estimate(s) - V^pi(s)], pi = ensemble greedy
};

InitialStateBias initial_state_bias(const TabularMdp& mdp,
                                    std::span<const QTable> members,
                                    int num_rollouts, int horizon, Rng& rng);

// Median over `states` of the solved inverse temperature on `targets`.
double median_solved_beta(std::span<const QTable> targets,
                          std::span<const int> states,
                          std::span<const double> prior,
                          const BetaSolverConfig& solver);

}  // namespace uql
