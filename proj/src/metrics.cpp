#include "uql/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uql {

std::vector<double> mean_action_values(std::span<const QTable> members, int s) {
  if (members.empty()) throw std::invalid_argument("mean_action_values: no members");
  const int num_actions = members[0].num_actions;
  std::vector<double> mean(num_actions, 0.0);
  for (const QTable& q : members) {
    auto row = q.row(s);
    for (int a = 0; a < num_actions; ++a) mean[a] += row[a];
  }
  for (double& v : mean) v /= static_cast<double>(members.size());
  return mean;
}

int greedy_action(std::span<const QTable> members, int s) {
  std::vector<double> mean = mean_action_values(members, s);
  int best = 0;
  for (int a = 1; a < static_cast<int>(mean.size()); ++a)
    if (mean[a] > mean[best]) best = a;
  return best;
}

double estimate_value(std::span<const QTable> members, int s) {
  std::vector<double> mean = mean_action_values(members, s);
  return *std::max_element(mean.begin(), mean.end());
}

double estimate_bias(std::span<const QTable> members, const GroundTruth& truth,
                     int s) {
  return estimate_value(members, s) - truth.v_star[s];
}

double policy_agreement(std::span<const QTable> members, const TabularMdp& mdp,
                        const GroundTruth& truth) {
  const auto& nt = mdp.nonterminal_states();
  if (nt.empty()) throw std::invalid_argument("policy_agreement: no non-terminal states");
  int agree = 0;
  for (int s : nt) {
    int a = greedy_action(members, s);
    const auto& opt = truth.pi_star[s];
    agree += std::binary_search(opt.begin(), opt.end(), a) ? 1 : 0;
  }
  return static_cast<double>(agree) / static_cast<double>(nt.size());
}

double ensemble_spread(std::span<const QTable> members) {
  double m = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      m = std::max(m, sup_norm_diff(members[i], members[j]));
  return m;
}

Trajectory rollout_greedy(const TabularMdp& mdp, std::span<const QTable> members,
                          int start, int horizon, Rng& rng) {
  Trajectory traj;
  int s = start;
  double gamma_pow = 1.0;
  for (int t = 0; t < horizon; ++t) {
    if (mdp.is_terminal(s)) break;
    Transition tr = sample_step(mdp, s, greedy_action(members, s), rng);
    traj.steps.push_back(tr);
    traj.discounted_return += gamma_pow * tr.reward;
    gamma_pow *= mdp.discount;
    s = tr.next_state;
  }
  return traj;
}

InitialStateBias initial_state_bias(const TabularMdp& mdp,
                                    std::span<const QTable> members,
                                    int num_rollouts, int horizon, Rng& rng) {
  if (num_rollouts <= 0)
    throw std::invalid_argument("initial_state_bias: num_rollouts must be > 0");
  InitialStateBias out;
  for (int i = 0; i < num_rollouts; ++i) {
    int s0 = sample_start_state(mdp, rng);
    Trajectory traj = rollout_greedy(mdp, members, s0, horizon, rng);
    out.mc += estimate_value(members, s0) - traj.discounted_return;
  }
  out.mc /= static_cast<double>(num_rollouts);

  std::vector<int> actions(mdp.num_states, 0);
  for (int s = 0; s < mdp.num_states; ++s) actions[s] = greedy_action(members, s);
  std::vector<double> v_pi = policy_evaluation(mdp, actions, 1e-10);
  for (int s = 0; s < mdp.num_states; ++s)
    if (mdp.start_dist[s] > 0.0)
      out.exact += mdp.start_dist[s] * (estimate_value(members, s) - v_pi[s]);
  return out;
}

double median_solved_beta(std::span<const QTable> targets,
                          std::span<const int> states,
                          std::span<const double> prior,
                          const BetaSolverConfig& solver) {
  if (states.empty()) throw std::invalid_argument("median_solved_beta: no states");
  std::vector<double> betas;
  betas.reserve(states.size());
  std::vector<std::span<const double>> rows(targets.size());
  for (int s : states) {
    for (std::size_t k = 0; k < targets.size(); ++k) rows[k] = targets[k].row(s);
    betas.push_back(solve_beta(rows, prior, solver));
  }
  std::size_t mid = betas.size() / 2;
  std::nth_element(betas.begin(), betas.begin() + mid, betas.end());
  double hi = betas[mid];
  if (betas.size() % 2 == 1) return hi;
  double lo = *std::max_element(betas.begin(), betas.begin() + mid);
  return 0.5 * (lo + hi);
}

}  // namespace uql
