#include "uql/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uql {

namespace {
double stop_threshold(double discount, double tol) {
  if (discount == 0.0) return std::numeric_limits<double>::infinity();
  return tol * (1.0 - discount) / discount;
}
}  // namespace

QTable bellman_apply(const TabularMdp& mdp, std::span<const double> prior,
                     double w, const QTable& q) {
  if (q.num_states != mdp.num_states || q.num_actions != mdp.num_actions)
    throw std::invalid_argument("bellman_apply: table shape mismatch");
  std::vector<double> next_value(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s)
    next_value[s] = mellowmax(q.row(s), prior, w);
  QTable out(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      auto row = mdp.transition_row(s, a);
      double ev = 0.0;
      for (int t = 0; t < mdp.num_states; ++t)
        if (row[t] > 0.0) ev += row[t] * next_value[t];
      out.at(s, a) = mdp.reward(s, a) + mdp.discount * ev;
    }
  }
  return out;
}

QTable soft_value_iteration(const TabularMdp& mdp, std::span<const double> prior,
                            double w, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("soft_value_iteration: tol must be > 0");
  QTable q(mdp.num_states, mdp.num_actions, 0.0);
  const double threshold = stop_threshold(mdp.discount, tol);
  for (;;) {
    QTable next = bellman_apply(mdp, prior, w, q);
    double residual = sup_norm_diff(next, q);
    q = std::move(next);
    if (residual <= threshold) return q;
  }
}

GroundTruth value_iteration(const TabularMdp& mdp, double tol, double tie_tol) {
  PriorPolicy prior = PriorPolicy::uniform(mdp.num_actions);
  GroundTruth gt;
  gt.q_star = soft_value_iteration(mdp, prior.probs, 0.0, tol);
  gt.v_star.resize(mdp.num_states);
  gt.pi_star.resize(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    auto row = gt.q_star.row(s);
    double m = *std::max_element(row.begin(), row.end());
    gt.v_star[s] = m;
    for (int a = 0; a < mdp.num_actions; ++a)
      if (row[a] >= m - tie_tol) gt.pi_star[s].push_back(a);
  }
  return gt;
}

std::vector<double> policy_evaluation(const TabularMdp& mdp,
                                      const std::vector<int>& actions,
                                      double tol) {
  if (static_cast<int>(actions.size()) != mdp.num_states)
    throw std::invalid_argument("policy_evaluation: one action per state required");
  for (int s = 0; s < mdp.num_states; ++s)
    if (actions[s] < 0 || actions[s] >= mdp.num_actions)
      throw std::invalid_argument("policy_evaluation: action out of range");
  std::vector<double> v(mdp.num_states, 0.0);
  std::vector<double> next(mdp.num_states);
  const double threshold = stop_threshold(mdp.discount, tol);
  for (;;) {
    double residual = 0.0;
    for (int s = 0; s < mdp.num_states; ++s) {
      auto row = mdp.transition_row(s, actions[s]);
      double ev = 0.0;
      for (int t = 0; t < mdp.num_states; ++t)
        if (row[t] > 0.0) ev += row[t] * v[t];
      next[s] = mdp.reward(s, actions[s]) + mdp.discount * ev;
      residual = std::max(residual, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    if (residual <= threshold) return v;
  }
}

}  // namespace uql
