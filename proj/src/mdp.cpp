#include "uql/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace uql {

namespace {
constexpr double kProbTol = 1e-12;

int draw_from_row(std::span<const double> row, Rng& rng) {
  double u = rng.uniform();
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < static_cast<int>(row.size()); ++i) {
    if (row[i] <= 0.0) continue;
    last_positive = i;
    cum += row[i];
    if (u < cum) return i;
  }
  // u landed in the rounding gap below 1; charge it to the last outcome.
  if (last_positive < 0) throw std::runtime_error("draw_from_row: zero row");
  return last_positive;
}
}  // namespace

void TabularMdp::finalize() {
  if (num_states <= 0 || num_actions <= 0)
    throw std::invalid_argument("TabularMdp: num_states/num_actions must be > 0");
  if (!(discount >= 0.0) || discount >= 1.0)
    throw std::invalid_argument("TabularMdp: discount must be in [0, 1)");
  if (!(reward_noise_std >= 0.0))
    throw std::invalid_argument("TabularMdp: reward_noise_std must be >= 0");
  const std::size_t s = static_cast<std::size_t>(num_states);
  const std::size_t a = static_cast<std::size_t>(num_actions);
  if (transition.size() != s * a * s || reward_mean.size() != s * a ||
      terminal.size() != s)
    throw std::invalid_argument("TabularMdp: table shape mismatch");
  for (int i = 0; i < num_states; ++i) {
    for (int j = 0; j < num_actions; ++j) {
      auto row = transition_row(i, j);
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0))
          throw std::invalid_argument("TabularMdp: negative transition prob at state " +
                                      std::to_string(i));
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbTol)
        throw std::invalid_argument("TabularMdp: transition row (s=" + std::to_string(i) +
                                    ", a=" + std::to_string(j) + ") sums to " +
                                    std::to_string(sum));
      if (is_terminal(i)) {
        if (row[i] != 1.0)
          throw std::invalid_argument("TabularMdp: terminal state " + std::to_string(i) +
                                      " must self-loop with probability 1");
        if (reward(i, j) != 0.0)
          throw std::invalid_argument("TabularMdp: terminal state " + std::to_string(i) +
                                      " must have zero reward");
      }
      if (!std::isfinite(reward(i, j)))
        throw std::invalid_argument("TabularMdp: non-finite reward");
    }
  }
  if (start_dist.empty()) {
    start_dist.assign(s, 0.0);
    int n = 0;
    for (int i = 0; i < num_states; ++i) n += is_terminal(i) ? 0 : 1;
    if (n == 0)
      throw std::invalid_argument("TabularMdp: no non-terminal state for start distribution");
    for (int i = 0; i < num_states; ++i)
      if (!is_terminal(i)) start_dist[i] = 1.0 / n;
  }
  if (start_dist.size() != s)
    throw std::invalid_argument("TabularMdp: start_dist shape mismatch");
  double sum = 0.0;
  for (double p : start_dist) {
    if (!(p >= 0.0)) throw std::invalid_argument("TabularMdp: negative start probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbTol)
    throw std::invalid_argument("TabularMdp: start_dist must sum to 1");
  nonterminal_.clear();
  for (int i = 0; i < num_states; ++i)
    if (!is_terminal(i)) nonterminal_.push_back(i);
}

Transition sample_step(const TabularMdp& mdp, int state, int action, Rng& rng) {
  if (state < 0 || state >= mdp.num_states || action < 0 ||
      action >= mdp.num_actions)
    throw std::invalid_argument("sample_step: state/action out of range");
  if (mdp.is_terminal(state)) return {state, action, 0.0, state, true};
  int next = draw_from_row(mdp.transition_row(state, action), rng);
  double r = mdp.reward(state, action);
  if (mdp.reward_noise_std > 0.0) r += mdp.reward_noise_std * rng.normal();
  return {state, action, r, next, mdp.is_terminal(next)};
}

std::pair<int, int> uniform_sa_sampler(const TabularMdp& mdp, Rng& rng) {
  const auto& nt = mdp.nonterminal_states();
  if (nt.empty())
    throw std::invalid_argument("uniform_sa_sampler: no non-terminal states");
  std::uint64_t idx = rng.uniform_int(nt.size() *
                                      static_cast<std::uint64_t>(mdp.num_actions));
  return {nt[idx / mdp.num_actions], static_cast<int>(idx % mdp.num_actions)};
}

TabularMdp build_random_mdp(int num_states, int num_actions, double discount,
                            std::uint64_t seed, double reward_scale) {
  if (num_states <= 0 || num_actions <= 0)
    throw std::invalid_argument("build_random_mdp: sizes must be > 0");
  Rng rng(seed);
  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = discount;
  mdp.transition.assign(static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0);
  mdp.reward_mean.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
  mdp.terminal.assign(num_states, 0);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      double* row = mdp.transition.data() +
                    (static_cast<std::size_t>(s) * num_actions + a) * num_states;
      double sum = 0.0;
      for (int t = 0; t < num_states; ++t) {
        // Exp(1) draws normalized below: Dirichlet(1) row.
        double e = -std::log(1.0 - rng.uniform());
        row[t] = e;
        sum += e;
      }
      for (int t = 0; t < num_states; ++t) row[t] /= sum;
      mdp.reward_mean[static_cast<std::size_t>(s) * num_actions + a] =
          reward_scale * rng.uniform();
    }
  }
  mdp.finalize();
  return mdp;
}

int sample_start_state(const TabularMdp& mdp, Rng& rng) {
  return draw_from_row(mdp.start_dist, rng);
}

}  // namespace uql
