#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "uql/rng.hpp"

namespace uql {

struct Transition {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  int next_state = 0;
  bool is_terminal = false;  // next_state is terminal
};

// Finite MDP with row-stochastic transitions and per-(s,a) mean rewards.
// Terminal states self-loop with probability 1 and reward 0.
class TabularMdp {
 public:
  int num_states = 0;
  int num_actions = 0;
  double discount = 0.0;          // in [0, 1)
  double reward_noise_std = 0.0;  // iid Gaussian noise on sampled rewards
  std::vector<double> transition;   // [s][a][s'] row-major
  std::vector<double> reward_mean;  // [s][a]
  std::vector<std::uint8_t> terminal;
  std::vector<double> start_dist;   // over states, sums to 1

  std::span<const double> transition_row(int s, int a) const {
    return {transition.data() +
                (static_cast<std::size_t>(s) * num_actions + a) * num_states,
            static_cast<std::size_t>(num_states)};
  }
  double reward(int s, int a) const {
    return reward_mean[static_cast<std::size_t>(s) * num_actions + a];
  }
  bool is_terminal(int s) const { return terminal[s] != 0; }
  const std::vector<int>& nonterminal_states() const { return nonterminal_; }

  // Checks shapes, row sums (1 within 1e-12), nonnegative probabilities,
  // terminal self-loops with zero reward, discount < 1, start distribution.
  // Builds the non-terminal state cache. Throws std::invalid_argument.
  void finalize();

 private:
  std::vector<int> nonterminal_;
};

// Samples one environment step. Terminal states absorb: returns
// (s, a, 0, s, true) without consuming randomness. Otherwise draws the next
// state by inverse CDF on the transition row (one uniform), then the reward
// as reward_mean plus Gaussian noise when reward_noise_std > 0.
Transition sample_step(const TabularMdp& mdp, int state, int action, Rng& rng);

// Uniform draw over non-terminal (state, action) pairs; one rng draw.
std::pair<int, int> uniform_sa_sampler(const TabularMdp& mdp, Rng& rng);

// Dense random MDP: Dirichlet(1) transition rows, rewards uniform in
// [0, reward_scale], no terminal states, uniform start distribution.
TabularMdp build_random_mdp(int num_states, int num_actions, double discount,
                            std::uint64_t seed, double reward_scale = 1.0);

// Draws a start state from the MDP's start distribution.
int sample_start_state(const TabularMdp& mdp, Rng& rng);

}  // namespace uql
