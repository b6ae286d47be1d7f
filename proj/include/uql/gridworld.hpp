#pragma once

#include <string>
#include <utility>
#include <vector>

#include "uql/mdp.hpp"

namespace uql {

// ASCII map world with 8 compass actions. Map characters: '#' wall,
// '.' free, 'G' goal (exactly one), 'S' optional start (at most one).
struct GridworldSpec {
  std::vector<std::string> rows;
  double slip_prob = 0.2;
  double goal_reward = 1.0;
  double step_reward = 0.0;
  double discount = 0.95;
  double reward_noise_std = 0.0;

  static GridworldSpec defaults();  // bundled 8x8 map, default parameters
};

// Action ids, clockwise from North.
enum GridAction : int { kNorth = 0, kNorthEast, kEast, kSouthEast, kSouth,
                        kSouthWest, kWest, kNorthWest };
inline constexpr int kNumGridActions = 8;
// (row, col) deltas indexed by GridAction.
extern const int kGridDr[kNumGridActions];
extern const int kGridDc[kNumGridActions];

// Cell/state correspondence for probes and map rendering. Free cells get
// state ids in row-major order; the goal cell maps to the single absorbing
// terminal state, which gets the extra id num_states-1.
struct GridGeometry {
  int height = 0;
  int width = 0;
  std::vector<int> cell_state;                  // [r*width+c], -1 for walls
  std::vector<std::pair<int, int>> state_cell;  // state id -> (row, col)
  int terminal_state = -1;
  int start_state = -1;  // -1 when the map has no 'S'

  int state_at(int r, int c) const;  // throws on walls/out of range
};

struct Gridworld {
  TabularMdp mdp;
  GridGeometry geom;
};

// Moves: the intended cell is one step along the action direction, or the
// current cell when that step leaves the grid or hits a wall. The agent
// lands on the intended cell with probability 1-slip_prob; with probability
// slip_prob it lands uniformly on one of the in-bounds non-wall cells of the
// intended cell's 8-neighborhood (the current cell when that set is empty).
// Landing on 'G' transitions to the terminal state; reward_mean(s,a) is
// goal_reward weighted by the landing-on-goal probability, step_reward
// otherwise. Throws std::invalid_argument naming any map defect.
Gridworld build_gridworld(const GridworldSpec& spec);

// Reads a map file: non-empty lines, trailing whitespace stripped.
std::vector<std::string> load_map_file(const std::string& path);

}  // namespace uql
