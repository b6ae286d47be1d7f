#include "uql/gridworld.hpp"

#include <fstream>
#include <stdexcept>

namespace uql {

const int kGridDr[kNumGridActions] = {-1, -1, 0, 1, 1, 1, 0, -1};
const int kGridDc[kNumGridActions] = {0, 1, 1, 1, 0, -1, -1, -1};

GridworldSpec GridworldSpec::defaults() {
  GridworldSpec spec;
  spec.rows = {
      "........",
      "........",
      "..###...",
      "..###...",
      "..###...",
      "..###...",
      "........",
      "S......G",
  };
  return spec;
}

int GridGeometry::state_at(int r, int c) const {
  if (r < 0 || r >= height || c < 0 || c >= width)
    throw std::invalid_argument("state_at: cell out of range");
  int s = cell_state[static_cast<std::size_t>(r) * width + c];
  if (s < 0) throw std::invalid_argument("state_at: cell is a wall");
  return s;
}

namespace {

void check_map(const std::vector<std::string>& rows) {
  if (rows.empty() || rows[0].empty())
    throw std::invalid_argument("gridworld map: empty map");
  const std::size_t width = rows[0].size();
  int goals = 0;
  int starts = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != width)
      throw std::invalid_argument("gridworld map: row " + std::to_string(r) +
                                  " has length " + std::to_string(rows[r].size()) +
                                  ", expected " + std::to_string(width));
    for (char ch : rows[r]) {
      switch (ch) {
        case '#': case '.': break;
        case 'G': ++goals; break;
        case 'S': ++starts; break;
        default:
          throw std::invalid_argument(std::string("gridworld map: invalid character '") +
                                      ch + "' in row " + std::to_string(r));
      }
    }
  }
  if (goals != 1)
    throw std::invalid_argument("gridworld map: expected exactly one 'G', found " +
                                std::to_string(goals));
  if (starts > 1)
    throw std::invalid_argument("gridworld map: at most one 'S' allowed, found " +
                                std::to_string(starts));
}

}  // namespace

Gridworld build_gridworld(const GridworldSpec& spec) {
  check_map(spec.rows);
  if (!(spec.slip_prob >= 0.0) || spec.slip_prob > 1.0)
    throw std::invalid_argument("gridworld: slip_prob must be in [0, 1]");

  Gridworld world;
  GridGeometry& g = world.geom;
  g.height = static_cast<int>(spec.rows.size());
  g.width = static_cast<int>(spec.rows[0].size());
  g.cell_state.assign(static_cast<std::size_t>(g.height) * g.width, -1);

  auto cell = [&](int r, int c) -> char { return spec.rows[r][c]; };
  auto in_bounds = [&](int r, int c) {
    return r >= 0 && r < g.height && c >= 0 && c < g.width;
  };
  auto walkable = [&](int r, int c) {
    return in_bounds(r, c) && cell(r, c) != '#';
  };

  int goal_r = -1, goal_c = -1;
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      if (cell(r, c) == '#') continue;
      if (cell(r, c) == 'G') {
        goal_r = r;
        goal_c = c;
        continue;  // the goal cell maps to the terminal state, added last
      }
      int id = static_cast<int>(g.state_cell.size());
      g.cell_state[static_cast<std::size_t>(r) * g.width + c] = id;
      g.state_cell.emplace_back(r, c);
      if (cell(r, c) == 'S') g.start_state = id;
    }
  }
  g.terminal_state = static_cast<int>(g.state_cell.size());
  g.cell_state[static_cast<std::size_t>(goal_r) * g.width + goal_c] = g.terminal_state;
  g.state_cell.emplace_back(goal_r, goal_c);

  TabularMdp& mdp = world.mdp;
  mdp.num_states = g.terminal_state + 1;
  mdp.num_actions = kNumGridActions;
  mdp.discount = spec.discount;
  mdp.reward_noise_std = spec.reward_noise_std;
  const std::size_t S = static_cast<std::size_t>(mdp.num_states);
  mdp.transition.assign(S * kNumGridActions * S, 0.0);
  mdp.reward_mean.assign(S * kNumGridActions, 0.0);
  mdp.terminal.assign(S, 0);
  mdp.terminal[g.terminal_state] = 1;

  auto land = [&](int s, int a, int r, int c, double p) {
    int dest = g.cell_state[static_cast<std::size_t>(r) * g.width + c];
    mdp.transition[(static_cast<std::size_t>(s) * kNumGridActions + a) * S + dest] += p;
    double reward = (dest == g.terminal_state) ? spec.goal_reward : spec.step_reward;
    mdp.reward_mean[static_cast<std::size_t>(s) * kNumGridActions + a] += p * reward;
  };

  for (int s = 0; s < g.terminal_state; ++s) {
    auto [r, c] = g.state_cell[s];
    for (int a = 0; a < kNumGridActions; ++a) {
      int ir = r + kGridDr[a];
      int ic = c + kGridDc[a];
      if (!walkable(ir, ic)) {
        ir = r;
        ic = c;
      }
      land(s, a, ir, ic, 1.0 - spec.slip_prob);
      if (spec.slip_prob > 0.0) {
        std::vector<std::pair<int, int>> nbrs;
        for (int d = 0; d < kNumGridActions; ++d) {
          int nr = ir + kGridDr[d];
          int nc = ic + kGridDc[d];
          if (walkable(nr, nc)) nbrs.emplace_back(nr, nc);
        }
        if (nbrs.empty()) {
          land(s, a, r, c, spec.slip_prob);
        } else {
          double p = spec.slip_prob / static_cast<double>(nbrs.size());
          for (auto [nr, nc] : nbrs) land(s, a, nr, nc, p);
        }
      }
    }
  }
  // Terminal self-loop, zero reward.
  for (int a = 0; a < kNumGridActions; ++a)
    mdp.transition[(static_cast<std::size_t>(g.terminal_state) * kNumGridActions + a) * S +
                   g.terminal_state] = 1.0;

  mdp.start_dist.assign(S, 0.0);
  if (g.start_state >= 0) {
    mdp.start_dist[g.start_state] = 1.0;
  } else {
    for (int s = 0; s < g.terminal_state; ++s)
      mdp.start_dist[s] = 1.0 / g.terminal_state;
  }
  mdp.finalize();
  return world;
}

std::vector<std::string> load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open map file: " + path);
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t'))
      line.pop_back();
    rows.push_back(line);
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  return rows;
}

}  // namespace uql
