#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "uql/rng.hpp"

namespace uql {

struct QTable {
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> values;  // [s][a] row-major

  QTable() = default;
  QTable(int s, int a, double fill = 0.0)
      : num_states(s), num_actions(a),
        values(static_cast<std::size_t>(s) * a, fill) {}

  static QTable random_uniform(int s, int a, double lo, double hi, Rng& rng) {
    QTable q(s, a);
    for (double& v : q.values) v = rng.uniform(lo, hi);
    return q;
  }

  double& at(int s, int a) {
    return values[static_cast<std::size_t>(s) * num_actions + a];
  }
  double at(int s, int a) const {
    return values[static_cast<std::size_t>(s) * num_actions + a];
  }
  std::span<double> row(int s) {
    return {values.data() + static_cast<std::size_t>(s) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }
  std::span<const double> row(int s) const {
    return {values.data() + static_cast<std::size_t>(s) * num_actions,
            static_cast<std::size_t>(num_actions)};
  }
};

// Canonical TD step shared by every tabular update in the repo so that
// algorithms meant to coincide do so bitwise.
inline double td_update(double q, double target, double alpha) {
  return (1.0 - alpha) * q + alpha * target;
}

// Largest absolute entry difference; tables must have equal shapes.
inline double sup_norm_diff(const QTable& a, const QTable& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = a.values[i] - b.values[i];
    m = std::max(m, d < 0 ? -d : d);
  }
  return m;
}

}  // namespace uql
