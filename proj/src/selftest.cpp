#include "uql/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "uql/agent.hpp"
#include "uql/checkpoint.hpp"
#include "uql/config.hpp"
#include "uql/gridworld.hpp"
#include "uql/oracle.hpp"
#include "uql/replay.hpp"
#include "uql/rng.hpp"
#include "uql/soft_numerics.hpp"

namespace uql {

namespace {

struct Reporter {
  std::ostream& out;
  bool all_ok = true;

  void run(const std::string& name, const std::string& detail) {
    if (detail.empty()) {
      out << "[ok] " << name << '\n';
    } else {
      out << "[FAIL] " << name << ": " << detail << '\n';
      all_ok = false;
    }
  }
};

std::vector<double> random_values(Rng& rng, int n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::string check_soft_operator() {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    int n = 2 + static_cast<int>(rng.uniform_int(7));
    std::vector<double> v = random_values(rng, n, -3.0, 3.0);
    PriorPolicy prior = PriorPolicy::uniform(n);
    double vmax = *std::max_element(v.begin(), v.end());
    double mean = 0.0;
    for (int a = 0; a < n; ++a) mean += prior.probs[a] * v[a];

    if (mellowmax(v, prior.probs, 0.0) != vmax) return "w=0 is not max";
    double at_inf = mellowmax(v, prior.probs,
                              std::numeric_limits<double>::infinity());
    if (std::abs(at_inf - mean) > 1e-12) return "w=inf is not the prior mean";

    double w_small = std::pow(10.0, rng.uniform(-3.0, 0.0));
    double w_large = w_small * std::pow(10.0, rng.uniform(0.0, 3.0));
    double m_small = mellowmax(v, prior.probs, w_small);
    double m_large = mellowmax(v, prior.probs, w_large);
    if (m_small < mean - 1e-10 || m_small > vmax + 1e-10)
      return "value escapes the [prior mean, max] sandwich";
    if (m_large > m_small + 1e-10) return "not monotone nonincreasing in w";

    double shift = rng.uniform(-5.0, 5.0);
    std::vector<double> shifted = v;
    for (double& x : shifted) x += shift;
    if (std::abs(mellowmax(shifted, prior.probs, w_small) - (m_small + shift)) >
        1e-10)
      return "not translation equivariant";
  }
  return "";
}

std::string check_beta_solver() {
  Rng rng(13);
  BetaSolverConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    int k = 2 + static_cast<int>(rng.uniform_int(4));
    int n = 2 + static_cast<int>(rng.uniform_int(7));
    std::vector<std::vector<double>> rows(k);
    for (auto& row : rows) row = random_values(rng, n, 0.0, 2.0);
    std::vector<std::span<const double>> views(rows.begin(), rows.end());
    PriorPolicy prior = PriorPolicy::uniform(n);
    double beta = solve_beta(views, prior.probs, cfg);
    double f = discrepancy(views, prior.probs, beta);
    if (beta == cfg.beta_min) {
      if (f < -1e-12) return "low clamp with negative discrepancy";
    } else if (beta == cfg.beta_max) {
      if (f > 1e-12) return "high clamp with positive discrepancy";
    } else if (std::abs(f) > 1e-6) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "interior residual %.3g", std::abs(f));
      return buf;
    }
  }
  return "";
}

std::string check_contraction() {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    int s = 3 + static_cast<int>(rng.uniform_int(4));
    int a = 2 + static_cast<int>(rng.uniform_int(3));
    double gamma = rng.uniform(0.5, 0.99);
    TabularMdp mdp = build_random_mdp(s, a, gamma, rng.next_u64());
    QTable qi(s, a), qj(s, a);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < a; ++j) {
        qi.at(i, j) = rng.uniform(-2.0, 2.0);
        qj.at(i, j) = rng.uniform(-2.0, 2.0);
      }
    double w = trial % 10 == 0 ? 0.0 : std::pow(10.0, rng.uniform(-3.0, 3.0));
    PriorPolicy prior = PriorPolicy::uniform(a);
    QTable bi = bellman_apply(mdp, prior.probs, w, qi);
    QTable bj = bellman_apply(mdp, prior.probs, w, qj);
    if (sup_norm_diff(bi, bj) > gamma * sup_norm_diff(qi, qj) + 1e-10)
      return "operator expanded a pair of tables";
  }
  return "";
}

std::string check_gridworld_rows() {
  Gridworld world = build_gridworld(GridworldSpec::defaults());
  const TabularMdp& mdp = world.mdp;
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      double sum = 0.0;
      for (double p : mdp.transition_row(s, a)) {
        if (p < 0.0) return "negative transition probability";
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) return "row does not sum to 1";
    }
  }
  return "";
}

std::string check_rng() {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i)
    if (a.next_u64() != b.next_u64()) return "same seed diverged";
  Rng c(7, 1);
  bool differs = false;
  Rng a2(7);
  for (int i = 0; i < 16; ++i) differs |= a2.next_u64() != c.next_u64();
  if (!differs) return "streams 0 and 1 coincide";
  Rng r(123);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform();
    if (u < 0.0 || u >= 1.0) return "uniform() outside [0,1)";
    std::uint64_t k = r.uniform_int(10);
    if (k >= 10) return "uniform_int(10) out of range";
    ++hits[k];
    if (!std::isfinite(r.normal())) return "normal() not finite";
  }
  for (int k = 0; k < 10; ++k)
    if (hits[k] == 0) return "uniform_int(10) missed a value";
  return "";
}

std::string check_replay() {
  ReplayBuffer buffer(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.state = i;
    buffer.push(t);
  }
  if (buffer.size() != 3) return "capacity not enforced";
  for (int i = 0; i < 3; ++i)
    if (buffer.at(i).state != i + 2) return "not FIFO oldest-first";
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    int s = buffer.sample(rng).state;
    if (s < 2 || s > 4) return "sample outside stored contents";
  }
  return "";
}

std::string check_checkpoint() {
  AgentConfig cfg;
  cfg.ensemble_size = 3;
  cfg.init.kind = QInitKind::random_uniform;
  Rng init_rng(3, 2);
  UqlAgent agent(4, 3, cfg, init_rng);
  TabularMdp mdp = build_random_mdp(4, 3, 0.9, 99);
  Rng stream(21);
  for (int i = 0; i < 25; ++i) {
    auto [s, a] = uniform_sa_sampler(mdp, stream);
    Transition t = sample_step(mdp, s, a, stream);
    agent.update_batch(std::span<const Transition>(&t, 1), mdp.discount);
  }
  std::string path =
      (std::filesystem::temp_directory_path() / "uql_selftest_ckpt.txt").string();
  save_checkpoint(path, agent, stream);

  UqlAgent restored(4, 3, cfg, init_rng);  // init draws differ on purpose
  Rng restored_stream(0);
  load_checkpoint(path, restored, restored_stream);
  std::filesystem::remove(path);
  for (int i = 0; i < 25; ++i) {
    auto [s1, a1] = uniform_sa_sampler(mdp, stream);
    Transition t1 = sample_step(mdp, s1, a1, stream);
    agent.update_batch(std::span<const Transition>(&t1, 1), mdp.discount);
    auto [s2, a2] = uniform_sa_sampler(mdp, restored_stream);
    Transition t2 = sample_step(mdp, s2, a2, restored_stream);
    restored.update_batch(std::span<const Transition>(&t2, 1), mdp.discount);
  }
  for (int k = 0; k < 3; ++k)
    if (sup_norm_diff(agent.members()[k], restored.members()[k]) != 0.0)
      return "resumed run diverged from the original";
  return "";
}

std::string check_config_round_trip() {
  const std::string text =
      "[environment]\n"
      "type = gridworld\n"
      "slip_prob = 0.2\n"
      "\n"
      "[agent]\n"
      "algorithm = uql\n"
      "kappa = inf\n"
      "\n"
      "[run]\n"
      "phase = uniform\n"
      "num_updates = 100\n"
      "seeds = 0,1,2\n";
  ConfigDoc doc = ConfigDoc::parse(text);
  ConfigDoc again = ConfigDoc::parse(doc.serialize());
  if (!(doc == again)) return "parse/serialize/parse is not the identity";
  if (!std::isinf(again.get_double("agent", "kappa"))) return "inf not preserved";
  return "";
}

}  // namespace

bool run_selftest(std::ostream& out) {
  Reporter reporter{out};
  reporter.run("soft operator identities", check_soft_operator());
  reporter.run("temperature solver residuals", check_beta_solver());
  reporter.run("soft Bellman contraction", check_contraction());
  reporter.run("gridworld transition rows", check_gridworld_rows());
  reporter.run("rng streams and distributions", check_rng());
  reporter.run("replay buffer fifo", check_replay());
  reporter.run("checkpoint resume", check_checkpoint());
  reporter.run("config round trip", check_config_round_trip());
  out << (reporter.all_ok ? "selftest: all suites passed\n"
                          : "selftest: FAILURES detected\n");
  return reporter.all_ok;
}

}  // namespace uql
