#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <vector>

#include "uql/gridworld.hpp"
#include "uql/oracle.hpp"
#include "uql/selftest.hpp"
#include "uql/soft_numerics.hpp"

namespace py = pybind11;

namespace {

std::vector<double> prior_or_uniform(std::vector<double> prior, int n) {
  if (prior.empty()) return uql::PriorPolicy::uniform(n).probs;
  return prior;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Tabular soft Q-learning core operations";

  m.def(
      "mellowmax",
      [](const std::vector<double>& values, double w,
         std::vector<double> prior) {
        prior = prior_or_uniform(std::move(prior),
                                 static_cast<int>(values.size()));
        return uql::mellowmax(values, prior, w);
      },
      py::arg("values"), py::arg("w"), py::arg("prior") = std::vector<double>{},
      "Soft maximum at temperature w (0 = max, inf = prior mean); the prior "
      "defaults to uniform.");

  m.def(
      "soft_greedy_policy",
      [](const std::vector<double>& values, double beta,
         std::vector<double> prior) {
        prior = prior_or_uniform(std::move(prior),
                                 static_cast<int>(values.size()));
        return uql::soft_greedy_policy(values, prior, beta);
      },
      py::arg("values"), py::arg("beta"),
      py::arg("prior") = std::vector<double>{},
      "Boltzmann policy over the prior at inverse temperature beta.");

  m.def(
      "solve_beta",
      [](const std::vector<std::vector<double>>& rows,
         std::vector<double> prior, double beta_min, double beta_max,
         int max_iterations, double residual_tol) {
        if (rows.empty()) throw std::invalid_argument("rows must be nonempty");
        prior = prior_or_uniform(std::move(prior),
                                 static_cast<int>(rows[0].size()));
        std::vector<std::span<const double>> views(rows.begin(), rows.end());
        uql::BetaSolverConfig cfg;
        cfg.beta_min = beta_min;
        cfg.beta_max = beta_max;
        cfg.max_iterations = max_iterations;
        cfg.residual_tol = residual_tol;
        return uql::solve_beta(views, prior, cfg);
      },
      py::arg("rows"), py::arg("prior") = std::vector<double>{},
      py::arg("beta_min") = 1e-20, py::arg("beta_max") = 2e6,
      py::arg("max_iterations") = 35, py::arg("residual_tol") = 1e-9,
      "Inverse temperature equalizing the mean soft value of the member rows "
      "with the hard value of their mean row.");

  m.def(
      "discrepancy",
      [](const std::vector<std::vector<double>>& rows,
         std::vector<double> prior, double beta) {
        if (rows.empty()) throw std::invalid_argument("rows must be nonempty");
        prior = prior_or_uniform(std::move(prior),
                                 static_cast<int>(rows[0].size()));
        std::vector<std::span<const double>> views(rows.begin(), rows.end());
        return uql::discrepancy(views, prior, beta);
      },
      py::arg("rows"), py::arg("prior") = std::vector<double>{},
      py::arg("beta") = 1.0,
      "Mean soft value of the rows minus the hard value of the mean row.");

  m.def(
      "gridworld_value_iteration",
      [](const std::vector<std::string>& rows, double slip_prob,
         double goal_reward, double step_reward, double discount) {
        uql::GridworldSpec spec = uql::GridworldSpec::defaults();
        if (!rows.empty()) spec.rows = rows;
        spec.slip_prob = slip_prob;
        spec.goal_reward = goal_reward;
        spec.step_reward = step_reward;
        spec.discount = discount;
        uql::Gridworld world = uql::build_gridworld(spec);
        uql::GroundTruth truth = uql::value_iteration(world.mdp);
        std::vector<std::vector<double>> q(world.mdp.num_states);
        for (int s = 0; s < world.mdp.num_states; ++s) {
          q[s].reserve(world.mdp.num_actions);
          for (int a = 0; a < world.mdp.num_actions; ++a)
            q[s].push_back(truth.q_star.at(s, a));
        }
        return py::make_tuple(q, truth.v_star, truth.pi_star);
      },
      py::arg("rows") = std::vector<std::string>{}, py::arg("slip_prob") = 0.2,
      py::arg("goal_reward") = 1.0, py::arg("step_reward") = 0.0,
      py::arg("discount") = 0.95,
      "(Q*, V*, optimal action sets) for an ASCII gridworld; empty rows use "
      "the bundled 8x8 map.");

  m.def(
      "selftest",
      []() {
        std::ostringstream out;
        bool ok = uql::run_selftest(out);
        return py::make_tuple(ok, out.str());
      },
      "Runs the fast property suites; returns (ok, report).");
}
