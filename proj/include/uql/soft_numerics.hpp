#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uql {

// Strictly positive action prior; rows must sum to 1 within 1e-12.
struct PriorPolicy {
  std::vector<double> probs;

  static PriorPolicy uniform(int num_actions);
  void validate() const;
};

// Soft maximum over actions at temperature w:
//   mmax_w(v) = w * log sum_a prior(a) * exp(v(a) / w)
// evaluated max-shifted so no positive argument is ever exponentiated.
// Limits are exact: w == 0 returns max(v); w == inf returns the prior mean.
// Monotone nonincreasing in w; prior-mean <= result <= max(v).
double mellowmax(std::span<const double> values, std::span<const double> prior,
                 double w);

// pi(a) proportional to prior(a) * exp(beta * v(a)), max-shifted.
// beta == 0 returns the prior; beta == inf returns the uniform distribution
// over the argmax set of v.
std::vector<double> soft_greedy_policy(std::span<const double> values,
                                       std::span<const double> prior,
                                       double beta);

// Ensemble discrepancy at inverse temperature beta (finite, positive):
//   f(beta) = (1/K) sum_i mmax_{1/beta}(row_i) - max_a (1/K) sum_i row_i(a).
// Nondecreasing in beta; <= 0 as beta -> 0, >= 0 as beta -> inf.
double discrepancy(std::span<const std::span<const double>> member_rows,
                   std::span<const double> prior, double beta);

struct BetaSolverConfig {
  double beta_min = 1e-20;
  double beta_max = 2e6;
  int max_iterations = 35;
  double residual_tol = 1e-9;

  void validate() const;
};

// Root of the discrepancy by bisection on log(beta). Clamps: returns
// beta_max when f(beta_max) <= 0 (members agree, including the constant-row
// tie f == 0), beta_min when f(beta_min) >= 0 (full disagreement). Otherwise
// the result satisfies |f(beta)| <= residual_tol or lies in a final bracket
// of log-width (log beta_max - log beta_min) / 2^max_iterations.
double solve_beta(std::span<const std::span<const double>> member_rows,
                  std::span<const double> prior, const BetaSolverConfig& cfg);

// Next-state value reductions used in update targets.
enum class ReduceOp { mellowmax, softmax_expectation, hardmax, prior_mean };

ReduceOp parse_reduce_op(std::string_view name);
std::string_view reduce_op_name(ReduceOp op);

// Applies the chosen reduction at effective temperature w = 1/(kappa*beta).
// kappa == inf forces hardmax regardless of op.
double reduce_next_state(std::span<const double> values,
                         std::span<const double> prior, double beta,
                         double kappa, ReduceOp op);

}  // namespace uql
