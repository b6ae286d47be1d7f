#include "uql/soft_numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uql {

namespace {

constexpr double kProbTol = 1e-12;

void check_prior(std::span<const double> prior) {
  if (prior.empty()) throw std::invalid_argument("prior: empty");
  double sum = 0.0;
  for (double p : prior) {
    if (!(p > 0.0)) throw std::invalid_argument("prior: entries must be > 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbTol)
    throw std::invalid_argument("prior: must sum to 1 within 1e-12");
}

double finite_max(std::span<const double> values, const char* who) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) throw std::invalid_argument(std::string(who) + ": NaN value");
    if (std::isinf(v)) throw std::invalid_argument(std::string(who) + ": non-finite value");
    m = std::max(m, v);
  }
  return m;
}

}  // namespace

PriorPolicy PriorPolicy::uniform(int num_actions) {
  if (num_actions <= 0)
    throw std::invalid_argument("PriorPolicy::uniform: num_actions must be > 0");
  PriorPolicy p;
  p.probs.assign(static_cast<std::size_t>(num_actions),
                 1.0 / static_cast<double>(num_actions));
  return p;
}

void PriorPolicy::validate() const { check_prior(probs); }

double mellowmax(std::span<const double> values, std::span<const double> prior,
                 double w) {
  if (values.empty() || values.size() != prior.size())
    throw std::invalid_argument("mellowmax: values/prior size mismatch");
  check_prior(prior);
  if (std::isnan(w) || w < 0.0)
    throw std::invalid_argument("mellowmax: w must be >= 0");
  double m = finite_max(values, "mellowmax");
  if (w == 0.0) return m;
  if (std::isinf(w)) {
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) mean += prior[i] * values[i];
    return mean;
  }
  // sum pi0 * expm1((v - m)/w) stays in (-1, 0]; log1p keeps full precision
  // both for w -> 0 (terms hit -1) and w -> inf (terms are O(1/w)).
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    s += prior[i] * std::expm1((values[i] - m) / w);
  return m + w * std::log1p(s);
}

std::vector<double> soft_greedy_policy(std::span<const double> values,
                                       std::span<const double> prior,
                                       double beta) {
  if (values.empty() || values.size() != prior.size())
    throw std::invalid_argument("soft_greedy_policy: values/prior size mismatch");
  check_prior(prior);
  if (std::isnan(beta) || beta < 0.0)
    throw std::invalid_argument("soft_greedy_policy: beta must be >= 0");
  double m = finite_max(values, "soft_greedy_policy");
  std::vector<double> pi(values.size());
  if (std::isinf(beta)) {
    int ties = 0;
    for (double v : values) ties += (v == m) ? 1 : 0;
    for (std::size_t i = 0; i < values.size(); ++i)
      pi[i] = (values[i] == m) ? 1.0 / ties : 0.0;
    return pi;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    pi[i] = prior[i] * std::exp(beta * (values[i] - m));
    z += pi[i];
  }
  for (double& p : pi) p /= z;
  return pi;
}

double discrepancy(std::span<const std::span<const double>> member_rows,
                   std::span<const double> prior, double beta) {
  if (member_rows.empty())
    throw std::invalid_argument("discrepancy: need at least one member");
  if (!(beta > 0.0) || std::isinf(beta))
    throw std::invalid_argument("discrepancy: beta must be a positive real");
  const std::size_t num_actions = prior.size();
  double mean_mmax = 0.0;
  std::vector<double> mean_row(num_actions, 0.0);
  for (const auto& row : member_rows) {
    if (row.size() != num_actions)
      throw std::invalid_argument("discrepancy: row/prior size mismatch");
    mean_mmax += mellowmax(row, prior, 1.0 / beta);
    for (std::size_t a = 0; a < num_actions; ++a) mean_row[a] += row[a];
  }
  const double k = static_cast<double>(member_rows.size());
  mean_mmax /= k;
  double max_mean = -std::numeric_limits<double>::infinity();
  for (double v : mean_row) max_mean = std::max(max_mean, v / k);
  return mean_mmax - max_mean;
}

void BetaSolverConfig::validate() const {
  if (!(beta_min > 0.0) || !(beta_max > beta_min) || std::isinf(beta_max))
    throw std::invalid_argument("BetaSolverConfig: need 0 < beta_min < beta_max < inf");
  if (max_iterations < 1)
    throw std::invalid_argument("BetaSolverConfig: max_iterations must be >= 1");
  if (!(residual_tol > 0.0))
    throw std::invalid_argument("BetaSolverConfig: residual_tol must be > 0");
}

double solve_beta(std::span<const std::span<const double>> member_rows,
                  std::span<const double> prior, const BetaSolverConfig& cfg) {
  cfg.validate();
  double f_hi = discrepancy(member_rows, prior, cfg.beta_max);
  if (f_hi <= 0.0) return cfg.beta_max;
  double f_lo = discrepancy(member_rows, prior, cfg.beta_min);
  if (f_lo >= 0.0) return cfg.beta_min;
  double lo = std::log(cfg.beta_min);
  double hi = std::log(cfg.beta_max);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    double mid = 0.5 * (lo + hi);
    double beta = std::exp(mid);
    double f = discrepancy(member_rows, prior, beta);
    if (std::abs(f) <= cfg.residual_tol) return beta;
    if (f > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

ReduceOp parse_reduce_op(std::string_view name) {
  if (name == "mellowmax") return ReduceOp::mellowmax;
  if (name == "softmax-expectation") return ReduceOp::softmax_expectation;
  if (name == "hardmax") return ReduceOp::hardmax;
  if (name == "prior-mean") return ReduceOp::prior_mean;
  throw std::invalid_argument("unknown reduce operator: " + std::string(name));
}

std::string_view reduce_op_name(ReduceOp op) {
  switch (op) {
    case ReduceOp::mellowmax: return "mellowmax";
    case ReduceOp::softmax_expectation: return "softmax-expectation";
    case ReduceOp::hardmax: return "hardmax";
    case ReduceOp::prior_mean: return "prior-mean";
  }
  throw std::invalid_argument("unknown reduce operator enum");
}

double reduce_next_state(std::span<const double> values,
                         std::span<const double> prior, double beta,
                         double kappa, ReduceOp op) {
  if (std::isnan(kappa) || !(kappa > 0.0))
    throw std::invalid_argument("reduce_next_state: kappa must be > 0");
  if (std::isnan(beta) || !(beta > 0.0))
    throw std::invalid_argument("reduce_next_state: beta must be > 0");
  if (std::isinf(kappa)) op = ReduceOp::hardmax;
  switch (op) {
    case ReduceOp::mellowmax:
      return mellowmax(values, prior, 1.0 / (kappa * beta));
    case ReduceOp::softmax_expectation: {
      std::vector<double> pi = soft_greedy_policy(values, prior, kappa * beta);
      double e = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) e += pi[i] * values[i];
      return e;
    }
    case ReduceOp::hardmax:
      return finite_max(values, "reduce_next_state");
    case ReduceOp::prior_mean: {
      check_prior(prior);
      double mean = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) mean += prior[i] * values[i];
      return mean;
    }
  }
  throw std::invalid_argument("reduce_next_state: unknown operator");
}

}  // namespace uql
