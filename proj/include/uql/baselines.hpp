#pragma once

#include <string_view>

#include "uql/agent.hpp"

namespace uql {

enum class BaselineKind { q_learning, double_q, sql_fixed_beta, ensemble_mean };

BaselineKind parse_baseline(std::string_view name);
std::string_view baseline_name(BaselineKind kind);

// One-step tabular updates. All use the shared td_update arithmetic and the
// terminal convention target = r when the transition enters a terminal state.

// Q(s,a) <- (1-alpha) Q(s,a) + alpha (r + gamma max_a' Q(s',a')).
void q_learning_update(QTable& q, const Transition& t, double alpha,
                       double gamma);

// Fair coin picks the updated table; the target bootstraps the other table
// at the updated table's argmax (lowest action id on ties).
void double_q_update(QTable& qa, QTable& qb, const Transition& t, double alpha,
                     double gamma, Rng& rng);

// Soft target r + gamma mmax_{1/beta}(Q(s',.)). beta == inf recovers the
// hard max, beta == 0 the prior mean.
void sql_fixed_beta_update(QTable& q, const Transition& t, double alpha,
                           double gamma, double beta,
                           std::span<const double> prior);

// All members share the target r + gamma max_a mean_k Q_k(s',a). Needs at
// least two members.
void ensemble_mean_update(std::span<QTable> members, const Transition& t,
                          double alpha, double gamma);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::q_learning;
  int num_tables = 1;  // independent instances for matched sample budgets
  LearningRate learning_rate;
  QInit init;
  Exploration exploration;
  PriorPolicy prior;  // empty -> uniform; sql_fixed_beta only
  double sql_beta = 1.0;
  double sql_beta_end = 0.0;     // linear schedule endpoint
  long sql_beta_updates = 0;     // 0 keeps sql_beta constant
  int batch_size = 32;
  bool shared_minibatch = false;
};

// Runs num_tables independent instances of a baseline on the same transition
// stream (double_q instances hold a table pair; their estimate view is the
// pairwise mean). ensemble_mean couples the instances through the shared
// target and requires num_tables >= 2.
class BaselineEnsemble : public Learner {
 public:
  BaselineEnsemble(int num_states, int num_actions, BaselineConfig cfg,
                   Rng& init_rng);

  const BaselineConfig& config() const { return cfg_; }
  long update_rounds() const { return update_rounds_; }
  double current_sql_beta() const;

  void update_batch(std::span<const Transition> batch, double gamma) override;
  void update_from_replay(const ReplayBuffer& buffer, double gamma,
                          Rng& rng) override;
  int select_action(int state, Rng& rng) const override;
  std::vector<QTable> estimate_tables() const override;

 private:
  double alpha_for(int s, int a) const;
  void apply(const Transition& t, double alpha, double gamma, double beta);

  int num_states_ = 0;
  int num_actions_ = 0;
  BaselineConfig cfg_;
  std::vector<QTable> tables_;   // double_q: 2 * num_tables, pairs adjacent
  std::vector<long> visits_;
  long update_rounds_ = 0;
  Rng coin_rng_;  // double_q coin stream, derived from init_rng
};

}  // namespace uql
