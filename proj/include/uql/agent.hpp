#pragma once

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "uql/mdp.hpp"
#include "uql/metrics.hpp"
#include "uql/qtable.hpp"
#include "uql/replay.hpp"
#include "uql/soft_numerics.hpp"

namespace uql {

enum class LearningRateKind { constant, polynomial };

// constant: alpha. polynomial: a / (b + visits(s,a))^p with per-pair visit
// counts, so the first update of a pair uses a / b^p.
struct LearningRate {
  LearningRateKind kind = LearningRateKind::constant;
  double alpha = 0.1;
  double a = 1.0;
  double b = 1.0;
  double p = 0.8;

  void validate() const;
};

enum class ExplorationKind { epsilon_greedy, ucb, uniform };

struct Exploration {
  ExplorationKind kind = ExplorationKind::epsilon_greedy;
  double epsilon = 0.1;
  double ucb_lambda = 1.0;  // score = mean + lambda * member std
};

enum class QInitKind { constant, random_uniform };

struct QInit {
  QInitKind kind = QInitKind::constant;
  double value = 0.0;  // constant fill
  double low = 0.0;    // random_uniform range
  double high = 1.0;
};

struct AgentConfig {
  int ensemble_size = 5;
  double kappa = 1.0;  // bias correction; inf forces hard backups
  ReduceOp reduce_op = ReduceOp::mellowmax;
  PriorPolicy prior;   // empty -> uniform over actions
  BetaSolverConfig solver;
  LearningRate learning_rate;
  Exploration exploration;
  QInit init;
  int target_sync_interval = 1;
  int batch_size = 32;            // replay minibatch size
  bool shared_minibatch = false;  // one batch for all members vs one each
};

// Common face the phase drivers run against: the ensemble agent and the
// baseline runners both implement it.
class Learner {
 public:
  virtual ~Learner() = default;

  // Applies one batch of environment transitions to every member. The
  // uniform update phase calls this with a single transition.
  virtual void update_batch(std::span<const Transition> batch, double gamma) = 0;

  // One learning round from replay; no-op while the buffer holds fewer than
  // batch_size transitions.
  virtual void update_from_replay(const ReplayBuffer& buffer, double gamma,
                                  Rng& rng) = 0;

  virtual int select_action(int state, Rng& rng) const = 0;

  // Member value estimates snapshot for metrics.
  virtual std::vector<QTable> estimate_tables() const = 0;

  virtual std::optional<double> median_solved_beta_over(
      std::span<const int> states) const {
    (void)states;
    return std::nullopt;
  }
};

// Ensemble agent with soft backups. The backup for member k at transition
// (s, a, r, s') is
//   y = r                                    when s' is terminal
//   y = r + gamma * reduce(Qbar_k(s',.), beta(s'), kappa)   otherwise
// where beta(s') is solved once per distinct next state on the target
// tables and shared across members, and reduce is the configured operator
// at effective temperature 1/(kappa * beta). Members update as
// Q_k(s,a) <- (1 - alpha) Q_k(s,a) + alpha y. Target tables sync to the
// members every target_sync_interval update rounds.
class UqlAgent : public Learner {
 public:
  UqlAgent(int num_states, int num_actions, AgentConfig cfg, Rng& init_rng);

  const AgentConfig& config() const { return cfg_; }
  const std::vector<QTable>& members() const { return members_; }
  const std::vector<QTable>& targets() const { return targets_; }
  std::vector<QTable>& mutable_members() { return members_; }
  long update_rounds() const { return update_rounds_; }
  const std::vector<long>& visit_counts() const { return visits_; }

  void sync_targets() { targets_ = members_; }

  // beta for a next state, solved on the target tables.
  double solve_beta_for(int next_state) const;

  // Backup target for one member; beta as returned by solve_beta_for.
  double backup_target(int member, const Transition& t, double beta,
                       double gamma) const;

  void update_batch(std::span<const Transition> batch, double gamma) override;
  void update_from_replay(const ReplayBuffer& buffer, double gamma,
                          Rng& rng) override;
  int select_action(int state, Rng& rng) const override;
  std::vector<QTable> estimate_tables() const override { return members_; }
  std::optional<double> median_solved_beta_over(
      std::span<const int> states) const override;

  // Serialization hooks for checkpoints.
  friend void save_checkpoint(const std::string& path, const UqlAgent& agent,
                              const Rng& rng);
  friend void load_checkpoint(const std::string& path, UqlAgent& agent,
                              Rng& rng);

 private:
  double alpha_for(int s, int a) const;
  void apply(int member, const Transition& t, double beta, double alpha,
             double gamma);
  void finish_round();

  int num_states_ = 0;
  int num_actions_ = 0;
  AgentConfig cfg_;
  std::vector<QTable> members_;
  std::vector<QTable> targets_;
  std::vector<long> visits_;  // [s][a], shared across members
  long update_rounds_ = 0;
};

// Metric recording shared by the phase drivers. truth must outlive the run.
struct PhaseMetricsConfig {
  const GroundTruth* truth = nullptr;
  std::vector<int> probe_states;
  int record_interval = 50;
  bool record_median_beta = true;
  int eval_rollouts = 0;  // greedy Monte-Carlo return; 0 skips the metric
  int eval_horizon = 400;
  Rng* eval_rng = nullptr;  // required when eval_rollouts > 0

  void validate(const TabularMdp& mdp) const;
};

RunRecord make_run_record(const TabularMdp& mdp, const Learner& learner,
                          const PhaseMetricsConfig& metrics, long step);

// Uniformly samples non-terminal (s, a), steps the environment, and applies
// the single transition to every member. Records metrics every
// record_interval updates and after the final one.
std::vector<RunRecord> run_uniform_update_phase(const TabularMdp& mdp,
                                                Learner& learner,
                                                long num_updates,
                                                const PhaseMetricsConfig& metrics,
                                                Rng& rng);

// Behavior-policy rollout with replay. Episodes reset on terminal states and
// at episode_horizon steps. One update round per environment step.
std::vector<RunRecord> run_online_phase(const TabularMdp& mdp, Learner& learner,
                                        ReplayBuffer& buffer, long num_steps,
                                        int episode_horizon,
                                        const PhaseMetricsConfig& metrics,
                                        Rng& rng);

}  // namespace uql
