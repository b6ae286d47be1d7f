#include "uql/agent.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace uql {

void LearningRate::validate() const {
  if (kind == LearningRateKind::constant) {
    if (!(alpha > 0.0) || alpha > 1.0)
      throw std::invalid_argument("LearningRate: alpha must be in (0, 1]");
  } else {
    if (!(a > 0.0) || !(b > 0.0) || !(p > 0.0))
      throw std::invalid_argument("LearningRate: polynomial parameters must be > 0");
    if (a / std::pow(b, p) > 1.0)
      throw std::invalid_argument("LearningRate: first polynomial step exceeds 1");
  }
}

UqlAgent::UqlAgent(int num_states, int num_actions, AgentConfig cfg,
                   Rng& init_rng)
    : num_states_(num_states), num_actions_(num_actions), cfg_(std::move(cfg)) {
  if (num_states <= 0 || num_actions <= 0)
    throw std::invalid_argument("UqlAgent: num_states/num_actions must be > 0");
  if (cfg_.ensemble_size < 1)
    throw std::invalid_argument("UqlAgent: ensemble_size must be >= 1");
  if (std::isnan(cfg_.kappa) || !(cfg_.kappa > 0.0))
    throw std::invalid_argument("UqlAgent: kappa must be > 0 (inf allowed)");
  if (cfg_.target_sync_interval < 1)
    throw std::invalid_argument("UqlAgent: target_sync_interval must be >= 1");
  if (cfg_.batch_size < 1)
    throw std::invalid_argument("UqlAgent: batch_size must be >= 1");
  if (cfg_.prior.probs.empty()) cfg_.prior = PriorPolicy::uniform(num_actions);
  if (static_cast<int>(cfg_.prior.probs.size()) != num_actions)
    throw std::invalid_argument("UqlAgent: prior size mismatch");
  cfg_.prior.validate();
  cfg_.solver.validate();
  cfg_.learning_rate.validate();

  members_.reserve(cfg_.ensemble_size);
  for (int k = 0; k < cfg_.ensemble_size; ++k) {
    if (cfg_.init.kind == QInitKind::constant)
      members_.emplace_back(num_states, num_actions, cfg_.init.value);
    else
      members_.push_back(QTable::random_uniform(num_states, num_actions,
                                                cfg_.init.low, cfg_.init.high,
                                                init_rng));
  }
  targets_ = members_;
  visits_.assign(static_cast<std::size_t>(num_states) * num_actions, 0);
}

double UqlAgent::alpha_for(int s, int a) const {
  const LearningRate& lr = cfg_.learning_rate;
  if (lr.kind == LearningRateKind::constant) return lr.alpha;
  long v = visits_[static_cast<std::size_t>(s) * num_actions_ + a];
  return lr.a / std::pow(lr.b + static_cast<double>(v), lr.p);
}

double UqlAgent::solve_beta_for(int next_state) const {
  std::vector<std::span<const double>> rows(targets_.size());
  for (std::size_t k = 0; k < targets_.size(); ++k)
    rows[k] = targets_[k].row(next_state);
  return solve_beta(rows, cfg_.prior.probs, cfg_.solver);
}

double UqlAgent::backup_target(int member, const Transition& t, double beta,
                               double gamma) const {
  if (t.is_terminal) return t.reward;
  return t.reward + gamma * reduce_next_state(targets_[member].row(t.next_state),
                                              cfg_.prior.probs, beta,
                                              cfg_.kappa, cfg_.reduce_op);
}

void UqlAgent::apply(int member, const Transition& t, double beta, double alpha,
                     double gamma) {
  double y = backup_target(member, t, beta, gamma);
  double& q = members_[member].at(t.state, t.action);
  q = td_update(q, y, alpha);
}

void UqlAgent::finish_round() {
  ++update_rounds_;
  if (update_rounds_ % cfg_.target_sync_interval == 0) sync_targets();
}

void UqlAgent::update_batch(std::span<const Transition> batch, double gamma) {
  // Hard backups never read beta; skip the solve entirely.
  const bool hard = std::isinf(cfg_.kappa) || cfg_.reduce_op == ReduceOp::hardmax;
  std::unordered_map<int, double> betas;
  if (!hard) {
    for (const Transition& t : batch)
      if (!t.is_terminal && !betas.count(t.next_state))
        betas.emplace(t.next_state, solve_beta_for(t.next_state));
  }
  for (const Transition& t : batch) {
    double beta = hard || t.is_terminal ? cfg_.solver.beta_max
                                        : betas.at(t.next_state);
    double alpha = alpha_for(t.state, t.action);
    for (int k = 0; k < cfg_.ensemble_size; ++k) apply(k, t, beta, alpha, gamma);
    ++visits_[static_cast<std::size_t>(t.state) * num_actions_ + t.action];
  }
  finish_round();
}

void UqlAgent::update_from_replay(const ReplayBuffer& buffer, double gamma,
                                  Rng& rng) {
  if (buffer.size() < static_cast<std::size_t>(cfg_.batch_size)) return;
  const bool hard = std::isinf(cfg_.kappa) || cfg_.reduce_op == ReduceOp::hardmax;
  std::unordered_map<int, double> betas;
  auto beta_of = [&](int s) {
    if (hard) return cfg_.solver.beta_max;
    auto it = betas.find(s);
    if (it == betas.end()) it = betas.emplace(s, solve_beta_for(s)).first;
    return it->second;
  };
  if (cfg_.shared_minibatch) {
    std::vector<Transition> batch;
    batch.reserve(cfg_.batch_size);
    for (int i = 0; i < cfg_.batch_size; ++i) batch.push_back(buffer.sample(rng));
    for (const Transition& t : batch) {
      double beta = t.is_terminal ? cfg_.solver.beta_max : beta_of(t.next_state);
      double alpha = alpha_for(t.state, t.action);
      for (int k = 0; k < cfg_.ensemble_size; ++k) apply(k, t, beta, alpha, gamma);
      ++visits_[static_cast<std::size_t>(t.state) * num_actions_ + t.action];
    }
  } else {
    for (int k = 0; k < cfg_.ensemble_size; ++k) {
      for (int i = 0; i < cfg_.batch_size; ++i) {
        const Transition& t = buffer.sample(rng);
        double beta = t.is_terminal ? cfg_.solver.beta_max : beta_of(t.next_state);
        apply(k, t, beta, alpha_for(t.state, t.action), gamma);
        ++visits_[static_cast<std::size_t>(t.state) * num_actions_ + t.action];
      }
    }
  }
  finish_round();
}

int UqlAgent::select_action(int state, Rng& rng) const {
  switch (cfg_.exploration.kind) {
    case ExplorationKind::uniform:
      return static_cast<int>(rng.uniform_int(num_actions_));
    case ExplorationKind::epsilon_greedy: {
      if (rng.uniform() < cfg_.exploration.epsilon)
        return static_cast<int>(rng.uniform_int(num_actions_));
      return greedy_action(members_, state);
    }
    case ExplorationKind::ucb: {
      // mean + lambda * population std across members, per action.
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < num_actions_; ++a) {
        double mean = 0.0;
        for (const QTable& q : members_) mean += q.at(state, a);
        mean /= static_cast<double>(members_.size());
        double var = 0.0;
        for (const QTable& q : members_) {
          double d = q.at(state, a) - mean;
          var += d * d;
        }
        var /= static_cast<double>(members_.size());
        double score = mean + cfg_.exploration.ucb_lambda * std::sqrt(var);
        if (score > best_score) {
          best_score = score;
          best = a;
        }
      }
      return best;
    }
  }
  throw std::invalid_argument("select_action: unknown exploration kind");
}

std::optional<double> UqlAgent::median_solved_beta_over(
    std::span<const int> states) const {
  if (std::isinf(cfg_.kappa)) return std::nullopt;
  return median_solved_beta(targets_, states, cfg_.prior.probs, cfg_.solver);
}

void PhaseMetricsConfig::validate(const TabularMdp& mdp) const {
  if (truth == nullptr)
    throw std::invalid_argument("PhaseMetricsConfig: ground truth required");
  if (record_interval < 1)
    throw std::invalid_argument("PhaseMetricsConfig: record_interval must be >= 1");
  for (int s : probe_states)
    if (s < 0 || s >= mdp.num_states)
      throw std::invalid_argument("PhaseMetricsConfig: probe state out of range");
  if (eval_rollouts > 0 && eval_rng == nullptr)
    throw std::invalid_argument("PhaseMetricsConfig: eval_rng required for rollouts");
}

RunRecord make_run_record(const TabularMdp& mdp, const Learner& learner,
                          const PhaseMetricsConfig& metrics, long step) {
  metrics.validate(mdp);
  std::vector<QTable> tables = learner.estimate_tables();
  RunRecord rec;
  rec.step = step;
  for (int s : metrics.probe_states) {
    rec.probe_values.push_back(estimate_value(tables, s));
    rec.probe_biases.push_back(estimate_bias(tables, *metrics.truth, s));
  }
  rec.policy_agreement = policy_agreement(tables, mdp, *metrics.truth);
  rec.ensemble_spread = ensemble_spread(tables);
  if (metrics.record_median_beta)
    rec.median_beta = learner.median_solved_beta_over(mdp.nonterminal_states());
  if (metrics.eval_rollouts > 0) {
    double sum = 0.0;
    for (int i = 0; i < metrics.eval_rollouts; ++i) {
      int s0 = sample_start_state(mdp, *metrics.eval_rng);
      sum += rollout_greedy(mdp, tables, s0, metrics.eval_horizon,
                            *metrics.eval_rng)
                 .discounted_return;
    }
    rec.greedy_return_mc = sum / metrics.eval_rollouts;
  }
  auto check = [](double v) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite metric value");
  };
  for (double v : rec.probe_values) check(v);
  for (double v : rec.probe_biases) check(v);
  check(rec.policy_agreement);
  check(rec.ensemble_spread);
  if (rec.median_beta) check(*rec.median_beta);
  if (rec.greedy_return_mc) check(*rec.greedy_return_mc);
  return rec;
}

std::vector<RunRecord> run_uniform_update_phase(const TabularMdp& mdp,
                                                Learner& learner,
                                                long num_updates,
                                                const PhaseMetricsConfig& metrics,
                                                Rng& rng) {
  if (num_updates < 0)
    throw std::invalid_argument("run_uniform_update_phase: negative num_updates");
  metrics.validate(mdp);
  std::vector<RunRecord> records;
  for (long u = 1; u <= num_updates; ++u) {
    auto [s, a] = uniform_sa_sampler(mdp, rng);
    Transition t = sample_step(mdp, s, a, rng);
    learner.update_batch({&t, 1}, mdp.discount);
    if (u % metrics.record_interval == 0 || u == num_updates)
      records.push_back(make_run_record(mdp, learner, metrics, u));
  }
  return records;
}

std::vector<RunRecord> run_online_phase(const TabularMdp& mdp, Learner& learner,
                                        ReplayBuffer& buffer, long num_steps,
                                        int episode_horizon,
                                        const PhaseMetricsConfig& metrics,
                                        Rng& rng) {
  if (num_steps < 0)
    throw std::invalid_argument("run_online_phase: negative num_steps");
  if (episode_horizon < 1)
    throw std::invalid_argument("run_online_phase: episode_horizon must be >= 1");
  metrics.validate(mdp);
  std::vector<RunRecord> records;
  int state = sample_start_state(mdp, rng);
  int episode_steps = 0;
  for (long u = 1; u <= num_steps; ++u) {
    int action = learner.select_action(state, rng);
    Transition t = sample_step(mdp, state, action, rng);
    buffer.push(t);
    learner.update_from_replay(buffer, mdp.discount, rng);
    ++episode_steps;
    if (t.is_terminal || episode_steps >= episode_horizon) {
      state = sample_start_state(mdp, rng);
      episode_steps = 0;
    } else {
      state = t.next_state;
    }
    if (u % metrics.record_interval == 0 || u == num_steps)
      records.push_back(make_run_record(mdp, learner, metrics, u));
  }
  return records;
}

}  // namespace uql
