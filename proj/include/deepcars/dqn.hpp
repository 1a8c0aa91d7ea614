#pragma once

// Deep Q-learning with experience replay, a periodically synced target network,
// optional Double-DQN targets, and periodic greedy validation that keeps the
// best-scoring parameters.

#include "deepcars/encoders.hpp"
#include "deepcars/highway.hpp"
#include "deepcars/metrics.hpp"
#include "deepcars/mlp.hpp"
#include "deepcars/replay.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace deepcars {

using Mlp = MlpParams<double>;

struct DqnHyperparams {
  double gamma = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::int64_t epsilon_decay_steps = 50'000;
  std::int64_t batch_size = 32;
  std::int64_t replay_capacity = 50'000;
  std::int64_t target_sync_period = 1'000;
  std::int64_t train_steps = 500'000;
  std::int64_t learn_start = 1'000;
  bool double_q = false;
  std::int64_t fast_validation_period = 2'000;
  std::int64_t fast_validation_episodes = 20;
  std::int64_t deep_validation_period = 20'000;
  std::int64_t deep_validation_episodes = 100;
  std::vector<int> hidden = {16};
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;

  void validate() const;
  // Linear schedule from epsilon_start at step 0 to epsilon_end at epsilon_decay_steps.
  double epsilon_at(std::int64_t step) const;
};

struct Checkpoint {
  Mlp params;
  double mean_validation_reward = 0.0;
  std::optional<double> accuracy;
  std::int64_t training_step = 0;
};

struct ValidationResult {
  double mean_reward = 0.0;
  std::optional<double> accuracy;
  std::int64_t passed = 0;
  std::int64_t collided = 0;
  std::int64_t steps = 0;
};

// Greedy action of the network; ties go to the lowest action code.
Action greedy_action(const Mlp& params, const EnvState& state);

// Per-sample TD targets: r for terminal samples, otherwise
// r + gamma * max_a' Q_target(s', a')                         (double_q = false)
// r + gamma * Q_target(s', argmax_a' Q_online(s', a'))        (double_q = true)
Eigen::VectorXd td_targets(const TransitionBatch& batch, const Mlp& online, const Mlp& target,
                           double gamma, bool double_q);

// Mean squared TD error over the batch and its gradient, applied only through the
// taken action's output.
struct TdLoss {
  double loss = 0.0;
  MlpGradients<double> gradients;
};
TdLoss td_loss(const TransitionBatch& batch, const Eigen::VectorXd& targets, const Mlp& online);

// Greedy rollouts of `episodes` full episodes on seeds derived from `seed`; parameters untouched.
ValidationResult validate(const Mlp& params, const EnvConfig& config, std::int64_t episodes,
                          std::uint64_t seed);
// Greedy rollout of exactly `steps` environment steps.
ValidationResult evaluate_steps(const Mlp& params, const EnvConfig& config, std::int64_t steps,
                                std::uint64_t seed);

// Seed of the held-out validation scenarios for a training seed.
constexpr std::uint64_t validation_seed(std::uint64_t training_seed) {
  return training_seed ^ 0x5A17DA7E0F0E1D5ULL;
}

class DqnTrainer {
 public:
  DqnTrainer(const EnvConfig& config, const DqnHyperparams& hp, std::uint64_t seed);

  // One environment step, replay insert, at most one gradient step, target sync,
  // and any validation that falls due on this step.
  void train_step();
  bool done() const { return step_ >= hp_.train_steps; }

  std::int64_t step() const { return step_; }
  double epsilon() const { return hp_.epsilon_at(step_); }
  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  const ReplayBuffer& replay() const { return replay_; }
  const RunMetrics& metrics() const { return metrics_; }
  const std::vector<Checkpoint>& checkpoints() const { return checkpoints_; }
  std::optional<double> last_loss() const { return last_loss_; }
  const DqnHyperparams& hyperparams() const { return hp_; }
  const EnvConfig& env_config() const { return config_; }

  // Called after each validation phase.
  std::function<void(const ValidationRecord&)> on_validation;

 private:
  void run_validation(std::int64_t episodes);

  EnvConfig config_;
  DqnHyperparams hp_;
  std::uint64_t seed_;
  Highway env_;
  Rng policy_rng_;
  Rng replay_rng_;
  Mlp online_;
  Mlp target_;
  OptimizerState<double> opt_;
  ReplayBuffer replay_;
  RunMetrics metrics_;
  std::vector<Checkpoint> checkpoints_;
  std::int64_t step_ = 0;
  std::int64_t episode_ = 0;
  double episode_reward_ = 0.0;
  std::optional<double> last_loss_;
};

struct DqnRun {
  std::optional<Checkpoint> best;  // empty only when no validation ran
  std::vector<Checkpoint> checkpoints;
  Mlp final_params;
  RunMetrics metrics;
};

DqnRun train_dqn(const EnvConfig& config, const DqnHyperparams& hp, std::uint64_t seed,
                 const std::function<void(const ValidationRecord&)>& on_validation = {});

// Writes <stem>.txt (model) and <stem>.meta (key=value: training step, validation
// score, environment and hyperparameters).
void write_checkpoint(const Checkpoint& checkpoint, const EnvConfig& config,
                      const DqnHyperparams& hp, std::uint64_t seed,
                      const std::filesystem::path& dir, const std::string& stem);

}  // namespace deepcars
