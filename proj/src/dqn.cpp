#include "deepcars/dqn.hpp"

#include "deepcars/errors.hpp"
#include "deepcars/model_io.hpp"
#include "deepcars/rollout.hpp"
#include "deepcars/settings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace deepcars {

void DqnHyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0))
    throw ConfigError("epsilon_start must be in [0, 1]");
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start))
    throw ConfigError("epsilon_end must be in [0, epsilon_start]");
  auto positive = [](std::int64_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(epsilon_decay_steps, "epsilon_decay_steps");
  positive(batch_size, "batch_size");
  positive(replay_capacity, "replay_capacity");
  positive(target_sync_period, "target_sync_period");
  positive(fast_validation_period, "fast_validation_period");
  positive(fast_validation_episodes, "fast_validation_episodes");
  positive(deep_validation_period, "deep_validation_period");
  positive(deep_validation_episodes, "deep_validation_episodes");
  if (train_steps < 0) throw ConfigError("train_steps must be >= 0");
  if (learn_start < 0) throw ConfigError("learn_start must be >= 0");
  if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
  for (int h : hidden)
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

double DqnHyperparams::epsilon_at(std::int64_t step) const {
  if (step >= epsilon_decay_steps) return epsilon_end;
  const double frac = static_cast<double>(step) / static_cast<double>(epsilon_decay_steps);
  return epsilon_start + frac * (epsilon_end - epsilon_start);
}

namespace {

int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& q) {
  int best = 0;
  for (int a = 1; a < q.size(); ++a)
    if (q(a) > q(best)) best = a;
  return best;
}

}  // namespace

Action greedy_action(const Mlp& params, const EnvState& state) {
  const Eigen::VectorXd q = forward(params, encode_dqn(state));
  return action_from_code(argmax_lowest(q));
}

Eigen::VectorXd td_targets(const TransitionBatch& batch, const Mlp& online, const Mlp& target,
                           double gamma, bool double_q) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::MatrixXd q_target = forward_batch(target, batch.next_states);
  Eigen::MatrixXd q_online;
  if (double_q) q_online = forward_batch(online, batch.next_states);
  if (!q_target.allFinite() || (double_q && !q_online.allFinite()))
    throw NumericError("non-finite Q-values while computing TD targets");

  Eigen::VectorXd y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (batch.terminals[static_cast<std::size_t>(j)]) {
      y(j) = batch.rewards(j);
      continue;
    }
    const double next_value = double_q ? q_target(argmax_lowest(q_online.col(j)), j)
                                       : q_target.col(j).maxCoeff();
    y(j) = batch.rewards(j) + gamma * next_value;
  }
  return y;
}

TdLoss td_loss(const TransitionBatch& batch, const Eigen::VectorXd& targets, const Mlp& online) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (targets.size() != n) throw ShapeError("one TD target per sample required");
  ForwardTrace<double> trace;
  const Eigen::MatrixXd q = forward_batch(online, batch.states, &trace);
  Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(q.rows(), n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int a = action_code(batch.actions[static_cast<std::size_t>(j)]);
    const double err = q(a, j) - targets(j);
    loss += err * err;
    grad_out(a, j) = 2.0 * err / static_cast<double>(n);
  }
  return {loss / static_cast<double>(n), backward_batch(online, trace, grad_out)};
}

namespace {

ValidationResult to_validation(const EvalResult& r) {
  return {r.mean_episode_reward, r.accuracy(), r.passed, r.collided, r.steps};
}

}  // namespace

ValidationResult validate(const Mlp& params, const EnvConfig& config, std::int64_t episodes,
                          std::uint64_t seed) {
  if (episodes < 1) throw UsageError("validation needs at least one episode");
  return to_validation(rollout_episodes(
      config, episodes, seed, [&](const EnvState& s) { return greedy_action(params, s); }));
}

ValidationResult evaluate_steps(const Mlp& params, const EnvConfig& config, std::int64_t steps,
                                std::uint64_t seed) {
  if (steps < 1) throw UsageError("evaluation needs at least one step");
  return to_validation(rollout_steps(
      config, steps, seed, [&](const EnvState& s) { return greedy_action(params, s); }));
}

DqnTrainer::DqnTrainer(const EnvConfig& config, const DqnHyperparams& hp, std::uint64_t seed)
    : config_(config),
      hp_(hp),
      seed_(seed),
      env_(config),
      policy_rng_(stream_seed(seed, Stream::Policy)),
      replay_rng_(stream_seed(seed, Stream::Replay)),
      online_(init_params<double>(layer_dims_for(dqn_state_size(config), hp.hidden, kNumActions),
                                  stream_seed(seed, Stream::Init))),
      target_(online_),
      opt_(OptimizerState<double>::make(online_, hp.optimizer, hp.learning_rate)),
      replay_(static_cast<std::size_t>(hp.replay_capacity), dqn_state_size(config)) {
  hp_.validate();
  env_.reset(seed);
}

void DqnTrainer::train_step() {
  if (done()) throw UsageError("training already finished");
  const EnvState& current = env_.state();
  DqnState state = encode_dqn(current);

  const double eps = hp_.epsilon_at(step_);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Action action;
  if (coin(policy_rng_) < eps) {
    std::uniform_int_distribution<int> pick(0, kNumActions - 1);
    action = action_from_code(pick(policy_rng_));
  } else {
    action = action_from_code(argmax_lowest(forward(online_, state)));
  }

  const StepOutcome out = env_.step(action);
  ++step_;
  replay_.push({std::move(state), action, out.reward, encode_dqn(out.next_state), out.collision});

  metrics_.steps.push_back({step_, episode_, out.reward, eps});
  metrics_.passed += out.cars_passed_this_step;
  if (out.collision) metrics_.collided += 1;
  episode_reward_ += out.reward;

  const auto batch_size = static_cast<std::size_t>(hp_.batch_size);
  if (replay_.size() >= static_cast<std::size_t>(std::max<std::int64_t>(hp_.learn_start, 1))) {
    if (auto batch = replay_.sample(batch_size, replay_rng_)) {
      const Eigen::VectorXd y = td_targets(*batch, online_, target_, hp_.gamma, hp_.double_q);
      TdLoss l = td_loss(*batch, y, online_);
      sgd_step(online_, l.gradients, opt_);
      last_loss_ = l.loss;
    }
  }
  if (step_ % hp_.target_sync_period == 0) clone_into(online_, target_);

  if (out.terminal) {
    metrics_.end_episode(episode_reward_, step_);
    episode_reward_ = 0.0;
    ++episode_;
    env_.reset();
  }

  if (step_ % hp_.deep_validation_period == 0)
    run_validation(hp_.deep_validation_episodes);
  else if (step_ % hp_.fast_validation_period == 0)
    run_validation(hp_.fast_validation_episodes);
}

void DqnTrainer::run_validation(std::int64_t episodes) {
  const ValidationResult v = validate(online_, config_, episodes, validation_seed(seed_));
  const double best = checkpoints_.empty() ? -std::numeric_limits<double>::infinity()
                                           : checkpoints_.back().mean_validation_reward;
  ValidationRecord rec{step_, v.mean_reward, v.accuracy, v.mean_reward > best};
  if (rec.is_new_best) checkpoints_.push_back({online_, v.mean_reward, v.accuracy, step_});
  metrics_.validations.push_back(rec);
  if (on_validation) on_validation(rec);
}

DqnRun train_dqn(const EnvConfig& config, const DqnHyperparams& hp, std::uint64_t seed,
                 const std::function<void(const ValidationRecord&)>& on_validation) {
  config.validate();
  hp.validate();
  DqnTrainer trainer(config, hp, seed);
  trainer.on_validation = on_validation;
  while (!trainer.done()) trainer.train_step();
  DqnRun run;
  run.checkpoints = trainer.checkpoints();
  if (!run.checkpoints.empty()) run.best = run.checkpoints.back();
  run.final_params = trainer.online();
  run.metrics = trainer.metrics();
  return run;
}

void write_checkpoint(const Checkpoint& checkpoint, const EnvConfig& config,
                      const DqnHyperparams& hp, std::uint64_t seed,
                      const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  save_model(checkpoint.params, hp.optimizer, dir / (stem + ".txt"));
  KeyValues meta = {{"training_step", std::to_string(checkpoint.training_step)},
                    {"mean_validation_reward", format_real(checkpoint.mean_validation_reward)},
                    {"validation_accuracy", checkpoint.accuracy
                                                ? format_real(*checkpoint.accuracy)
                                                : std::string("n/a")},
                    {"training_seed", std::to_string(seed)}};
  for (auto& kv : describe(config)) meta.push_back(kv);
  for (auto& kv : describe(hp)) meta.push_back(kv);
  write_key_values(meta, dir / (stem + ".meta"));
}

}  // namespace deepcars
