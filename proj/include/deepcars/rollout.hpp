#pragma once

// Greedy policy rollouts shared by the tabular and network evaluators.

#include "deepcars/highway.hpp"
#include "deepcars/metrics.hpp"

#include <cstdint>
#include <optional>

namespace deepcars {

struct EvalResult {
  std::int64_t steps = 0;
  std::int64_t episodes = 0;  // completed episodes
  std::int64_t passed = 0;
  std::int64_t collided = 0;
  double total_reward = 0.0;
  double mean_episode_reward = 0.0;

  std::optional<double> accuracy() const { return deepcars::accuracy(passed, collided); }
};

// Runs `policy(const EnvState&) -> Action` for exactly `steps` environment steps,
// resetting after each terminal. The mean episode reward covers completed episodes,
// or the trailing partial one if none completed.
template <typename Policy>
EvalResult rollout_steps(const EnvConfig& config, std::int64_t steps, std::uint64_t seed,
                         Policy&& policy) {
  Highway env(config);
  env.reset(seed);
  EvalResult r;
  double episode_reward = 0.0;
  double completed_reward = 0.0;
  for (std::int64_t t = 0; t < steps; ++t) {
    const StepOutcome out = env.step(policy(env.state()));
    r.steps += 1;
    r.total_reward += out.reward;
    r.passed += out.cars_passed_this_step;
    if (out.collision) r.collided += 1;
    episode_reward += out.reward;
    if (out.terminal) {
      r.episodes += 1;
      completed_reward += episode_reward;
      episode_reward = 0.0;
      env.reset();
    }
  }
  r.mean_episode_reward = r.episodes > 0 ? completed_reward / static_cast<double>(r.episodes)
                                         : episode_reward;
  return r;
}

// Runs `episodes` full episodes, each on its own environment seeded by mix_seed(seed, i).
template <typename Policy>
EvalResult rollout_episodes(const EnvConfig& config, std::int64_t episodes, std::uint64_t seed,
                            Policy&& policy) {
  Highway env(config);
  EvalResult r;
  for (std::int64_t e = 0; e < episodes; ++e) {
    env.reset(mix_seed(seed, static_cast<std::uint64_t>(e)));
    for (;;) {
      const StepOutcome out = env.step(policy(env.state()));
      r.steps += 1;
      r.total_reward += out.reward;
      r.passed += out.cars_passed_this_step;
      if (out.collision) r.collided += 1;
      if (out.terminal) break;
    }
    r.episodes += 1;
  }
  r.mean_episode_reward = episodes > 0 ? r.total_reward / static_cast<double>(episodes) : 0.0;
  return r;
}

}  // namespace deepcars
