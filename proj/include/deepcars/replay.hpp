#pragma once

#include "deepcars/encoders.hpp"
#include "deepcars/highway.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <vector>

namespace deepcars {

struct Transition {
  DqnState state;
  Action action = Action::Stay;
  double reward = 0.0;
  DqnState next_state;
  bool terminal = false;  // collisions only; timeouts keep bootstrapping

  bool operator==(const Transition& o) const {
    return state == o.state && action == o.action && reward == o.reward &&
           next_state == o.next_state && terminal == o.terminal;
  }
};

// Column-per-sample view of a sampled mini-batch.
struct TransitionBatch {
  Eigen::MatrixXd states;
  Eigen::MatrixXd next_states;
  std::vector<Action> actions;
  Eigen::VectorXd rewards;
  std::vector<bool> terminals;
  std::vector<std::size_t> indices;  // slots drawn, in draw order

  std::size_t size() const { return actions.size(); }
  Transition at(std::size_t j) const {
    return {states.col(j), actions[j], rewards(j), next_states.col(j), terminals[j]};
  }
};

// Fixed-capacity ring of transitions; the oldest entry is overwritten when full.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int state_size);

  void push(const Transition& t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  int state_size() const { return state_size_; }

  // Stored transition by logical age order: 0 = oldest retained.
  Transition at(std::size_t i) const;

  // Uniform sampling with replacement over the filled region. Returns nullopt
  // ("not ready") while fewer than max(min_fill, 1) transitions are stored;
  // min_fill defaults to batch_size.
  std::optional<TransitionBatch> sample(std::size_t batch_size, Rng& rng,
                                        std::optional<std::size_t> min_fill = {}) const;

 private:
  std::size_t slot(std::size_t i) const;

  std::size_t capacity_;
  int state_size_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  Eigen::MatrixXd states_;
  Eigen::MatrixXd next_states_;
  std::vector<Action> actions_;
  std::vector<double> rewards_;
  std::vector<bool> terminals_;
};

}  // namespace deepcars
