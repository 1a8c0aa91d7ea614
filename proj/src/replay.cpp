#include "deepcars/replay.hpp"

#include "deepcars/errors.hpp"

#include <algorithm>

namespace deepcars {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int state_size)
    : capacity_(capacity),
      state_size_(state_size),
      states_(state_size, static_cast<Eigen::Index>(capacity)),
      next_states_(state_size, static_cast<Eigen::Index>(capacity)),
      actions_(capacity, Action::Stay),
      rewards_(capacity, 0.0),
      terminals_(capacity, false) {
  if (capacity == 0) throw ConfigError("replay capacity must be positive");
  if (state_size < 1) throw ConfigError("replay state size must be positive");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != state_size_ || t.next_state.size() != state_size_)
    throw ShapeError("transition state size " + std::to_string(t.state.size()) +
                     " does not match replay state size " + std::to_string(state_size_));
  const auto col = static_cast<Eigen::Index>(cursor_);
  states_.col(col) = t.state;
  next_states_.col(col) = t.next_state;
  actions_[cursor_] = t.action;
  rewards_[cursor_] = t.reward;
  terminals_[cursor_] = t.terminal;
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::size_t ReplayBuffer::slot(std::size_t i) const {
  // Oldest retained entry sits at the cursor once the ring has wrapped.
  return size_ < capacity_ ? i : (cursor_ + i) % capacity_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw UsageError("replay index out of range");
  const std::size_t s = slot(i);
  const auto col = static_cast<Eigen::Index>(s);
  return {states_.col(col), actions_[s], rewards_[s], next_states_.col(col), terminals_[s]};
}

std::optional<TransitionBatch> ReplayBuffer::sample(std::size_t batch_size, Rng& rng,
                                                    std::optional<std::size_t> min_fill) const {
  if (batch_size == 0) throw UsageError("batch size must be positive");
  const std::size_t needed = std::max<std::size_t>(min_fill.value_or(batch_size), 1);
  if (size_ < needed) return std::nullopt;

  TransitionBatch b;
  const auto n = static_cast<Eigen::Index>(batch_size);
  b.states.resize(state_size_, n);
  b.next_states.resize(state_size_, n);
  b.rewards.resize(n);
  b.actions.reserve(batch_size);
  b.terminals.reserve(batch_size);
  b.indices.reserve(batch_size);
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  for (Eigen::Index j = 0; j < n; ++j) {
    const std::size_t s = pick(rng);
    const auto col = static_cast<Eigen::Index>(s);
    b.states.col(j) = states_.col(col);
    b.next_states.col(j) = next_states_.col(col);
    b.rewards(j) = rewards_[s];
    b.actions.push_back(actions_[s]);
    b.terminals.push_back(terminals_[s]);
    b.indices.push_back(s);
  }
  return b;
}

}  // namespace deepcars
