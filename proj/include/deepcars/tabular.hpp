#pragma once

#include "deepcars/encoders.hpp"
#include "deepcars/highway.hpp"
#include "deepcars/metrics.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <unordered_map>

namespace deepcars {

using QValues = std::array<double, kNumActions>;

struct TabularHyperparams {
  double gamma = 0.9;
  double alpha = 0.1;
  double epsilon = 0.2;
  std::int64_t train_steps = 50'000;

  void validate() const;
};

// Sparse action-value table. Absent states read as all zeros.
class QTable {
 public:
  QValues values(const TabularState& s) const;
  double value(const TabularState& s, Action a) const { return values(s)[action_code(a)]; }
  void set(const TabularState& s, Action a, double v);

  bool contains(const TabularState& s) const { return entries_.contains(s); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Entries in ascending state order.
  std::vector<std::pair<TabularState, QValues>> sorted_entries() const;

  bool operator==(const QTable& o) const { return entries_ == o.entries_; }

 private:
  std::unordered_map<TabularState, QValues, TabularStateHash> entries_;
};

// Index of the largest value; ties resolve to the lowest action code.
Action argmax_action(const QValues& q);

// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') * [!terminal] - Q(s,a)).
void q_update(QTable& table, const TabularState& s, Action a, double reward,
              const TabularState& s_next, bool terminal, const TabularHyperparams& hp);

// Uniform random action with probability epsilon, greedy otherwise.
Action select_action(const QTable& table, const TabularState& s, double epsilon, Rng& rng);

struct TabularRun {
  QTable table;
  RunMetrics metrics;
};

TabularRun train_tabular(const EnvConfig& config, const TabularHyperparams& hp,
                         std::uint64_t seed);

// Greedy rollout for `steps` environment steps; fills counters and windows.
RunMetrics evaluate_tabular(const QTable& table, const EnvConfig& config, std::int64_t steps,
                            std::uint64_t seed);

// "<lane> <x0> ... <xn> | <q_left> <q_stay> <q_right>" per line, after a '#' header.
void save_qtable(const QTable& table, const std::filesystem::path& path);
QTable load_qtable(const std::filesystem::path& path);
inline constexpr const char* kQTableHeader = "# deepcars-qtable 1";

}  // namespace deepcars
