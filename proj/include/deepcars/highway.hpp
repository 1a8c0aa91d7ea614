#pragma once

// Discrete highway gridworld. Traffic rows spawn at the top of the grid and
// descend one row per step toward the ego vehicle, which sits in the bottom
// row and can shift one lane per step.

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace deepcars {

using Rng = std::mt19937_64;

// splitmix64 finaliser; derives independent per-episode seeds from one stream seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent random streams derived from one run seed.
enum class Stream : std::uint64_t {
  Policy = 0x706F6C,
  Replay = 0x726570,
  Init = 0x696E69,
};
constexpr std::uint64_t stream_seed(std::uint64_t seed, Stream s) {
  return mix_seed(seed ^ static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(s));
}

struct EnvConfig {
  int lanes = 5;
  int rows = 8;
  int spawn_interval = 3;
  double occupancy_prob = 0.4;
  int max_episode_steps = 200;
  std::uint64_t seed = 0;

  // Throws ConfigError naming the first violated bound.
  void validate() const;
};

// (row, lane) traffic occupancy; row 0 is the farthest visible row, row rows-1 the ego row.
using OccupancyGrid = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Action : int { Left = 0, Stay = 1, Right = 2 };
inline constexpr int kNumActions = 3;

inline constexpr Action action_from_code(int code) { return static_cast<Action>(code); }
inline constexpr int action_code(Action a) { return static_cast<int>(a); }
std::string_view action_name(Action a);

struct EnvState {
  OccupancyGrid grid;
  int ego_lane = 0;
  int step_count = 0;
  std::int64_t passed_count = 0;
  std::int64_t collided_count = 0;
  bool terminal = false;

  int ego_row() const { return static_cast<int>(grid.rows()) - 1; }
  int lanes() const { return static_cast<int>(grid.cols()); }
  bool operator==(const EnvState& other) const;
};

struct StepOutcome {
  EnvState next_state;
  double reward = 1.0;
  bool terminal = false;
  bool collision = false;  // terminal because of a crash
  bool timeout = false;    // terminal because the step cap was hit
  int cars_passed_this_step = 0;
};

// Sorted, duplicate-free lane indices.
using LaneSet = std::vector<int>;
// One spawned traffic row, 1 = occupied.
using LaneRow = std::vector<std::uint8_t>;

// Initial state: empty grid, ego in lane floor(lanes/2), counters zeroed.
EnvState initial_state(const EnvConfig& config);

// Lateral move, traffic advance, pass/collision accounting and timeout.
// Does not spawn; Highway::step layers spawning on top.
StepOutcome advance(const EnvConfig& config, const EnvState& state, Action action);

// Samples a traffic row (each lane occupied with probability occupancy_prob) and
// repairs it so that every lane in `previous_free` still has a free lane within
// `spawn_interval` lateral moves: any collision-free trajectory can continue.
// `previous_free` must be non-empty.
LaneRow spawn_row(Rng& rng, const EnvConfig& config, const LaneSet& previous_free);

LaneSet free_lanes(const LaneRow& row);

class Highway {
 public:
  explicit Highway(EnvConfig config);

  // Reseeds the generator and starts a fresh episode.
  const EnvState& reset(std::uint64_t seed);
  // Starts a fresh episode, continuing the current random stream.
  const EnvState& reset();

  StepOutcome step(Action action);

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return config_; }
  // Cars spawned since the last reset.
  std::int64_t spawned_count() const { return spawned_; }

 private:
  EnvConfig config_;
  Rng rng_;
  EnvState state_;
  LaneSet previous_free_;  // free lanes of the last spawned row
  std::int64_t spawned_ = 0;
};

// One line per row: '.' empty, '#' car, 'E' ego, 'X' ego cell hit by a car.
std::string render_ascii(const EnvState& state);
// Inverse of render_ascii for grid and ego lane. Counters are left at zero.
EnvState parse_ascii(std::string_view text);

}  // namespace deepcars
