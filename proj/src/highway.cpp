#include "deepcars/highway.hpp"

#include "deepcars/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace deepcars {

void EnvConfig::validate() const {
  if (lanes < 2) throw ConfigError("lanes must be >= 2 (got " + std::to_string(lanes) + ")");
  if (rows < 2) throw ConfigError("rows must be >= 2 (got " + std::to_string(rows) + ")");
  if (spawn_interval < 1)
    throw ConfigError("spawn_interval must be >= 1 (got " + std::to_string(spawn_interval) + ")");
  if (max_episode_steps < 1)
    throw ConfigError("max_episode_steps must be >= 1 (got " + std::to_string(max_episode_steps) +
                      ")");
  if (!(occupancy_prob >= 0.0 && occupancy_prob < 1.0))
    throw ConfigError("occupancy_prob must be in [0, 1) (got " + std::to_string(occupancy_prob) +
                      ")");
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::Left: return "left";
    case Action::Stay: return "stay";
    case Action::Right: return "right";
  }
  return "?";
}

bool EnvState::operator==(const EnvState& other) const {
  return grid.rows() == other.grid.rows() && grid.cols() == other.grid.cols() &&
         (grid == other.grid).all() && ego_lane == other.ego_lane &&
         step_count == other.step_count && passed_count == other.passed_count &&
         collided_count == other.collided_count && terminal == other.terminal;
}

EnvState initial_state(const EnvConfig& config) {
  config.validate();
  EnvState s;
  s.grid = OccupancyGrid::Zero(config.rows, config.lanes);
  s.ego_lane = config.lanes / 2;
  return s;
}

StepOutcome advance(const EnvConfig& config, const EnvState& state, Action action) {
  if (state.terminal) throw UsageError("step() called on a terminal state; reset first");
  const int rows = static_cast<int>(state.grid.rows());
  const int lanes = static_cast<int>(state.grid.cols());

  StepOutcome out;
  EnvState& next = out.next_state;
  next = state;

  const int delta = action == Action::Left ? -1 : action == Action::Right ? 1 : 0;
  next.ego_lane = std::clamp(state.ego_lane + delta, 0, lanes - 1);

  // Everything in the ego row leaves the grid.
  out.cars_passed_this_step = static_cast<int>(state.grid.row(rows - 1).template cast<int>().sum());
  next.grid.bottomRows(rows - 1) = state.grid.topRows(rows - 1);
  next.grid.row(0).setZero();
  next.passed_count += out.cars_passed_this_step;

  next.step_count += 1;
  if (next.grid(rows - 1, next.ego_lane) != 0) {
    out.collision = true;
    out.reward = -1.0;
    next.collided_count += 1;
  } else if (next.step_count >= config.max_episode_steps) {
    out.timeout = true;
  }
  out.terminal = out.collision || out.timeout;
  next.terminal = out.terminal;
  return out;
}

LaneSet free_lanes(const LaneRow& row) {
  LaneSet out;
  for (int lane = 0; lane < static_cast<int>(row.size()); ++lane)
    if (row[lane] == 0) out.push_back(lane);
  return out;
}

LaneRow spawn_row(Rng& rng, const EnvConfig& config, const LaneSet& previous_free) {
  if (previous_free.empty()) throw UsageError("spawn_row needs at least one previous free lane");
  LaneRow row(static_cast<std::size_t>(config.lanes), 0);
  std::bernoulli_distribution occupied(config.occupancy_prob);
  for (auto& cell : row) cell = occupied(rng) ? 1 : 0;

  const int reach = config.spawn_interval;
  for (int p : previous_free) {
    const int lo = std::max(0, p - reach);
    const int hi = std::min(config.lanes - 1, p + reach);
    bool escape = false;
    for (int lane = lo; lane <= hi && !escape; ++lane) escape = row[lane] == 0;
    // Nothing free within reach, so lane p itself is occupied and is the nearest to clear.
    if (!escape) row[p] = 0;
  }
  return row;
}

Highway::Highway(EnvConfig config) : config_(config) {
  config_.validate();
  reset(config_.seed);
}

const EnvState& Highway::reset(std::uint64_t seed) {
  rng_.seed(seed);
  return reset();
}

const EnvState& Highway::reset() {
  state_ = initial_state(config_);
  // The ego can roam freely before the first row arrives.
  previous_free_.resize(static_cast<std::size_t>(config_.lanes));
  std::iota(previous_free_.begin(), previous_free_.end(), 0);
  spawned_ = 0;
  return state_;
}

StepOutcome Highway::step(Action action) {
  StepOutcome out = advance(config_, state_, action);
  if (out.next_state.step_count % config_.spawn_interval == 0) {
    const LaneRow row = spawn_row(rng_, config_, previous_free_);
    previous_free_ = free_lanes(row);
    for (int lane = 0; lane < config_.lanes; ++lane) {
      out.next_state.grid(0, lane) = row[lane];
      spawned_ += row[lane];
    }
  }
  state_ = out.next_state;
  return out;
}

std::string render_ascii(const EnvState& state) {
  const int rows = static_cast<int>(state.grid.rows());
  const int lanes = static_cast<int>(state.grid.cols());
  std::string out;
  out.reserve(static_cast<std::size_t>(rows * (lanes + 1)));
  for (int r = 0; r < rows; ++r) {
    for (int l = 0; l < lanes; ++l) {
      const bool car = state.grid(r, l) != 0;
      if (r == rows - 1 && l == state.ego_lane)
        out.push_back(car ? 'X' : 'E');
      else
        out.push_back(car ? '#' : '.');
    }
    out.push_back('\n');
  }
  return out;
}

EnvState parse_ascii(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.size() < 2) throw ParseError("grid needs at least two rows");
  const std::size_t lanes = lines.front().size();

  EnvState s;
  s.grid = OccupancyGrid::Zero(static_cast<Eigen::Index>(lines.size()),
                               static_cast<Eigen::Index>(lanes));
  s.ego_lane = -1;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    if (lines[r].size() != lanes) throw ParseError("ragged grid row", r + 1);
    for (std::size_t l = 0; l < lanes; ++l) {
      const char c = lines[r][l];
      const bool ego_row = r + 1 == lines.size();
      switch (c) {
        case '.': break;
        case '#': s.grid(r, l) = 1; break;
        case 'E':
        case 'X':
          if (!ego_row || s.ego_lane >= 0) throw ParseError("misplaced ego marker", r + 1);
          s.ego_lane = static_cast<int>(l);
          s.grid(r, l) = c == 'X' ? 1 : 0;
          break;
        default: throw ParseError(std::string("unexpected character '") + c + "'", r + 1);
      }
    }
  }
  if (s.ego_lane < 0) throw ParseError("no ego marker in the last row", lines.size());
  return s;
}

}  // namespace deepcars
