#include "deepcars/encoders.hpp"

#include "deepcars/errors.hpp"

namespace deepcars {

std::vector<int> TabularState::as_vector() const {
  std::vector<int> v;
  v.reserve(distances.size() + 1);
  v.push_back(ego_lane_id);
  v.insert(v.end(), distances.begin(), distances.end());
  return v;
}

TabularState TabularState::from_vector(const std::vector<int>& v) {
  if (v.size() < 2) throw ParseError("tabular state needs a lane id and at least one distance");
  return TabularState{v.front(), std::vector<int>(v.begin() + 1, v.end())};
}

std::size_t TabularStateHash::operator()(const TabularState& s) const noexcept {
  std::size_t h = std::hash<int>{}(s.ego_lane_id);
  for (int d : s.distances) h = h * 31 + std::hash<int>{}(d);
  return h;
}

TabularState encode_tabular(const EnvState& state) {
  const int rows = static_cast<int>(state.grid.rows());
  TabularState out;
  out.ego_lane_id = state.ego_lane;
  out.distances.assign(static_cast<std::size_t>(state.lanes()), rows);
  // Cars already in the ego row leave on the next step and cannot collide.
  for (int lane = 0; lane < state.lanes(); ++lane) {
    for (int r = rows - 2; r >= 0; --r) {
      if (state.grid(r, lane) != 0) {
        out.distances[static_cast<std::size_t>(lane)] = rows - 2 - r;
        break;
      }
    }
  }
  return out;
}

int lane_code_width(int lanes) {
  int width = 0;
  while ((1 << width) < lanes) ++width;
  return width;
}

int dqn_state_size(const EnvConfig& config) {
  return config.rows * config.lanes + lane_code_width(config.lanes);
}

EnvState decode_dqn(const DqnState& values, int rows, int lanes) {
  const int width = lane_code_width(lanes);
  if (values.size() != rows * lanes + width)
    throw ShapeError("DQN state of length " + std::to_string(values.size()) +
                     " does not match a " + std::to_string(rows) + "x" + std::to_string(lanes) +
                     " grid");
  EnvState s;
  s.grid = OccupancyGrid::Zero(rows, lanes);
  for (int r = 0; r < rows; ++r)
    for (int l = 0; l < lanes; ++l) s.grid(r, l) = values(r * lanes + l) != 0.0 ? 1 : 0;
  int lane = 0;
  for (int b = 0; b < width; ++b) lane = (lane << 1) | (values(rows * lanes + b) != 0.0 ? 1 : 0);
  s.ego_lane = lane;
  return s;
}

}  // namespace deepcars
