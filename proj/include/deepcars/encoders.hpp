#pragma once

#include "deepcars/highway.hpp"

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <functional>
#include <vector>

namespace deepcars {

// Ego lane plus, per lane, the distance to the nearest car still able to hit
// the ego row. Distance 0 is the row directly ahead of the ego row; `rows` is
// the "nothing visible" sentinel.
struct TabularState {
  int ego_lane_id = 0;
  std::vector<int> distances;

  auto operator<=>(const TabularState&) const = default;
  bool operator==(const TabularState&) const = default;

  // [ego_lane_id, x_0, ..., x_{n-1}]
  std::vector<int> as_vector() const;
  static TabularState from_vector(const std::vector<int>& v);
};

struct TabularStateHash {
  std::size_t operator()(const TabularState& s) const noexcept;
};

// Flattened occupancy grid followed by the big-endian binary code of the ego lane.
template <typename Scalar>
using DqnStateT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using DqnState = DqnStateT<double>;

TabularState encode_tabular(const EnvState& state);

// ceil(log2(lanes)).
int lane_code_width(int lanes);
int dqn_state_size(const EnvConfig& config);

template <typename Scalar = double>
DqnStateT<Scalar> encode_dqn(const EnvState& state) {
  const Eigen::Index cells = state.grid.size();
  const int width = lane_code_width(state.lanes());
  DqnStateT<Scalar> v(cells + width);
  // RowMajor storage makes the flat view row-major.
  v.head(cells) = Eigen::Map<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>>(
                      state.grid.data(), cells)
                      .template cast<Scalar>();
  for (int b = 0; b < width; ++b)
    v(cells + b) = static_cast<Scalar>((state.ego_lane >> (width - 1 - b)) & 1);
  return v;
}

// Inverse of encode_dqn for a known grid shape; step/counter fields stay zero.
EnvState decode_dqn(const DqnState& values, int rows, int lanes);

}  // namespace deepcars
