#pragma once

// Versioned text format for network parameters:
//
//   deepcars-mlp <version>
//   layer_dims <d0> <d1> ...
//   optimizer <sgd|adam>
//   weights <k> <rows> <cols>
//   <one row of weights per line>
//   biases <k> <size>
//   <biases on one line>
//
// Reals use the shortest representation that round-trips exactly.

#include "deepcars/mlp.hpp"

#include <filesystem>
#include <string>

namespace deepcars {

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelMagic = "deepcars-mlp";

struct StoredModel {
  MlpParams<double> params;
  OptimizerKind optimizer = OptimizerKind::Adam;
};

std::string serialize_model(const MlpParams<double>& params, OptimizerKind optimizer);
StoredModel deserialize_model(const std::string& text);

void save_model(const MlpParams<double>& params, OptimizerKind optimizer,
                const std::filesystem::path& path);
StoredModel load_model(const std::filesystem::path& path);

// True when the file starts with the network magic line (any version).
bool is_model_file(const std::filesystem::path& path);

}  // namespace deepcars
