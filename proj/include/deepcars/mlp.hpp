#pragma once

// Dense feed-forward value network: ReLU hidden layers, linear output.
// Batched routines take one sample per column.

#include "deepcars/errors.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace deepcars {

template <typename Scalar>
struct MlpParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::vector<int> layer_dims;   // [input, hidden..., output]
  std::vector<Matrix> weights;   // weights[k] is dims[k+1] x dims[k]
  std::vector<Vector> biases;    // biases[k] has dims[k+1] entries

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_size() const { return layer_dims.front(); }
  int output_size() const { return layer_dims.back(); }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (int k = 0; k < num_layers(); ++k) n += weights[k].size() + biases[k].size();
    return n;
  }

  // Zero-valued parameters with the given dimensions.
  static MlpParams zeros(const std::vector<int>& dims) {
    if (dims.size() < 2) throw ShapeError("a network needs at least input and output dims");
    for (int d : dims)
      if (d < 1) throw ShapeError("layer dims must be positive");
    MlpParams p;
    p.layer_dims = dims;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
      p.weights.push_back(Matrix::Zero(dims[k + 1], dims[k]));
      p.biases.push_back(Vector::Zero(dims[k + 1]));
    }
    return p;
  }

  bool same_shape(const MlpParams& o) const { return layer_dims == o.layer_dims; }

  void check_shapes() const {
    if (layer_dims.size() < 2 || weights.size() + 1 != layer_dims.size() ||
        biases.size() != weights.size())
      throw ShapeError("layer count does not match layer_dims");
    for (int k = 0; k < num_layers(); ++k) {
      if (weights[k].rows() != layer_dims[k + 1] || weights[k].cols() != layer_dims[k])
        throw ShapeError("weights[" + std::to_string(k) + "] is " +
                         std::to_string(weights[k].rows()) + "x" +
                         std::to_string(weights[k].cols()) + ", expected " +
                         std::to_string(layer_dims[k + 1]) + "x" + std::to_string(layer_dims[k]));
      if (biases[k].size() != layer_dims[k + 1])
        throw ShapeError("biases[" + std::to_string(k) + "] has the wrong length");
    }
  }

  bool all_finite() const {
    for (int k = 0; k < num_layers(); ++k)
      if (!weights[k].allFinite() || !biases[k].allFinite()) return false;
    return true;
  }

  // Bitwise equality of every parameter.
  bool operator==(const MlpParams& o) const {
    if (layer_dims != o.layer_dims) return false;
    for (int k = 0; k < num_layers(); ++k)
      if (weights[k] != o.weights[k] || biases[k] != o.biases[k]) return false;
    return true;
  }
};

// Gradients share the parameter layout.
template <typename Scalar>
using MlpGradients = MlpParams<Scalar>;

// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases.
template <typename Scalar = double>
MlpParams<Scalar> init_params(const std::vector<int>& layer_dims, std::uint64_t seed) {
  auto p = MlpParams<Scalar>::zeros(layer_dims);
  std::mt19937_64 rng(seed);
  for (int k = 0; k < p.num_layers(); ++k) {
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(layer_dims[k]));
    std::uniform_real_distribution<Scalar> dist(-scale, scale);
    for (Eigen::Index j = 0; j < p.weights[k].cols(); ++j)
      for (Eigen::Index i = 0; i < p.weights[k].rows(); ++i) p.weights[k](i, j) = dist(rng);
  }
  return p;
}

// Intermediate values of a batched forward pass, kept for backprop.
template <typename Scalar>
struct ForwardTrace {
  using Matrix = typename MlpParams<Scalar>::Matrix;
  std::vector<Matrix> activations;  // activations[0] = input, back() = output
};

template <typename Scalar, typename Derived>
typename MlpParams<Scalar>::Matrix forward_batch(const MlpParams<Scalar>& params,
                                                 const Eigen::MatrixBase<Derived>& inputs,
                                                 ForwardTrace<Scalar>* trace = nullptr) {
  if (inputs.rows() != params.input_size())
    throw ShapeError("input has " + std::to_string(inputs.rows()) + " features, network expects " +
                     std::to_string(params.input_size()));
  using Matrix = typename MlpParams<Scalar>::Matrix;
  Matrix a = inputs;
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(a);
  }
  for (int k = 0; k < params.num_layers(); ++k) {
    Matrix z = params.weights[k] * a;
    z.colwise() += params.biases[k];
    if (k + 1 < params.num_layers()) z = z.cwiseMax(Scalar(0));
    a = std::move(z);
    if (trace) trace->activations.push_back(a);
  }
  return a;
}

template <typename Scalar, typename Derived>
typename MlpParams<Scalar>::Vector forward(const MlpParams<Scalar>& params,
                                           const Eigen::MatrixBase<Derived>& input) {
  if (input.cols() != 1) throw ShapeError("forward() expects a single column vector");
  return forward_batch(params, input);
}

// Gradient of sum_j <output_gradients.col(j), f(inputs.col(j))> with respect to every
// parameter, using the trace from forward_batch on the same inputs.
template <typename Scalar, typename Derived>
MlpGradients<Scalar> backward_batch(const MlpParams<Scalar>& params,
                                    const ForwardTrace<Scalar>& trace,
                                    const Eigen::MatrixBase<Derived>& output_gradients) {
  const int layers = params.num_layers();
  if (static_cast<int>(trace.activations.size()) != layers + 1)
    throw ShapeError("forward trace does not belong to this network");
  if (output_gradients.rows() != params.output_size() ||
      output_gradients.cols() != trace.activations.back().cols())
    throw ShapeError("output gradient shape does not match the network output");
  using Matrix = typename MlpParams<Scalar>::Matrix;
  auto grads = MlpGradients<Scalar>::zeros(params.layer_dims);
  Matrix delta = output_gradients;
  for (int k = layers - 1; k >= 0; --k) {
    grads.weights[k].noalias() = delta * trace.activations[k].transpose();
    grads.biases[k] = delta.rowwise().sum();
    if (k > 0) {
      Matrix upstream = params.weights[k].transpose() * delta;
      // ReLU derivative: 1 where the activation was positive.
      delta = (trace.activations[k].array() > Scalar(0)).select(upstream, Scalar(0));
    }
  }
  return grads;
}

template <typename Scalar, typename DerivedIn, typename DerivedOut>
MlpGradients<Scalar> backward(const MlpParams<Scalar>& params,
                              const Eigen::MatrixBase<DerivedIn>& input,
                              const Eigen::MatrixBase<DerivedOut>& output_gradient) {
  ForwardTrace<Scalar> trace;
  forward_batch(params, input, &trace);
  return backward_batch(params, trace, output_gradient);
}

// Bit-exact copy of `source` into `target`; dimensions must agree.
template <typename Scalar>
void clone_into(const MlpParams<Scalar>& source, MlpParams<Scalar>& target) {
  if (!source.same_shape(target)) throw ShapeError("clone_into: layer dims differ");
  for (int k = 0; k < source.num_layers(); ++k) {
    target.weights[k] = source.weights[k];
    target.biases[k] = source.biases[k];
  }
}

enum class OptimizerKind { Sgd, Adam };

inline const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }
inline OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

template <typename Scalar>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  Scalar learning_rate = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);
  MlpParams<Scalar> first_moment;
  MlpParams<Scalar> second_moment;
  std::int64_t step = 0;

  static OptimizerState make(const MlpParams<Scalar>& params, OptimizerKind kind,
                             Scalar learning_rate) {
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    OptimizerState s;
    s.kind = kind;
    s.learning_rate = learning_rate;
    s.first_moment = MlpParams<Scalar>::zeros(params.layer_dims);
    s.second_moment = MlpParams<Scalar>::zeros(params.layer_dims);
    return s;
  }
};

// One descent step: plain SGD, or Adam with bias-corrected moments.
template <typename Scalar>
void sgd_step(MlpParams<Scalar>& params, const MlpGradients<Scalar>& grads,
              OptimizerState<Scalar>& opt) {
  if (!params.same_shape(grads) || !params.same_shape(opt.first_moment))
    throw ShapeError("optimizer step: gradient/parameter shapes differ");
  if (!grads.all_finite()) throw NumericError("non-finite gradient; training aborted");
  if (!(opt.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  opt.step += 1;
  if (opt.kind == OptimizerKind::Sgd) {
    for (int k = 0; k < params.num_layers(); ++k) {
      params.weights[k] -= opt.learning_rate * grads.weights[k];
      params.biases[k] -= opt.learning_rate * grads.biases[k];
    }
    return;
  }
  const Scalar c1 = Scalar(1) - std::pow(opt.beta1, static_cast<Scalar>(opt.step));
  const Scalar c2 = Scalar(1) - std::pow(opt.beta2, static_cast<Scalar>(opt.step));
  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = opt.beta1 * m + (Scalar(1) - opt.beta1) * g;
    v = opt.beta2 * v + (Scalar(1) - opt.beta2) * g.cwiseAbs2();
    p.array() -= opt.learning_rate * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + opt.epsilon);
  };
  for (int k = 0; k < params.num_layers(); ++k) {
    update(params.weights[k], grads.weights[k], opt.first_moment.weights[k],
           opt.second_moment.weights[k]);
    update(params.biases[k], grads.biases[k], opt.first_moment.biases[k],
           opt.second_moment.biases[k]);
  }
}

// [input, hidden..., outputs]
inline std::vector<int> layer_dims_for(int input, const std::vector<int>& hidden,
                                       int outputs) {
  std::vector<int> dims{input};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(outputs);
  return dims;
}

}  // namespace deepcars
