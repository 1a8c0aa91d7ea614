#include <gtest/gtest.h>

#include "deepcars/mlp.hpp"
#include "deepcars/model_io.hpp"
#include "oracles.hpp"

using namespace deepcars;
using Params = MlpParams<double>;

namespace {

const std::vector<std::vector<int>> kLayouts = {
    {32}, {32, 64, 32}, {64, 128, 128, 64}, {16}, {16, 16}};

std::vector<double> random_vector(std::mt19937_64& rng, int n, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Biases are zero after init; give them values so their gradients are exercised.
void jitter_biases(Params& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-0.1, 0.1);
  for (auto& b : p.biases)
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = d(rng);
}

}  // namespace

TEST(Forward, ZeroNetworkOutputsZero) {
  const Params p = Params::zeros({43, 16, 3});
  const Eigen::VectorXd y = forward(p, Eigen::VectorXd::Ones(43));
  EXPECT_EQ(y, Eigen::VectorXd::Zero(3));
}

TEST(Forward, HiddenLayerRectifies) {
  Params p = Params::zeros({1, 1, 1});
  p.weights[0](0, 0) = 1;
  p.weights[1](0, 0) = 1;
  Eigen::VectorXd x(1);
  x << -2;
  EXPECT_EQ(forward(p, x)(0), 0.0);
  x << 3;
  EXPECT_EQ(forward(p, x)(0), 3.0);
}

TEST(Forward, OutputLayerIsLinear) {
  Params p = Params::zeros({1, 1});
  p.weights[0](0, 0) = 1;
  Eigen::VectorXd x(1);
  x << -2;
  EXPECT_EQ(forward(p, x)(0), -2.0);
}

TEST(Forward, MatchesNaiveLoops) {
  std::mt19937_64 rng(3);
  for (const auto& hidden : kLayouts) {
    Params p = init_params<double>(layer_dims_for(43, hidden, 3), 11);
    jitter_biases(p, 12);
    for (int trial = 0; trial < 20; ++trial) {
      const auto x = random_vector(rng, 43);
      const Eigen::VectorXd y = forward(p, to_eigen(x));
      const auto ref = oracle::naive_forward(p, x);
      for (int i = 0; i < 3; ++i) ASSERT_NEAR(y(i), ref[i], 1e-12);
    }
  }
}

TEST(Forward, BatchColumnsMatchSingleForward) {
  Params p = init_params<double>({10, 8, 3}, 5);
  std::mt19937_64 rng(1);
  Eigen::MatrixXd batch(10, 6);
  for (int j = 0; j < 6; ++j) batch.col(j) = to_eigen(random_vector(rng, 10));
  const Eigen::MatrixXd out = forward_batch(p, batch);
  for (int j = 0; j < 6; ++j) EXPECT_TRUE(out.col(j).isApprox(forward(p, batch.col(j)), 1e-14));
}

TEST(Forward, ShapeMismatchIsError) {
  const Params p = Params::zeros({4, 3});
  EXPECT_THROW(forward(p, Eigen::VectorXd::Zero(5)), ShapeError);
}

TEST(Backward, ZeroOutputGradientGivesZeroGradients) {
  Params p = init_params<double>({6, 5, 3}, 2);
  const auto g = backward(p, Eigen::VectorXd::Ones(6), Eigen::VectorXd::Zero(3));
  for (double v : oracle::flatten(g)) EXPECT_EQ(v, 0.0);
}

TEST(Backward, SingleLinearNeuron) {
  Params p = Params::zeros({1, 1});
  p.weights[0](0, 0) = 0.7;
  Eigen::VectorXd x(1), g(1);
  x << 1.5;
  g << -2.0;
  const auto grads = backward(p, x, g);
  EXPECT_DOUBLE_EQ(grads.weights[0](0, 0), -2.0 * 1.5);
  EXPECT_DOUBLE_EQ(grads.biases[0](0), -2.0);
}

TEST(Backward, MatchesFiniteDifferencesForAllLayouts) {
  std::mt19937_64 rng(99);
  for (const auto& hidden : kLayouts) {
    Params p = init_params<double>(layer_dims_for(43, hidden, 3), 21);
    jitter_biases(p, 22);
    for (int trial = 0; trial < 2; ++trial) {
      const auto x = random_vector(rng, 43, 0, 1);
      const auto g = random_vector(rng, 3);
      const auto analytic = oracle::flatten(backward(p, to_eigen(x), to_eigen(g)));
      const auto numeric = oracle::finite_difference_gradient(p, x, g, 1e-5);
      ASSERT_EQ(analytic.size(), numeric.size());
      EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-6);
    }
  }
}

TEST(Backward, BatchGradientIsSumOfSampleGradients) {
  Params p = init_params<double>({7, 6, 3}, 8);
  std::mt19937_64 rng(2);
  Eigen::MatrixXd x(7, 4), g(3, 4);
  for (int j = 0; j < 4; ++j) {
    x.col(j) = to_eigen(random_vector(rng, 7));
    g.col(j) = to_eigen(random_vector(rng, 3));
  }
  ForwardTrace<double> trace;
  forward_batch(p, x, &trace);
  const auto batch = oracle::flatten(backward_batch(p, trace, g));
  std::vector<double> sum(batch.size(), 0.0);
  for (int j = 0; j < 4; ++j) {
    const auto one = oracle::flatten(backward(p, x.col(j), g.col(j)));
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += one[i];
  }
  for (std::size_t i = 0; i < sum.size(); ++i) EXPECT_NEAR(batch[i], sum[i], 1e-12);
}

TEST(Backward, GradientShapeMismatchIsError) {
  Params p = init_params<double>({4, 3, 2}, 1);
  EXPECT_THROW(backward(p, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(3)), ShapeError);
}

TEST(SgdStep, ZeroGradientLeavesParameters) {
  Params p = init_params<double>({5, 4, 3}, 3);
  const Params before = p;
  for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam}) {
    auto opt = OptimizerState<double>::make(p, kind, 0.1);
    sgd_step(p, Params::zeros(p.layer_dims), opt);
    EXPECT_TRUE(p == before);
  }
}

TEST(SgdStep, PlainDescentUpdate) {
  Params p = Params::zeros({1, 1});
  p.weights[0](0, 0) = 1.0;
  Params g = Params::zeros({1, 1});
  g.weights[0](0, 0) = 0.5;
  auto opt = OptimizerState<double>::make(p, OptimizerKind::Sgd, 0.1);
  sgd_step(p, g, opt);
  EXPECT_DOUBLE_EQ(p.weights[0](0, 0), 0.95);
}

TEST(SgdStep, ConvergesOnQuadratic) {
  // loss(w) = (w - 3)^2, minimum at w = 3.
  for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam}) {
    Params p = Params::zeros({1, 1});
    auto opt = OptimizerState<double>::make(p, kind, kind == OptimizerKind::Sgd ? 0.1 : 0.05);
    for (int i = 0; i < 5000; ++i) {
      Params g = Params::zeros({1, 1});
      g.weights[0](0, 0) = 2 * (p.weights[0](0, 0) - 3.0);
      sgd_step(p, g, opt);
    }
    EXPECT_NEAR(p.weights[0](0, 0), 3.0, 1e-6) << optimizer_name(kind);
  }
}

TEST(SgdStep, NonFiniteGradientAborts) {
  Params p = Params::zeros({2, 1});
  Params g = Params::zeros({2, 1});
  g.biases[0](0) = std::numeric_limits<double>::quiet_NaN();
  auto opt = OptimizerState<double>::make(p, OptimizerKind::Adam, 1e-3);
  EXPECT_THROW(sgd_step(p, g, opt), NumericError);
}

TEST(InitParams, SeedDeterministicShapes) {
  const Params a = init_params<double>({43, 16, 3}, 7);
  const Params b = init_params<double>({43, 16, 3}, 7);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == init_params<double>({43, 16, 3}, 8));
  ASSERT_EQ(a.weights.size(), 2u);
  EXPECT_EQ(a.weights[0].rows(), 16);
  EXPECT_EQ(a.weights[0].cols(), 43);
  EXPECT_EQ(a.weights[1].rows(), 3);
  EXPECT_EQ(a.weights[1].cols(), 16);
  EXPECT_TRUE(a.biases[0].isZero());
}

TEST(InitParams, UniformVarianceMatchesScale) {
  // One 100000-entry layer: fan_in 400, scale 0.05.
  const Params p = init_params<double>({400, 250}, 13);
  const auto& w = p.weights[0];
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / static_cast<double>(w.size() - 1);
  const double scale = 1.0 / std::sqrt(400.0);
  EXPECT_NEAR(var, scale * scale / 3.0, 0.1 * scale * scale / 3.0);
  EXPECT_LE(w.cwiseAbs().maxCoeff(), scale);
}

TEST(CloneInto, CopyIsIndependent) {
  Params src = init_params<double>({6, 4, 3}, 1);
  Params dst = init_params<double>({6, 4, 3}, 2);
  clone_into(src, dst);
  EXPECT_TRUE(src == dst);
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(6, -1, 1);
  EXPECT_EQ(forward(src, x), forward(dst, x));
  src.weights[0](0, 0) += 1.0;
  EXPECT_FALSE(src == dst);
  Params other = init_params<double>({6, 5, 3}, 1);
  EXPECT_THROW(clone_into(src, other), ShapeError);
}

TEST(ModelFile, RoundTripIsBitExact) {
  Params p = init_params<double>({43, 16, 16, 3}, 31);
  jitter_biases(p, 32);
  const std::string text = serialize_model(p, OptimizerKind::Adam);
  const StoredModel m = deserialize_model(text);
  EXPECT_TRUE(m.params == p);
  EXPECT_EQ(m.optimizer, OptimizerKind::Adam);
  EXPECT_EQ(serialize_model(m.params, m.optimizer), text);
}

TEST(ModelFile, VersionMismatchFailsLoudly) {
  std::string text = serialize_model(Params::zeros({2, 3}), OptimizerKind::Sgd);
  text.replace(text.find(" 1\n"), 3, " 2\n");
  try {
    deserialize_model(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(ModelFile, TruncatedOrCorruptFiles) {
  const std::string text = serialize_model(init_params<double>({3, 2, 3}, 1), OptimizerKind::Adam);
  EXPECT_THROW(deserialize_model(text.substr(0, text.size() / 2)), ParseError);
  EXPECT_THROW(deserialize_model("hello\n"), ParseError);
  std::string bad = text;
  bad.replace(bad.find("weights 0 2 3"), 13, "weights 0 2 4");
  EXPECT_THROW(deserialize_model(bad), ParseError);
}
