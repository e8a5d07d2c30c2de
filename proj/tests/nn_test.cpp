// Copyright 2026 The artvq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "artvq/nn/adam.hpp"
#include "artvq/nn/block.hpp"
#include "artvq/nn/checkpoint.hpp"
#include "artvq/nn/dense.hpp"
#include "artvq/nn/gradcheck.hpp"
#include "artvq/nn/mlp.hpp"

namespace artvq::nn {
namespace {

MatrixD random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  MatrixD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

// Plain triple loop, kept independent of the Eigen expression in dense_forward.
MatrixD naive_affine(const MatrixD& x, const MatrixD& w, const MatrixD& b) {
  MatrixD y(x.rows(), w.rows());
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    for (Eigen::Index o = 0; o < w.rows(); ++o) {
      double acc = b(0, o);
      for (Eigen::Index i = 0; i < x.cols(); ++i) acc += x(n, i) * w(o, i);
      y(n, o) = acc;
    }
  }
  return y;
}

TEST(DenseForward, IdentityWeights) {
  DenseLayer<double> layer(2, 2);
  layer.weight.value = MatrixD::Identity(2, 2);
  MatrixD x(1, 2);
  x << 3, 4;
  const MatrixD y = dense_forward(layer, x);
  EXPECT_EQ(y(0, 0), 3.0);
  EXPECT_EQ(y(0, 1), 4.0);
}

TEST(DenseForward, HandArithmetic) {
  DenseLayer<double> layer(2, 1);
  layer.weight.value << 1, 1;
  layer.bias.value << -1;
  MatrixD x(1, 2);
  x << 2, 3;
  EXPECT_EQ(dense_forward(layer, x)(0, 0), 4.0);
}

TEST(DenseForward, MatchesNaiveMatmul) {
  Rng rng(RngSeed{11});
  DenseLayer<double> layer(5, 3);
  layer.weight.value = random_matrix(3, 5, rng);
  layer.bias.value = random_matrix(1, 3, rng);
  const MatrixD x = random_matrix(4, 5, rng);
  const MatrixD expected = naive_affine(x, layer.weight.value, layer.bias.value);
  EXPECT_LT((dense_forward(layer, x) - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DenseForward, ShapeMismatchThrows) {
  DenseLayer<double> layer(3, 2);
  EXPECT_THROW(dense_forward(layer, MatrixD(MatrixD::Zero(2, 4))), DimensionError);
  EXPECT_THROW(dense_backward(layer, MatrixD(MatrixD::Zero(2, 3)), MatrixD(MatrixD::Zero(2, 3))), DimensionError);
}

TEST(DenseBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(RngSeed{3});
  DenseLayer<double> layer(4, 3);
  layer.init(rng);
  const auto g = dense_backward(layer, random_matrix(5, 4, rng), MatrixD(MatrixD::Zero(5, 3)));
  EXPECT_EQ(g.grad_input.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.grad_weights.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(g.grad_bias.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DenseBackward, ScalarChainRule) {
  DenseLayer<double> layer(1, 1);
  layer.weight.value << 2;
  const auto g = dense_backward(layer, MatrixD(MatrixD::Constant(1, 1, 3.0)),
                                MatrixD(MatrixD::Constant(1, 1, 1.0)));
  EXPECT_EQ(g.grad_input(0, 0), 2.0);
  EXPECT_EQ(g.grad_weights(0, 0), 3.0);
  EXPECT_EQ(g.grad_bias(0, 0), 1.0);
}

TEST(DenseBackward, MatchesFiniteDifferences) {
  Rng rng(RngSeed{5});
  DenseLayer<double> layer(6, 4);
  layer.init(rng);
  layer.bias.value = random_matrix(1, 4, rng);
  Parameter<double> input("input", 3, 6);
  input.value = random_matrix(3, 6, rng);
  const MatrixD target = random_matrix(3, 4, rng);

  auto loss = [&] { return 0.5 * (dense_forward(layer, input.value) - target).squaredNorm(); };
  auto analytic = [&] {
    const MatrixD y = dense_forward(layer, input.value);
    const auto g = dense_backward(layer, input.value, MatrixD(y - target));
    input.grad = g.grad_input;
    layer.weight.grad = g.grad_weights;
    layer.bias.grad = g.grad_bias;
  };
  const auto report =
      gradient_check(loss, analytic, {&input, &layer.weight, &layer.bias}, 1e-4);
  EXPECT_TRUE(report.passed()) << report.max_relative_error();
}

TEST(HiddenBlock, ZeroInputIsCentered) {
  BatchNormState<double> bn(3);
  Rng rng(RngSeed{1});
  BlockCache<double> cache;
  const MatrixD y =
      tanh_dropout_bn_forward(MatrixD::Zero(8, 3).eval(), bn, 0.0, Mode::kTrain, rng, cache);
  EXPECT_EQ(y.cwiseAbs().maxCoeff(), 0.0);
}

TEST(HiddenBlock, EvalWithUnitRunningStatsIsTanh) {
  BatchNormState<double> bn(4);
  // With epsilon below half an ulp of 1, sqrt(var + eps) is exactly 1.
  bn.epsilon = 1e-300;
  Rng rng(RngSeed{2});
  const MatrixD x = random_matrix(6, 4, rng, 2.0);
  BlockCache<double> cache;
  const MatrixD y = tanh_dropout_bn_forward(x, bn, 0.25, Mode::kEval, rng, cache);
  const MatrixD expected = x.array().tanh().matrix();
  EXPECT_EQ((y - expected).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HiddenBlock, EvalDropoutIsIdentityRegardlessOfRate) {
  Rng rng(RngSeed{9});
  const MatrixD x = random_matrix(5, 3, rng);
  BatchNormState<double> bn(3);
  bn.running_mean << 0.1, -0.2, 0.3;
  bn.running_var << 0.5, 2.0, 1.5;
  BlockCache<double> c1, c2;
  Rng r1(RngSeed{1}), r2(RngSeed{2});
  const MatrixD a = tanh_dropout_bn_forward(x, bn, 0.0, Mode::kEval, r1, c1);
  const MatrixD b = tanh_dropout_bn_forward(x, bn, 0.9, Mode::kEval, r2, c2);
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HiddenBlock, KeptFractionMatchesBinomial) {
  // Kept count ~ Binomial(1000, 0.75): sd ~ 13.7, so +-50 is beyond 3.6 sd.
  BatchNormState<double> bn(1);
  Rng rng(RngSeed{2024});
  BlockCache<double> cache;
  tanh_dropout_bn_forward(MatrixD::Ones(1000, 1).eval(), bn, 0.25, Mode::kTrain, rng, cache);
  const double kept = static_cast<double>((cache.mask.array() > 0).count()) / 1000.0;
  EXPECT_NEAR(kept, 0.75, 0.05);
  EXPECT_NEAR(cache.mask.maxCoeff(), 1.0 / 0.75, 1e-15);
}

TEST(HiddenBlock, RateOfOneRejected) {
  BatchNormState<double> bn(2);
  Rng rng(RngSeed{1});
  BlockCache<double> cache;
  EXPECT_THROW(tanh_dropout_bn_forward(MatrixD::Zero(2, 2).eval(), bn, 1.0, Mode::kTrain, rng,
                                       cache),
               ParameterError);
}

TEST(HiddenBlock, TrainModeBatchIsStandardized) {
  Rng rng(RngSeed{77});
  for (int batch : {8, 32, 200}) {
    BatchNormState<double> bn(5);
    BlockCache<double> cache;
    const MatrixD y = tanh_dropout_bn_forward(random_matrix(batch, 5, rng, 1.5), bn, 0.25,
                                              Mode::kTrain, rng, cache);
    const RowVector<double> mean = y.colwise().mean();
    const RowVector<double> var = (y.rowwise() - mean).array().square().colwise().mean();
    EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 1e-4);
  }
}

TEST(HiddenBlock, BackwardMatchesFiniteDifferencesInBothOrders) {
  for (BlockOrder order : {BlockOrder::kDropoutThenNorm, BlockOrder::kNormThenDropout}) {
    for (Mode mode : {Mode::kTrain, Mode::kEval}) {
      Rng rng(RngSeed{31});
      BatchNormState<double> bn(4);
      bn.gamma.value = random_matrix(1, 4, rng);
      bn.beta.value = random_matrix(1, 4, rng);
      bn.running_mean = random_matrix(1, 4, rng).row(0);
      bn.running_var = random_matrix(1, 4, rng).cwiseAbs().row(0).array() + 0.5;
      Parameter<double> x("x", 9, 4);
      x.value = random_matrix(9, 4, rng);
      const MatrixD weights = random_matrix(9, 4, rng);
      auto run = [&](BlockCache<double>& cache) {
        Rng mask_rng(RngSeed{4});  // replay the same dropout mask each call
        BatchNormState<double> scratch = bn;
        return tanh_dropout_bn_forward(x.value, scratch, 0.25, mode, mask_rng, cache, order);
      };
      auto loss = [&] {
        BlockCache<double> cache;
        return (run(cache).array() * weights.array()).sum();
      };
      auto analytic = [&] {
        BlockCache<double> cache;
        run(cache);
        const auto g = tanh_dropout_bn_backward(weights, bn, cache);
        x.grad = g.grad_input;
        bn.gamma.grad = g.grad_gamma;
        bn.beta.grad = g.grad_beta;
      };
      const auto report = gradient_check(loss, analytic, {&x, &bn.gamma, &bn.beta}, 1e-4);
      EXPECT_TRUE(report.passed()) << to_string(order) << " max rel "
                                   << report.max_relative_error();
    }
  }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter<double> p("p", 2, 3);
  p.value << 1, 2, 3, 4, 5, 6;
  const MatrixD before = p.value;
  AdamState<double> state{AdamConfig{}};
  std::vector<Parameter<double>*> ps{&p};
  adam_step(ps, state);
  EXPECT_EQ((p.value - before).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {0.5, -3.0, 1e3}) {
    Parameter<double> p("w", 1, 1);
    p.value(0, 0) = 0.2;
    p.grad(0, 0) = g;
    AdamState<double> state{AdamConfig{}};
    std::vector<Parameter<double>*> ps{&p};
    adam_step(ps, state);
    EXPECT_NEAR(p.value(0, 0) - 0.2, -0.001 * (g > 0 ? 1 : -1), 1e-9);
  }
}

// Scalar reference Adam written out independently of adam_step.
double reference_adam_on_square(double w, double lr, int steps) {
  double m = 0, v = 0;
  for (int t = 1; t <= steps; ++t) {
    const double g = 2 * w;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    w -= lr * mh / (std::sqrt(vh) + 1e-8);
  }
  return w;
}

TEST(Adam, ConvergesOnQuadratic) {
  Parameter<double> p("w", 1, 1);
  p.value(0, 0) = 1.0;
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  AdamState<double> state{cfg};
  std::vector<Parameter<double>*> ps{&p};
  for (int i = 0; i < 100; ++i) {
    p.grad(0, 0) = 2 * p.value(0, 0);
    adam_step(ps, state);
  }
  EXPECT_LT(std::abs(p.value(0, 0)), 0.1);
  EXPECT_NEAR(p.value(0, 0), reference_adam_on_square(1.0, 0.1, 100), 1e-12);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Parameter<double> a("encoder.w", 1, 2), b("decoder.b", 1, 1);
  b.grad(0, 0) = std::nan("");
  AdamState<double> state{AdamConfig{}};
  std::vector<Parameter<double>*> ps{&a, &b};
  try {
    adam_step(ps, state);
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.b"), std::string::npos);
  }
  EXPECT_EQ(state.step, 0u);
}

TEST(GradientCheck, LinearModelIsExact) {
  Rng rng(RngSeed{8});
  DenseLayer<double> layer(3, 2);
  layer.init(rng);
  const MatrixD x = random_matrix(4, 3, rng);
  const MatrixD c = random_matrix(4, 2, rng);
  auto loss = [&] { return (dense_forward(layer, x).array() * c.array()).sum(); };
  auto analytic = [&] {
    const auto g = dense_backward(layer, x, c);
    layer.weight.grad = g.grad_weights;
    layer.bias.grad = g.grad_bias;
  };
  const auto report = gradient_check(loss, analytic, {&layer.weight, &layer.bias}, 1e-8);
  EXPECT_TRUE(report.passed()) << report.max_relative_error();
}

MlpConfig encoder_config(Eigen::Index width) {
  MlpConfig cfg;
  cfg.input = 40;
  cfg.hidden = {width, width, width};
  cfg.output = 32;
  return cfg;
}

GradCheckReport check_mlp(Mlp<double>& net, const MatrixD& x, const MatrixD& c, Mode mode,
                          std::size_t max_entries) {
  auto loss = [&] {
    Rng mask_rng(RngSeed{123});
    return (net.forward(x, mode, mask_rng).array() * c.array()).sum();
  };
  auto analytic = [&] {
    Rng mask_rng(RngSeed{123});
    net.zero_grad();
    net.forward(x, mode, mask_rng);
    net.backward(c);
  };
  GradCheckOptions opt;
  opt.tolerance = 1e-4;
  opt.max_entries = max_entries;
  opt.seed = RngSeed{5};
  return gradient_check(loss, analytic, net.parameters(), opt);
}

TEST(GradientCheck, EncoderStackTrainModeAllEntries) {
  Rng rng(RngSeed{17});
  Mlp<double> net(encoder_config(12), "encoder", rng);
  const MatrixD x = random_matrix(8, 40, rng);
  const MatrixD c = random_matrix(8, 32, rng);
  const auto report = check_mlp(net, x, c, Mode::kTrain, 0);
  EXPECT_TRUE(report.passed()) << report.max_relative_error();
}

TEST(GradientCheck, FullWidthEncoderStackSampledEntries) {
  Rng rng(RngSeed{19});
  Mlp<double> net(encoder_config(256), "encoder", rng);
  const MatrixD x = random_matrix(8, 40, rng);
  const MatrixD c = random_matrix(8, 32, rng);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    const auto report = check_mlp(net, x, c, mode, 24);
    EXPECT_TRUE(report.passed()) << report.max_relative_error();
  }
}

TEST(GradientCheck, CorruptedBackwardIsFlagged) {
  Rng rng(RngSeed{21});
  DenseLayer<double> layer(3, 2);
  layer.init(rng);
  const MatrixD x = random_matrix(4, 3, rng);
  auto loss = [&] { return dense_forward(layer, x).squaredNorm(); };
  auto analytic = [&] {
    const MatrixD y = dense_forward(layer, x);
    const auto g = dense_backward(layer, x, MatrixD(2 * y));
    layer.weight.grad = g.grad_weights * 1.01;  // deliberately wrong
    layer.bias.grad = g.grad_bias;
  };
  const auto report = gradient_check(loss, analytic, {&layer.weight, &layer.bias}, 1e-4);
  ASSERT_EQ(report.flagged().size(), 1u);
  EXPECT_EQ(report.flagged()[0], layer.weight.name);
}

TEST(Mlp, EqualSeedsGiveBitIdenticalTraining) {
  auto train = [] {
    Rng init(RngSeed{99});
    MlpConfig cfg;
    cfg.input = 5;
    cfg.hidden = {16, 16};
    cfg.output = 3;
    Mlp<double> net(cfg, "net", init);
    AdamState<double> adam{AdamConfig{}};
    Rng data(RngSeed{100});
    Rng drop(RngSeed{101});
    const MatrixD x = random_matrix(10, 5, data);
    const MatrixD t = random_matrix(10, 3, data);
    auto params = net.parameters();
    for (int step = 0; step < 25; ++step) {
      net.zero_grad();
      const MatrixD y = net.forward(x, Mode::kTrain, drop);
      net.backward(MatrixD(y - t));
      adam_step(params, adam);
    }
    return mlp_to_json(net).dump();
  };
  EXPECT_EQ(train(), train());
}

TEST(Mlp, FrozenNetworkKeepsParametersButPassesInputGradient) {
  Rng rng(RngSeed{5});
  MlpConfig cfg;
  cfg.input = 3;
  cfg.hidden = {8};
  cfg.output = 2;
  Mlp<double> net(cfg, "synth", rng);
  net.freeze();
  net.zero_grad();
  const std::string before = mlp_to_json(net).dump();
  const MatrixD x = random_matrix(4, 3, rng);
  net.forward(x, Mode::kTrain, rng);
  const MatrixD gin = net.backward(MatrixD::Ones(4, 2));
  EXPECT_GT(gin.cwiseAbs().maxCoeff(), 0.0);
  for (const auto* p : net.parameters()) EXPECT_EQ(p->grad.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(mlp_to_json(net).dump(), before);
}

TEST(Checkpoint, RoundTripPreservesEvalOutputs) {
  Rng rng(RngSeed{6});
  Mlp<double> net(encoder_config(10), "encoder", rng);
  const MatrixD x = random_matrix(7, 40, rng);
  net.forward(x, Mode::kTrain, rng);  // move running statistics off their defaults
  const Json j = Json::parse(mlp_to_json(net).dump());
  Mlp<double> restored = mlp_from_json<double>(j);
  EXPECT_EQ((net.forward(x) - restored.forward(x)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Checkpoint, RejectsTruncatedTensor) {
  Json t = tensor_to_json(MatrixD::Ones(2, 2));
  t["data"].erase(0);
  EXPECT_THROW(tensor_from_json<double>(t, "w"), IngestionError);
}

}  // namespace
}  // namespace artvq::nn
