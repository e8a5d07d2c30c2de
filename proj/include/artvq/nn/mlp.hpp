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

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "artvq/nn/block.hpp"
#include "artvq/nn/dense.hpp"

namespace artvq::nn {

struct MlpConfig {
  Eigen::Index input = 0;
  std::vector<Eigen::Index> hidden;  // one entry per dense/tanh/dropout/bn block
  Eigen::Index output = 0;
  double dropout = 0.25;
  BlockOrder order = BlockOrder::kDropoutThenNorm;
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;
};

// Stack of hidden blocks followed by a linear output layer. The forward pass
// keeps what backward needs, so one forward must precede each backward.
template <typename T>
class Mlp {
 public:
  Mlp() = default;

  Mlp(const MlpConfig& config, const std::string& name, Rng& init_rng)
      : config_(config), name_(name) {
    if (config.input <= 0 || config.output <= 0) {
      throw ParameterError("mlp '" + name + "': input and output sizes must be positive");
    }
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
      throw ParameterError("mlp '" + name + "': dropout must lie in [0, 1)");
    }
    Eigen::Index in = config.input;
    for (std::size_t i = 0; i < config.hidden.size(); ++i) {
      const std::string prefix = name + ".hidden" + std::to_string(i);
      Hidden h{DenseLayer<T>(in, config.hidden[i], prefix + ".dense"),
               BatchNormState<T>(config.hidden[i], prefix + ".bn"), {}, {}, {}};
      h.bn.momentum = config.bn_momentum;
      h.bn.epsilon = config.bn_epsilon;
      h.dense.init(init_rng);
      hidden_.push_back(std::move(h));
      in = config.hidden[i];
    }
    output_ = DenseLayer<T>(in, config.output, name + ".output");
    output_.init(init_rng);
  }

  const MlpConfig& config() const { return config_; }
  const std::string& name() const { return name_; }
  Eigen::Index input_size() const { return config_.input; }
  Eigen::Index output_size() const { return config_.output; }

  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  Matrix<T> forward(const Matrix<T>& x, Mode mode, Rng& rng) {
    if (x.cols() != config_.input) {
      throw DimensionError("mlp '" + name_ + "': expected input width " +
                           std::to_string(config_.input) + ", got " + std::to_string(x.cols()));
    }
    // Frozen networks never update their running statistics.
    if (frozen_ && mode == Mode::kTrain) mode = Mode::kEval;
    Matrix<T> h = x;
    for (auto& blk : hidden_) {
      blk.input = std::move(h);
      blk.pre = dense_forward(blk.dense, blk.input, mode == Mode::kEval);
      h = tanh_dropout_bn_forward(blk.pre, blk.bn, config_.dropout, mode, rng, blk.cache,
                                  config_.order);
    }
    output_input_ = std::move(h);
    return dense_forward(output_, output_input_, mode == Mode::kEval);
  }

  Matrix<T> forward(const Matrix<T>& x) {
    Rng unused(RngSeed{0});
    return forward(x, Mode::kEval, unused);
  }

  // Accumulates parameter gradients (skipped when frozen) and returns the
  // gradient with respect to the network input.
  Matrix<T> backward(const Matrix<T>& grad_out) {
    auto g = dense_backward(output_, output_input_, grad_out);
    if (!frozen_) {
      output_.weight.grad += g.grad_weights;
      output_.bias.grad += g.grad_bias;
    }
    Matrix<T> grad = std::move(g.grad_input);
    for (auto it = hidden_.rbegin(); it != hidden_.rend(); ++it) {
      auto bg = tanh_dropout_bn_backward(grad, it->bn, it->cache);
      auto dg = dense_backward(it->dense, it->input, bg.grad_input);
      if (!frozen_) {
        it->bn.gamma.grad += bg.grad_gamma;
        it->bn.beta.grad += bg.grad_beta;
        it->dense.weight.grad += dg.grad_weights;
        it->dense.bias.grad += dg.grad_bias;
      }
      grad = std::move(dg.grad_input);
    }
    return grad;
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> ps;
    for (auto& blk : hidden_) {
      ps.push_back(&blk.dense.weight);
      ps.push_back(&blk.dense.bias);
      ps.push_back(&blk.bn.gamma);
      ps.push_back(&blk.bn.beta);
    }
    ps.push_back(&output_.weight);
    ps.push_back(&output_.bias);
    return ps;
  }

  std::vector<const Parameter<T>*> parameters() const {
    std::vector<const Parameter<T>*> ps;
    for (const auto* p : const_cast<Mlp*>(this)->parameters()) ps.push_back(p);
    return ps;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  std::size_t hidden_count() const { return hidden_.size(); }
  BatchNormState<T>& batch_norm(std::size_t i) { return hidden_.at(i).bn; }
  const BatchNormState<T>& batch_norm(std::size_t i) const { return hidden_.at(i).bn; }

 private:
  struct Hidden {
    DenseLayer<T> dense;
    BatchNormState<T> bn;
    Matrix<T> input;
    Matrix<T> pre;
    BlockCache<T> cache;
  };

  MlpConfig config_;
  std::string name_;
  std::vector<Hidden> hidden_;
  DenseLayer<T> output_;
  Matrix<T> output_input_;
  bool frozen_ = false;
};

}  // namespace artvq::nn
