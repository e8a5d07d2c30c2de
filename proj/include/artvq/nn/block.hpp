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

// Hidden-block nonlinearity: tanh, dropout and batch normalization, with the
// exact backward pass for each.

#pragma once

#include <cmath>
#include <string>

#include "artvq/core/rng.hpp"
#include "artvq/core/types.hpp"
#include "artvq/nn/dense.hpp"

namespace artvq::nn {

enum class Mode { kTrain, kEval };

// Where dropout sits relative to batch norm after the tanh.
enum class BlockOrder { kDropoutThenNorm, kNormThenDropout };

inline std::string to_string(BlockOrder o) {
  return o == BlockOrder::kDropoutThenNorm ? "dropout_then_norm" : "norm_then_dropout";
}

inline BlockOrder block_order_from_string(const std::string& s) {
  if (s == "dropout_then_norm") return BlockOrder::kDropoutThenNorm;
  if (s == "norm_then_dropout") return BlockOrder::kNormThenDropout;
  throw ParameterError("unknown block order '" + s + "'");
}

template <typename T>
struct BatchNormState {
  Parameter<T> gamma;  // [1 x dim]
  Parameter<T> beta;   // [1 x dim]
  RowVector<T> running_mean;
  RowVector<T> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  BatchNormState() = default;
  BatchNormState(Eigen::Index dim, const std::string& name = "bn")
      : gamma(name + ".gamma", 1, dim),
        beta(name + ".beta", 1, dim),
        running_mean(RowVector<T>::Zero(dim)),
        running_var(RowVector<T>::Ones(dim)) {
    gamma.value.setOnes();
  }

  Eigen::Index dim() const { return gamma.value.cols(); }
};

template <typename T>
struct BlockCache {
  Mode mode = Mode::kEval;
  BlockOrder order = BlockOrder::kDropoutThenNorm;
  Matrix<T> activated;  // tanh(x)
  Matrix<T> mask;       // 0 or 1/(1-rate) per unit; empty when dropout is inactive
  Matrix<T> normalized; // x-hat of the batch norm
  RowVector<T> inv_std;
};

template <typename T>
struct BlockGradients {
  Matrix<T> grad_input;
  Matrix<T> grad_gamma;
  Matrix<T> grad_beta;
};

namespace detail {

template <typename T>
Matrix<T> batch_norm_forward(const Matrix<T>& x, BatchNormState<T>& bn, Mode mode,
                             BlockCache<T>& cache) {
  const Eigen::Index n = x.rows();
  RowVector<T> mean;
  RowVector<T> var;
  if (mode == Mode::kTrain) {
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
    const T m = static_cast<T>(bn.momentum);
    const T unbias = n > 1 ? static_cast<T>(n) / static_cast<T>(n - 1) : T(1);
    bn.running_mean = (T(1) - m) * bn.running_mean + m * mean;
    bn.running_var = (T(1) - m) * bn.running_var + m * (unbias * var);
  } else {
    mean = bn.running_mean;
    var = bn.running_var;
  }
  cache.inv_std = (var.array() + static_cast<T>(bn.epsilon)).rsqrt().matrix();
  cache.normalized = ((x.rowwise() - mean).array().rowwise() * cache.inv_std.array()).matrix();
  Matrix<T> y = (cache.normalized.array().rowwise() * bn.gamma.value.row(0).array()).matrix();
  y.rowwise() += bn.beta.value.row(0);
  return y;
}

template <typename T>
Matrix<T> batch_norm_backward(const Matrix<T>& grad_y, const BatchNormState<T>& bn,
                              const BlockCache<T>& cache, BlockGradients<T>& g) {
  const auto& xhat = cache.normalized;
  g.grad_gamma = (grad_y.array() * xhat.array()).colwise().sum().matrix();
  g.grad_beta = grad_y.colwise().sum();
  Matrix<T> gxhat = (grad_y.array().rowwise() * bn.gamma.value.row(0).array()).matrix();
  if (cache.mode == Mode::kEval) {
    return (gxhat.array().rowwise() * cache.inv_std.array()).matrix();
  }
  const T n = static_cast<T>(grad_y.rows());
  const RowVector<T> sum_g = gxhat.colwise().sum();
  const RowVector<T> sum_gx = (gxhat.array() * xhat.array()).colwise().sum().matrix();
  Matrix<T> centered = (n * gxhat.array()).matrix();
  centered.rowwise() -= sum_g;
  centered.array() -= xhat.array().rowwise() * sum_gx.array();
  return ((centered.array().rowwise() * cache.inv_std.array()) / n).matrix();
}

template <typename T>
void draw_mask(Matrix<T>& mask, Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  mask.resize(rows, cols);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < rate ? T(0) : keep_scale;
  }
}

}  // namespace detail

// tanh, then dropout (inverted scaling) and batch norm in the configured
// order. In eval mode dropout is the identity and batch norm uses running
// statistics. Train mode updates the running statistics in `bn`.
template <typename T>
Matrix<T> tanh_dropout_bn_forward(const Matrix<T>& x, BatchNormState<T>& bn, double dropout_rate,
                                  Mode mode, Rng& rng, BlockCache<T>& cache,
                                  BlockOrder order = BlockOrder::kDropoutThenNorm) {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ParameterError("dropout rate must lie in [0, 1), got " + std::to_string(dropout_rate));
  }
  if (x.cols() != bn.dim()) {
    throw DimensionError("hidden block: input width " + std::to_string(x.cols()) +
                         " != batch-norm width " + std::to_string(bn.dim()));
  }
  cache.mode = mode;
  cache.order = order;
  cache.activated = x.array().tanh().matrix();
  const bool drop = mode == Mode::kTrain && dropout_rate > 0.0;
  if (drop) {
    detail::draw_mask(cache.mask, x.rows(), x.cols(), dropout_rate, rng);
  } else {
    cache.mask.resize(0, 0);
  }
  if (order == BlockOrder::kDropoutThenNorm) {
    if (drop) {
      return detail::batch_norm_forward<T>((cache.activated.array() * cache.mask.array()).matrix(),
                                           bn, mode, cache);
    }
    return detail::batch_norm_forward<T>(cache.activated, bn, mode, cache);
  }
  Matrix<T> y = detail::batch_norm_forward<T>(cache.activated, bn, mode, cache);
  if (drop) y.array() *= cache.mask.array();
  return y;
}

template <typename T>
BlockGradients<T> tanh_dropout_bn_backward(const Matrix<T>& grad_y, const BatchNormState<T>& bn,
                                           const BlockCache<T>& cache) {
  BlockGradients<T> g;
  const bool drop = cache.mask.size() > 0;
  Matrix<T> grad_act;
  if (cache.order == BlockOrder::kDropoutThenNorm) {
    grad_act = detail::batch_norm_backward<T>(grad_y, bn, cache, g);
    if (drop) grad_act.array() *= cache.mask.array();
  } else {
    if (drop) {
      grad_act = detail::batch_norm_backward<T>((grad_y.array() * cache.mask.array()).matrix(), bn,
                                                cache, g);
    } else {
      grad_act = detail::batch_norm_backward<T>(grad_y, bn, cache, g);
    }
  }
  g.grad_input = (grad_act.array() * (T(1) - cache.activated.array().square())).matrix();
  return g;
}

}  // namespace artvq::nn
