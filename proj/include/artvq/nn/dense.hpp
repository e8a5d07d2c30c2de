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

#include <cmath>
#include <string>
#include <utility>

#include "artvq/core/rng.hpp"
#include "artvq/core/types.hpp"

namespace artvq::nn {

// A trainable tensor and its gradient accumulator. Vectors are stored as
// [1 x n] matrices so every parameter goes through the same code paths.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Fully connected layer, y = x W^T + b applied row-wise.
template <typename T>
struct DenseLayer {
  Parameter<T> weight;  // [out x in]
  Parameter<T> bias;    // [1 x out]

  DenseLayer() = default;
  DenseLayer(Eigen::Index in, Eigen::Index out, const std::string& name = "dense")
      : weight(name + ".weight", out, in), bias(name + ".bias", 1, out) {}

  Eigen::Index in_size() const { return weight.value.cols(); }
  Eigen::Index out_size() const { return weight.value.rows(); }

  // Glorot uniform weights, zero bias.
  void init(Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in_size() + out_size()));
    for (Eigen::Index i = 0; i < weight.value.size(); ++i) {
      weight.value.data()[i] = static_cast<T>(rng.uniform(-limit, limit));
    }
    bias.value.setZero();
  }
};

template <typename T>
struct DenseGradients {
  Matrix<T> grad_input;    // [batch x in]
  Matrix<T> grad_weights;  // [out x in]
  Matrix<T> grad_bias;     // [1 x out]
};

// With `row_stable`, every output row is computed by the same instruction
// sequence whatever its position in the batch, so identical input rows give
// bit-identical outputs (the blocked matrix product does not guarantee this).
template <typename T>
Matrix<T> dense_forward(const DenseLayer<T>& layer, const Matrix<T>& input, bool row_stable) {
  if (input.cols() != layer.in_size()) {
    throw DimensionError("dense_forward: input " + shape_string(input.rows(), input.cols()) +
                         " does not match layer in-size " + std::to_string(layer.in_size()));
  }
  Matrix<T> out(input.rows(), layer.out_size());
  if (row_stable) {
    out.noalias() = input.lazyProduct(layer.weight.value.transpose());
  } else {
    out.noalias() = input * layer.weight.value.transpose();
  }
  out.rowwise() += layer.bias.value.row(0);
  return out;
}

template <typename T>
Matrix<T> dense_forward(const DenseLayer<T>& layer, const Matrix<T>& input) {
  return dense_forward(layer, input, false);
}

template <typename T>
DenseGradients<T> dense_backward(const DenseLayer<T>& layer, const Matrix<T>& input,
                                 const Matrix<T>& grad_out) {
  if (input.cols() != layer.in_size() || grad_out.cols() != layer.out_size() ||
      input.rows() != grad_out.rows()) {
    throw DimensionError("dense_backward: input " + shape_string(input.rows(), input.cols()) +
                         " / grad_out " + shape_string(grad_out.rows(), grad_out.cols()) +
                         " inconsistent with layer " +
                         shape_string(layer.out_size(), layer.in_size()));
  }
  DenseGradients<T> g;
  g.grad_input = grad_out * layer.weight.value;
  g.grad_weights = grad_out.transpose() * input;
  g.grad_bias = grad_out.colwise().sum();
  return g;
}

}  // namespace artvq::nn
