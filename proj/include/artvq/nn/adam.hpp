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
#include <cstdint>
#include <span>
#include <vector>

#include "artvq/nn/dense.hpp"

namespace artvq::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix<T>> first_moment;
  std::vector<Matrix<T>> second_moment;

  AdamState() = default;
  explicit AdamState(AdamConfig c) : config(c) {
    if (!(c.beta1 > 0 && c.beta1 < 1 && c.beta2 > 0 && c.beta2 < 1 && c.epsilon > 0 &&
          c.learning_rate > 0)) {
      throw ParameterError("invalid Adam hyperparameters");
    }
  }
};

// One bias-corrected Adam update using the gradients held in each parameter.
// All gradients are validated before any parameter is touched.
template <typename T>
void adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state) {
  for (const Parameter<T>* p : params) {
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) {
      throw DimensionError("adam_step: gradient shape mismatch for " + p->name);
    }
    if (!p->grad.allFinite()) {
      throw TrainingError("non-finite gradient for parameter " + p->name);
    }
  }
  if (state.first_moment.empty()) {
    state.first_moment.reserve(params.size());
    state.second_moment.reserve(params.size());
    for (const Parameter<T>* p : params) {
      state.first_moment.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      state.second_moment.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    }
  } else if (state.first_moment.size() != params.size()) {
    throw DimensionError("adam_step: parameter count changed between steps");
  }

  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(c.beta1);
  const T b2 = static_cast<T>(c.beta2);
  const T correction1 = static_cast<T>(1.0 - std::pow(c.beta1, t));
  const T correction2 = static_cast<T>(1.0 - std::pow(c.beta2, t));
  const T lr = static_cast<T>(c.learning_rate);
  const T eps = static_cast<T>(c.epsilon);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = b1 * m + (T(1) - b1) * p.grad;
    v = b2 * v + (T(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -=
        lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  }
}

template <typename T>
void adam_step(std::vector<Parameter<T>*>& params, AdamState<T>& state) {
  adam_step(std::span<Parameter<T>* const>(params.data(), params.size()), state);
}

}  // namespace artvq::nn
