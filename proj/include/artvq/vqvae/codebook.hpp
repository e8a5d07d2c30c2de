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
#include <limits>
#include <vector>

#include "artvq/nn/dense.hpp"

namespace artvq::vqvae {

// K embedding vectors of dimension D, one per row.
template <typename T>
struct Codebook {
  nn::Parameter<T> embeddings;

  Codebook() = default;
  Codebook(Eigen::Index k, Eigen::Index d) : embeddings("codebook.embeddings", k, d) {
    if (k < 2 || d < 1) throw ParameterError("codebook needs K >= 2 and D >= 1");
  }

  Eigen::Index size() const { return embeddings.value.rows(); }
  Eigen::Index dim() const { return embeddings.value.cols(); }

  // Smallest pairwise distance between distinct rows.
  double min_separation() const {
    double best = std::numeric_limits<double>::infinity();
    const auto& e = embeddings.value;
    for (Eigen::Index i = 0; i < e.rows(); ++i)
      for (Eigen::Index j = i + 1; j < e.rows(); ++j)
        best = std::min(best, static_cast<double>((e.row(i) - e.row(j)).norm()));
    return best;
  }
};

struct QuantizationResult {
  int code_index = 0;
  VectorD embedding;       // codebook row at code_index
  VectorD encoder_output;
  double squared_distance = 0.0;

  // The categorical posterior is one-hot at code_index.
  double posterior(int k) const { return k == code_index ? 1.0 : 0.0; }
};

// Index of the nearest row by squared Euclidean distance, computed term by
// term (no norm expansion) so that ties resolve to the lowest index exactly.
template <typename T, typename Derived>
int nearest_code(const Eigen::MatrixBase<Derived>& z, const Matrix<T>& codes, double* dist = nullptr) {
  int best = 0;
  T best_d = std::numeric_limits<T>::infinity();
  for (Eigen::Index k = 0; k < codes.rows(); ++k) {
    T d = 0;
    for (Eigen::Index j = 0; j < codes.cols(); ++j) {
      const T diff = z(j) - codes(k, j);
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(k);
    }
  }
  if (dist) *dist = static_cast<double>(best_d);
  return best;
}

template <typename T>
QuantizationResult quantize(const Vector<T>& encoder_output, const Codebook<T>& codebook) {
  if (encoder_output.size() != codebook.dim()) {
    throw DimensionError("quantize: encoder output has " + std::to_string(encoder_output.size()) +
                         " dims, codebook has " + std::to_string(codebook.dim()));
  }
  QuantizationResult r;
  r.code_index = nearest_code<T>(encoder_output, codebook.embeddings.value, &r.squared_distance);
  r.embedding = codebook.embeddings.value.row(r.code_index).transpose().template cast<double>();
  r.encoder_output = encoder_output.template cast<double>();
  return r;
}

template <typename T>
std::vector<int> quantize_rows(const Matrix<T>& z, const Codebook<T>& codebook) {
  if (z.cols() != codebook.dim()) {
    throw DimensionError("quantize: encoder output width " + std::to_string(z.cols()) +
                         " != codebook dimension " + std::to_string(codebook.dim()));
  }
  std::vector<int> codes(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index n = 0; n < z.rows(); ++n) {
    codes[static_cast<std::size_t>(n)] = nearest_code<T>(z.row(n), codebook.embeddings.value);
  }
  return codes;
}

template <typename T>
Matrix<T> gather_codes(const Codebook<T>& codebook, const std::vector<int>& codes) {
  Matrix<T> q(static_cast<Eigen::Index>(codes.size()), codebook.dim());
  for (std::size_t n = 0; n < codes.size(); ++n) {
    q.row(static_cast<Eigen::Index>(n)) = codebook.embeddings.value.row(codes[n]);
  }
  return q;
}

}  // namespace artvq::vqvae
