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

#include <algorithm>
#include <cmath>
#include <vector>

#include "artvq/core/error.hpp"
#include "artvq/core/types.hpp"

namespace artvq::abx {

inline constexpr double kZeroNorm = 1e-12;

// 1 - cos(a, b). A (near) zero vector is at distance 1 from anything else
// and at distance 0 from another zero vector. Identical vectors are at
// distance 0 exactly.
template <typename A, typename B>
double cosine_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a == b) return 0.0;
  const double na = a.norm();
  const double nb = b.norm();
  const bool za = na < kZeroNorm;
  const bool zb = nb < kZeroNorm;
  if (za && zb) return 0.0;
  if (za || zb) return 1.0;
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return 1.0 - c;
}

// Mean cosine distance along the minimum-cost monotone alignment of the rows
// of `a` and `x`, using steps (1,0), (0,1), (1,1). The mean is over the path
// nodes. Among paths of equal total cost the longest one is kept.
inline double dtw_cosine_distance(const MatrixD& a, const MatrixD& x) {
  if (a.rows() == 0 || x.rows() == 0) throw EvaluationError("DTW: empty sequence");
  if (a.cols() != x.cols()) {
    throw EvaluationError("DTW: embedding dimensions differ (" + std::to_string(a.cols()) + " vs " +
                          std::to_string(x.cols()) + ")");
  }
  const Eigen::Index n = a.rows();
  const Eigen::Index m = x.rows();
  MatrixD cost(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) cost(i, j) = cosine_distance(a.row(i), x.row(j));

  MatrixD sum(n, m);
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> len(n, m);
  auto better = [&](Eigen::Index i1, Eigen::Index j1, Eigen::Index i2, Eigen::Index j2) {
    return sum(i1, j1) < sum(i2, j2) || (sum(i1, j1) == sum(i2, j2) && len(i1, j1) > len(i2, j2));
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i == 0 && j == 0) {
        sum(0, 0) = cost(0, 0);
        len(0, 0) = 1;
        continue;
      }
      Eigen::Index bi = -1, bj = -1;
      auto consider = [&](Eigen::Index pi, Eigen::Index pj) {
        if (pi < 0 || pj < 0) return;
        if (bi < 0 || better(pi, pj, bi, bj)) bi = pi, bj = pj;
      };
      consider(i - 1, j - 1);
      consider(i - 1, j);
      consider(i, j - 1);
      sum(i, j) = sum(bi, bj) + cost(i, j);
      len(i, j) = len(bi, bj) + 1;
    }
  }
  return sum(n - 1, m - 1) / static_cast<double>(len(n - 1, m - 1));
}

}  // namespace artvq::abx
