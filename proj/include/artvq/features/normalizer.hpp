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
#include <vector>

#include "artvq/features/sequence.hpp"
#include "artvq/nn/checkpoint.hpp"

namespace artvq::features {

inline constexpr double kMinNormalizerStd = 1e-8;

// Per-dimension z-scoring. `fit_split` records which partition the statistics
// came from so that evaluation code can refuse anything but "train".
struct Normalizer {
  VectorD mean;
  VectorD stddev;
  std::string fit_split = "train";

  Eigen::Index dim() const { return mean.size(); }

  MatrixD apply(const MatrixD& frames) const {
    check(frames.cols());
    return ((frames.rowwise() - mean.transpose()).array().rowwise() /
            stddev.transpose().array())
        .matrix();
  }

  MatrixD invert(const MatrixD& z) const {
    check(z.cols());
    return ((z.array().rowwise() * stddev.transpose().array()).matrix()).rowwise() +
           mean.transpose();
  }

  FeatureSequence apply(const FeatureSequence& seq) const {
    FeatureSequence out = seq;
    out.frames = apply(seq.frames);
    return out;
  }

  FeatureSequence invert(const FeatureSequence& seq) const {
    FeatureSequence out = seq;
    out.frames = invert(seq.frames);
    return out;
  }

 private:
  void check(Eigen::Index cols) const {
    if (cols != dim()) {
      throw DimensionError("normalizer fitted on " + std::to_string(dim()) +
                           " dimensions applied to " + std::to_string(cols));
    }
  }
};

// Population statistics over every frame of every sequence.
inline Normalizer fit_normalizer(const std::vector<const MatrixD*>& frames,
                                 const std::string& split = "train") {
  Eigen::Index dim = -1;
  Eigen::Index total = 0;
  for (const MatrixD* f : frames) {
    if (dim < 0) dim = f->cols();
    if (f->cols() != dim) throw DimensionError("fit_normalizer: inconsistent feature widths");
    total += f->rows();
  }
  if (total == 0) throw FitError("fit_normalizer: no frames");
  VectorD sum = VectorD::Zero(dim);
  for (const MatrixD* f : frames) sum += f->colwise().sum().transpose();
  const VectorD mean = sum / static_cast<double>(total);
  VectorD sq = VectorD::Zero(dim);
  for (const MatrixD* f : frames) {
    sq += (f->rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  Normalizer n;
  n.mean = mean;
  n.stddev = (sq / static_cast<double>(total)).array().sqrt().matrix();
  n.fit_split = split;
  for (Eigen::Index d = 0; d < dim; ++d) {
    if (!(n.stddev[d] >= kMinNormalizerStd)) {
      throw FitError("fit_normalizer: dimension " + std::to_string(d) +
                     " is constant (std " + std::to_string(n.stddev[d]) + ")");
    }
  }
  return n;
}

inline Normalizer fit_normalizer(const std::vector<FeatureSequence>& seqs,
                                 const std::string& split = "train") {
  std::vector<const MatrixD*> frames;
  for (const auto& s : seqs) frames.push_back(&s.frames);
  return fit_normalizer(frames, split);
}

// Mean 0, std 1: leaves frames unchanged.
inline Normalizer identity_normalizer(Eigen::Index dim, const std::string& split = "train") {
  Normalizer n;
  n.mean = VectorD::Zero(dim);
  n.stddev = VectorD::Ones(dim);
  n.fit_split = split;
  return n;
}

inline Json normalizer_to_json(const Normalizer& n) {
  return Json{{"mean", nn::tensor_to_json(n.mean.transpose())},
              {"stddev", nn::tensor_to_json(n.stddev.transpose())},
              {"fit_split", n.fit_split}};
}

inline Normalizer normalizer_from_json(const Json& j) {
  Normalizer n;
  n.mean = nn::tensor_from_json<double>(j.at("mean"), "mean").row(0).transpose();
  n.stddev = nn::tensor_from_json<double>(j.at("stddev"), "stddev").row(0).transpose();
  n.fit_split = j.value("fit_split", std::string("train"));
  return n;
}

}  // namespace artvq::features
