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
#include <functional>
#include <string>
#include <vector>

#include "artvq/core/rng.hpp"
#include "artvq/nn/dense.hpp"

namespace artvq::nn {

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs_error = 0.0;
  bool flagged = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double tolerance = 0.0;

  double max_relative_error() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, e.relative_error);
    return m;
  }
  bool passed() const {
    return std::none_of(entries.begin(), entries.end(), [](const auto& e) { return e.flagged; });
  }
  std::vector<std::string> flagged() const {
    std::vector<std::string> names;
    for (const auto& e : entries)
      if (e.flagged) names.push_back(e.name);
    return names;
  }
};

struct GradCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // When non-zero, only this many entries per parameter are perturbed,
  // chosen with `seed`. Zero checks every entry.
  std::size_t max_entries = 0;
  RngSeed seed{0};
};

// Compares analytic gradients with central differences.
//
// `loss` must be a deterministic function of the parameter values (eval mode,
// or a dropout mask replayed from a fixed seed). `analytic` must leave the
// gradient of the same loss in every parameter's `grad` field.
inline GradCheckReport gradient_check(const std::function<double()>& loss,
                                      const std::function<void()>& analytic,
                                      const std::vector<Parameter<double>*>& params,
                                      const GradCheckOptions& options) {
  analytic();
  GradCheckReport report;
  report.tolerance = options.tolerance;
  Rng rng(options.seed);
  for (Parameter<double>* p : params) {
    const auto size = static_cast<std::size_t>(p->value.size());
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    if (options.max_entries > 0 && options.max_entries < size) {
      rng.shuffle(idx);
      idx.resize(options.max_entries);
    }
    Vector<double> numeric(static_cast<Eigen::Index>(idx.size()));
    Vector<double> exact(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double& w = p->value.data()[idx[k]];
      const double saved = w;
      w = saved + options.step;
      const double plus = loss();
      w = saved - options.step;
      const double minus = loss();
      w = saved;
      numeric[static_cast<Eigen::Index>(k)] = (plus - minus) / (2.0 * options.step);
      exact[static_cast<Eigen::Index>(k)] = p->grad.data()[idx[k]];
    }
    GradCheckEntry e;
    e.name = p->name;
    const double diff = (exact - numeric).norm();
    const double scale = std::max(exact.norm(), numeric.norm());
    e.relative_error = scale > 0.0 ? diff / scale : 0.0;
    e.max_abs_error = idx.empty() ? 0.0 : (exact - numeric).cwiseAbs().maxCoeff();
    e.flagged = !(e.relative_error < options.tolerance);
    report.entries.push_back(std::move(e));
  }
  return report;
}

inline GradCheckReport gradient_check(const std::function<double()>& loss,
                                      const std::function<void()>& analytic,
                                      const std::vector<Parameter<double>*>& params,
                                      double tolerance, double step = 1e-5) {
  GradCheckOptions options;
  options.tolerance = tolerance;
  options.step = step;
  return gradient_check(loss, analytic, params, options);
}

}  // namespace artvq::nn
