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

// Guided PCA of EMA coil trajectories.
//
// The jaw parameter is the first principal component of the jaw coil. Lip and
// tongue coordinates are linearly regressed on the jaw parameter and the
// residuals go through a per-articulator PCA keeping 2 (lips) and 3 (tongue)
// components. The velum, when recorded, contributes the first principal
// component of its coil. Output order: jaw, lips, tongue, velum.

#pragma once

#include <Eigen/Eigenvalues>

#include <string>
#include <vector>

#include "artvq/core/io.hpp"
#include "artvq/features/ema.hpp"
#include "artvq/features/sequence.hpp"
#include "artvq/nn/checkpoint.hpp"

namespace artvq::features {

inline constexpr Eigen::Index kMinGuidedPcaFrames = 100;
inline constexpr double kDegenerateVariance = 1e-12;

struct RoleFactors {
  ArticulatorRole role = ArticulatorRole::kJaw;
  std::vector<int> columns;  // raw EMA columns of this articulator
  VectorD mean;              // [coords]
  VectorD jaw_slope;         // [coords]; zero for jaw and velum
  MatrixD axes;              // [coords x components], orthonormal columns
};

struct GuidedPcaModel {
  ArticulatoryLayout layout;
  std::vector<RoleFactors> roles;  // in output order

  int output_dim() const {
    int n = 0;
    for (const auto& r : roles) n += static_cast<int>(r.axes.cols());
    return n;
  }
};

namespace detail {

inline MatrixD gather_columns(const MatrixD& m, const std::vector<int>& cols) {
  MatrixD out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(cols[i]);
  return out;
}

// Leading `count` eigenvectors of the covariance of `centered`, largest
// eigenvalue first, each flipped so that its largest-magnitude loading is
// positive.
inline MatrixD principal_axes(const MatrixD& centered, Eigen::Index count) {
  const MatrixD cov =
      (centered.transpose() * centered) / static_cast<double>(std::max<Eigen::Index>(centered.rows(), 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const Eigen::MatrixXd& vectors = solver.eigenvectors();  // ascending eigenvalues
  MatrixD axes(cov.rows(), count);
  for (Eigen::Index k = 0; k < count; ++k) {
    VectorD v = vectors.col(cov.rows() - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    axes.col(k) = v;
  }
  return axes;
}

}  // namespace detail

inline GuidedPcaModel fit_guided_pca(const MatrixD& ema, const ArticulatoryLayout& layout) {
  layout.validate();
  if (ema.cols() != layout.raw_dim()) {
    throw DimensionError("guided PCA: EMA data has " + std::to_string(ema.cols()) +
                         " columns, layout '" + layout.name + "' needs " +
                         std::to_string(layout.raw_dim()));
  }
  if (ema.rows() < kMinGuidedPcaFrames) {
    throw FitError("guided PCA needs at least " + std::to_string(kMinGuidedPcaFrames) +
                   " frames, got " + std::to_string(ema.rows()));
  }
  GuidedPcaModel model;
  model.layout = layout;

  RoleFactors jaw;
  jaw.role = ArticulatorRole::kJaw;
  jaw.columns = layout.role_columns(ArticulatorRole::kJaw);
  const MatrixD jaw_raw = detail::gather_columns(ema, jaw.columns);
  jaw.mean = jaw_raw.colwise().mean().transpose();
  const MatrixD jaw_centered = jaw_raw.rowwise() - jaw.mean.transpose();
  jaw.axes = detail::principal_axes(jaw_centered, 1);
  jaw.jaw_slope = VectorD::Zero(jaw.mean.size());
  const VectorD jaw_param = jaw_centered * jaw.axes.col(0);
  const double jaw_energy = jaw_param.squaredNorm();
  // A motionless jaw explains nothing: slopes stay at zero.
  const bool jaw_moves = jaw_energy / static_cast<double>(ema.rows()) > kDegenerateVariance;
  model.roles.push_back(jaw);

  for (auto role : {ArticulatorRole::kLips, ArticulatorRole::kTongue, ArticulatorRole::kVelum}) {
    if (!layout.has_role(role)) continue;
    RoleFactors f;
    f.role = role;
    f.columns = layout.role_columns(role);
    const MatrixD raw = detail::gather_columns(ema, f.columns);
    f.mean = raw.colwise().mean().transpose();
    MatrixD centered = raw.rowwise() - f.mean.transpose();
    const double variance = centered.squaredNorm() / static_cast<double>(ema.rows());
    if (variance < kDegenerateVariance) {
      throw FitError("guided PCA: degenerate covariance for " + to_string(role) +
                     " (zero variance)");
    }
    f.jaw_slope = VectorD::Zero(f.mean.size());
    if (role != ArticulatorRole::kVelum && jaw_moves) {
      f.jaw_slope = centered.transpose() * jaw_param / jaw_energy;
      centered -= jaw_param * f.jaw_slope.transpose();
    }
    f.axes = detail::principal_axes(centered, role_components(role));
    model.roles.push_back(std::move(f));
  }
  return model;
}

inline MatrixD apply_guided_pca(const GuidedPcaModel& model, const MatrixD& ema) {
  if (ema.cols() != model.layout.raw_dim()) {
    throw DimensionError("guided PCA: EMA frames have " + std::to_string(ema.cols()) +
                         " columns, model expects " + std::to_string(model.layout.raw_dim()));
  }
  MatrixD out(ema.rows(), model.output_dim());
  const auto& jaw = model.roles.front();
  const VectorD jaw_param =
      (detail::gather_columns(ema, jaw.columns).rowwise() - jaw.mean.transpose()) * jaw.axes.col(0);
  Eigen::Index col = 0;
  for (const auto& f : model.roles) {
    MatrixD centered = detail::gather_columns(ema, f.columns).rowwise() - f.mean.transpose();
    centered -= jaw_param * f.jaw_slope.transpose();
    out.middleCols(col, f.axes.cols()) = centered * f.axes;
    col += f.axes.cols();
  }
  return out;
}

inline FeatureSequence apply_guided_pca(const GuidedPcaModel& model, const EmaRecording& rec,
                                        const std::string& utterance_id) {
  FeatureSequence seq;
  seq.frames = apply_guided_pca(model, rec.coords);
  seq.frame_period = kFramePeriod;
  seq.modality = Modality::kArticulatory;
  seq.utterance_id = utterance_id;
  return seq;
}

// Maps guided-PCA parameters back to coil coordinates. Projecting the result
// again returns the same parameters.
inline MatrixD reconstruct_ema(const GuidedPcaModel& model, const MatrixD& params) {
  if (params.cols() != model.output_dim()) {
    throw DimensionError("guided PCA reconstruction: expected " +
                         std::to_string(model.output_dim()) + " parameters");
  }
  MatrixD ema = MatrixD::Zero(params.rows(), model.layout.raw_dim());
  const VectorD jaw_param = params.col(0);
  Eigen::Index col = 0;
  for (const auto& f : model.roles) {
    MatrixD block = params.middleCols(col, f.axes.cols()) * f.axes.transpose();
    block += jaw_param * f.jaw_slope.transpose();
    block.rowwise() += f.mean.transpose();
    for (std::size_t i = 0; i < f.columns.size(); ++i) {
      ema.col(f.columns[i]) = block.col(static_cast<Eigen::Index>(i));
    }
    col += f.axes.cols();
  }
  return ema;
}

inline Json guided_pca_to_json(const GuidedPcaModel& m) {
  Json coils = Json::array();
  for (const auto& c : m.layout.coils) coils.push_back({{"name", c.name}, {"role", to_string(c.role)}});
  Json roles = Json::array();
  for (const auto& f : m.roles) {
    roles.push_back({{"role", to_string(f.role)},
                     {"columns", f.columns},
                     {"mean", nn::tensor_to_json(f.mean.transpose())},
                     {"jaw_slope", nn::tensor_to_json(f.jaw_slope.transpose())},
                     {"axes", nn::tensor_to_json(f.axes)}});
  }
  return Json{{"format_version", nn::kCheckpointFormatVersion},
              {"kind", "guided_pca"},
              {"layout", {{"name", m.layout.name}, {"coils", coils}}},
              {"roles", roles}};
}

inline GuidedPcaModel guided_pca_from_json(const Json& j) {
  nn::check_format_version(j, "guided PCA model");
  GuidedPcaModel m;
  m.layout.name = j.at("layout").at("name").get<std::string>();
  for (const auto& c : j.at("layout").at("coils")) {
    m.layout.coils.push_back({c.at("name").get<std::string>(),
                              role_from_string(c.at("role").get<std::string>())});
  }
  for (const auto& r : j.at("roles")) {
    RoleFactors f;
    f.role = role_from_string(r.at("role").get<std::string>());
    f.columns = r.at("columns").get<std::vector<int>>();
    f.mean = nn::tensor_from_json<double>(r.at("mean"), "mean").row(0).transpose();
    f.jaw_slope = nn::tensor_from_json<double>(r.at("jaw_slope"), "jaw_slope").row(0).transpose();
    f.axes = nn::tensor_from_json<double>(r.at("axes"), "axes");
    m.roles.push_back(std::move(f));
  }
  return m;
}

}  // namespace artvq::features
