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

// JSON checkpoints: each tensor is {"shape": [rows, cols], "data": [...]}
// with data flattened row-major.

#pragma once

#include <string>

#include "artvq/core/io.hpp"
#include "artvq/nn/mlp.hpp"

namespace artvq::nn {

inline constexpr int kCheckpointFormatVersion = 1;

template <typename Derived>
Json tensor_to_json(const Eigen::MatrixBase<Derived>& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(static_cast<double>(m(r, c)));
  return Json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

template <typename T>
Matrix<T> tensor_from_json(const Json& j, const std::string& what) {
  if (!j.contains("shape") || !j.contains("data") || j["shape"].size() != 2) {
    throw IngestionError("checkpoint tensor '" + what + "' lacks shape/data");
  }
  const auto rows = j["shape"][0].get<Eigen::Index>();
  const auto cols = j["shape"][1].get<Eigen::Index>();
  const auto& data = j["data"];
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw IngestionError("checkpoint tensor '" + what + "': data length " +
                         std::to_string(data.size()) + " != " + shape_string(rows, cols));
  }
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < rows * cols; ++i) m.data()[i] = static_cast<T>(data[i].get<double>());
  return m;
}

inline void check_format_version(const Json& j, const std::string& what) {
  const int v = j.value("format_version", -1);
  if (v != kCheckpointFormatVersion) {
    throw IngestionError(what + ": unsupported checkpoint format_version " + std::to_string(v));
  }
}

inline Json mlp_config_to_json(const MlpConfig& c) {
  return Json{{"input", c.input},           {"hidden", c.hidden},
              {"output", c.output},         {"dropout", c.dropout},
              {"order", to_string(c.order)}, {"bn_momentum", c.bn_momentum},
              {"bn_epsilon", c.bn_epsilon}};
}

inline MlpConfig mlp_config_from_json(const Json& j) {
  MlpConfig c;
  c.input = j.at("input").get<Eigen::Index>();
  c.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
  c.output = j.at("output").get<Eigen::Index>();
  c.dropout = j.at("dropout").get<double>();
  c.order = block_order_from_string(j.at("order").get<std::string>());
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_epsilon = j.at("bn_epsilon").get<double>();
  return c;
}

template <typename T>
Json mlp_to_json(const Mlp<T>& net) {
  Json params = Json::object();
  for (const auto* p : net.parameters()) params[p->name] = tensor_to_json(p->value);
  Json buffers = Json::object();
  for (std::size_t i = 0; i < net.hidden_count(); ++i) {
    const auto& bn = net.batch_norm(i);
    const std::string prefix = net.name() + ".hidden" + std::to_string(i) + ".bn";
    buffers[prefix + ".running_mean"] = tensor_to_json(bn.running_mean);
    buffers[prefix + ".running_var"] = tensor_to_json(bn.running_var);
  }
  return Json{{"name", net.name()},
              {"config", mlp_config_to_json(net.config())},
              {"frozen", net.frozen()},
              {"parameters", std::move(params)},
              {"buffers", std::move(buffers)}};
}

template <typename T>
Mlp<T> mlp_from_json(const Json& j) {
  const std::string name = j.at("name").get<std::string>();
  Rng unused(RngSeed{0});
  Mlp<T> net(mlp_config_from_json(j.at("config")), name, unused);
  const Json& params = j.at("parameters");
  for (auto* p : net.parameters()) {
    if (!params.contains(p->name)) throw IngestionError("checkpoint lacks parameter " + p->name);
    Matrix<T> v = tensor_from_json<T>(params[p->name], p->name);
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols()) {
      throw IngestionError("checkpoint parameter " + p->name + " has shape " +
                           shape_string(v.rows(), v.cols()));
    }
    p->value = std::move(v);
    p->zero_grad();
  }
  const Json& buffers = j.at("buffers");
  for (std::size_t i = 0; i < net.hidden_count(); ++i) {
    auto& bn = net.batch_norm(i);
    const std::string prefix = name + ".hidden" + std::to_string(i) + ".bn";
    bn.running_mean = tensor_from_json<T>(buffers.at(prefix + ".running_mean"), prefix).row(0);
    bn.running_var = tensor_from_json<T>(buffers.at(prefix + ".running_var"), prefix).row(0);
  }
  if (j.value("frozen", false)) net.freeze();
  return net;
}

}  // namespace artvq::nn
