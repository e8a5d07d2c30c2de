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
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "artvq/core/io.hpp"
#include "artvq/core/types.hpp"

namespace artvq::features {

enum class ArticulatorRole { kJaw, kLips, kTongue, kVelum };

inline constexpr ArticulatorRole kRoleOrder[] = {ArticulatorRole::kJaw, ArticulatorRole::kLips,
                                                 ArticulatorRole::kTongue, ArticulatorRole::kVelum};

inline std::string to_string(ArticulatorRole r) {
  switch (r) {
    case ArticulatorRole::kJaw: return "jaw";
    case ArticulatorRole::kLips: return "lips";
    case ArticulatorRole::kTongue: return "tongue";
    case ArticulatorRole::kVelum: return "velum";
  }
  return "unknown";
}

inline ArticulatorRole role_from_string(const std::string& s) {
  for (auto r : kRoleOrder)
    if (to_string(r) == s) return r;
  throw ParameterError("unknown articulator role '" + s + "'");
}

// Number of guided-PCA parameters extracted per articulator.
inline int role_components(ArticulatorRole r) {
  switch (r) {
    case ArticulatorRole::kJaw: return 1;
    case ArticulatorRole::kLips: return 2;
    case ArticulatorRole::kTongue: return 3;
    case ArticulatorRole::kVelum: return 1;
  }
  return 0;
}

struct Coil {
  std::string name;
  ArticulatorRole role;
};

struct ArticulatoryLayout {
  std::string name;
  std::vector<Coil> coils;

  // MOCHA-TIMIT: lower incisor, upper/lower lip, tongue tip/body/dorsum, velum.
  static ArticulatoryLayout mocha() {
    return {"mocha",
            {{"li", ArticulatorRole::kJaw},
             {"ul", ArticulatorRole::kLips},
             {"ll", ArticulatorRole::kLips},
             {"tt", ArticulatorRole::kTongue},
             {"tb", ArticulatorRole::kTongue},
             {"td", ArticulatorRole::kTongue},
             {"v", ArticulatorRole::kVelum}}};
  }

  // PB2007: same coils without the velum.
  static ArticulatoryLayout pb2007() {
    return {"pb2007",
            {{"li", ArticulatorRole::kJaw},
             {"ul", ArticulatorRole::kLips},
             {"ll", ArticulatorRole::kLips},
             {"tt", ArticulatorRole::kTongue},
             {"tb", ArticulatorRole::kTongue},
             {"td", ArticulatorRole::kTongue}}};
  }

  static ArticulatoryLayout by_name(const std::string& n) {
    if (n == "mocha") return mocha();
    if (n == "pb2007") return pb2007();
    throw ConfigurationError("unknown articulatory layout '" + n + "' (expected mocha or pb2007)");
  }

  bool has_role(ArticulatorRole r) const {
    return std::any_of(coils.begin(), coils.end(), [r](const Coil& c) { return c.role == r; });
  }

  bool has_velum() const { return has_role(ArticulatorRole::kVelum); }

  // Raw column indices (x, y per coil) belonging to a role.
  std::vector<int> role_columns(ArticulatorRole r) const {
    std::vector<int> cols;
    for (std::size_t i = 0; i < coils.size(); ++i) {
      if (coils[i].role == r) {
        cols.push_back(static_cast<int>(2 * i));
        cols.push_back(static_cast<int>(2 * i + 1));
      }
    }
    return cols;
  }

  int raw_dim() const { return static_cast<int>(2 * coils.size()); }

  int total_components() const {
    int n = 0;
    for (auto r : kRoleOrder)
      if (has_role(r)) n += role_components(r);
    return n;
  }

  void validate() const {
    for (auto r : {ArticulatorRole::kJaw, ArticulatorRole::kLips, ArticulatorRole::kTongue}) {
      if (!has_role(r)) throw ConfigurationError("layout '" + name + "' lacks " + to_string(r));
    }
    for (auto r : kRoleOrder) {
      if (has_role(r) && static_cast<int>(role_columns(r).size()) < role_components(r)) {
        throw ConfigurationError("layout '" + name + "': too few coils for " + to_string(r));
      }
    }
  }
};

struct EmaRecording {
  std::vector<double> times;
  MatrixD coords;  // [T x 2*coils] in layout order, millimetres
};

// EMA track CSV: header `time,<coil>_x,<coil>_y,...`. Extra columns are
// ignored; the coils of `layout` must all be present. Samples must be 10 ms
// apart.
inline EmaRecording parse_ema_csv(const std::string& text, const ArticulatoryLayout& layout,
                                  const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(origin + ": empty EMA file");
  const auto header = split(trim(line), ',');
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[trim(header[i])] = i;
  if (!column.count("time")) throw IngestionError(origin + ": missing 'time' column");
  std::vector<std::size_t> source;
  for (const auto& coil : layout.coils) {
    for (const char* axis : {"_x", "_y"}) {
      const auto it = column.find(coil.name + axis);
      if (it == column.end()) {
        throw IngestionError(origin + ": missing column '" + coil.name + axis + "'");
      }
      source.push_back(it->second);
    }
  }
  EmaRecording rec;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw IngestionError(origin + ": row " + std::to_string(rec.times.size() + 1) +
                           " has the wrong number of columns");
    }
    auto number = [&](std::size_t i) {
      char* end = nullptr;
      const double v = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || !std::isfinite(v)) {
        throw IngestionError(origin + ": bad value '" + cells[i] + "'");
      }
      return v;
    };
    rec.times.push_back(number(column["time"]));
    for (std::size_t s : source) values.push_back(number(s));
  }
  if (rec.times.empty()) throw IngestionError(origin + ": no EMA samples");
  for (std::size_t i = 1; i < rec.times.size(); ++i) {
    const double dt = rec.times[i] - rec.times[i - 1];
    if (std::abs(dt - 0.010) > 1e-4) {
      throw IngestionError(origin + ": EMA samples must be 10 ms apart (found " +
                           std::to_string(dt) + " s at row " + std::to_string(i + 1) + ")");
    }
  }
  rec.coords = Eigen::Map<MatrixD>(values.data(), static_cast<Eigen::Index>(rec.times.size()),
                                   static_cast<Eigen::Index>(source.size()));
  return rec;
}

inline EmaRecording read_ema_csv(const fs::path& path, const ArticulatoryLayout& layout) {
  return parse_ema_csv(read_text_file(path), layout, path.string());
}

inline void write_ema_csv(const fs::path& path, const ArticulatoryLayout& layout,
                          const MatrixD& coords) {
  std::string out = "time";
  for (const auto& c : layout.coils) out += "," + c.name + "_x," + c.name + "_y";
  out += '\n';
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    out += format_double(0.010 * static_cast<double>(r));
    for (Eigen::Index c = 0; c < coords.cols(); ++c) out += "," + format_double(coords(r, c));
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace artvq::features
