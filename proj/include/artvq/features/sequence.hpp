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
#include <sstream>
#include <string>
#include <utility>

#include "artvq/core/io.hpp"
#include "artvq/core/types.hpp"

namespace artvq::features {

inline constexpr double kFramePeriod = 0.010;

enum class Modality { kArticulatory, kAcoustic, kFused, kArticulatoryInferred };

inline std::string to_string(Modality m) {
  switch (m) {
    case Modality::kArticulatory: return "articulatory";
    case Modality::kAcoustic: return "acoustic";
    case Modality::kFused: return "fused";
    case Modality::kArticulatoryInferred: return "articulatory-inferred";
  }
  return "unknown";
}

inline Modality modality_from_string(const std::string& s) {
  if (s == "articulatory" || s == "art") return Modality::kArticulatory;
  if (s == "acoustic" || s == "ac") return Modality::kAcoustic;
  if (s == "fused" || s == "early-fusion") return Modality::kFused;
  if (s == "articulatory-inferred" || s == "inferred") return Modality::kArticulatoryInferred;
  throw ModalityError("unknown modality '" + s + "'");
}

// Frame-synchronous features of one utterance, one frame per row.
struct FeatureSequence {
  MatrixD frames;
  double frame_period = kFramePeriod;
  Modality modality = Modality::kAcoustic;
  std::string utterance_id;

  Eigen::Index length() const { return frames.rows(); }
  Eigen::Index dim() const { return frames.cols(); }

  void validate() const {
    if (frames.rows() < 1) throw IngestionError("utterance '" + utterance_id + "' has no frames");
    if (!frames.allFinite()) {
      throw IngestionError("utterance '" + utterance_id + "' has non-finite feature values");
    }
  }
};

// Early fusion: articulatory dimensions first, then acoustic. Streams that
// differ by at most two frames are truncated to the shorter one.
inline FeatureSequence concat_modalities(const FeatureSequence& art, const FeatureSequence& ac) {
  if (art.utterance_id != ac.utterance_id) {
    throw AlignmentError("cannot fuse utterances '" + art.utterance_id + "' and '" +
                         ac.utterance_id + "'");
  }
  if (std::abs(art.frame_period - ac.frame_period) > 1e-12) {
    throw AlignmentError("frame period mismatch for '" + art.utterance_id + "'");
  }
  const Eigen::Index diff = std::abs(art.length() - ac.length());
  if (diff > 2) {
    throw AlignmentError("utterance '" + art.utterance_id + "': articulatory stream has " +
                         std::to_string(art.length()) + " frames, acoustic has " +
                         std::to_string(ac.length()));
  }
  const Eigen::Index t = std::min(art.length(), ac.length());
  FeatureSequence fused;
  fused.utterance_id = art.utterance_id;
  fused.frame_period = art.frame_period;
  fused.modality = Modality::kFused;
  fused.frames.resize(t, art.dim() + ac.dim());
  fused.frames.leftCols(art.dim()) = art.frames.topRows(t);
  fused.frames.rightCols(ac.dim()) = ac.frames.topRows(t);
  return fused;
}

// Inverse of concat_modalities for equal-length inputs.
inline std::pair<FeatureSequence, FeatureSequence> split_modalities(const FeatureSequence& fused,
                                                                    Eigen::Index art_dim) {
  if (art_dim <= 0 || art_dim >= fused.dim()) {
    throw DimensionError("split_modalities: articulatory width " + std::to_string(art_dim) +
                         " out of range for fused width " + std::to_string(fused.dim()));
  }
  FeatureSequence art{fused.frames.leftCols(art_dim), fused.frame_period,
                      Modality::kArticulatory, fused.utterance_id};
  FeatureSequence ac{fused.frames.rightCols(fused.dim() - art_dim), fused.frame_period,
                     Modality::kAcoustic, fused.utterance_id};
  return {std::move(art), std::move(ac)};
}

// Feature files: `<stem>.csv` with header dim_0..dim_{F-1} and a
// `<stem>.meta.json` sidecar carrying modality, utterance id and frame period.
inline fs::path feature_meta_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

inline void write_feature_file(const fs::path& csv, const FeatureSequence& seq) {
  std::string out;
  for (Eigen::Index c = 0; c < seq.dim(); ++c) {
    if (c) out += ',';
    out += "dim_" + std::to_string(c);
  }
  out += '\n';
  for (Eigen::Index r = 0; r < seq.length(); ++r) {
    for (Eigen::Index c = 0; c < seq.dim(); ++c) {
      if (c) out += ',';
      out += format_double(seq.frames(r, c));
    }
    out += '\n';
  }
  write_text_file(csv, out);
  write_json_file(feature_meta_path(csv), Json{{"modality", to_string(seq.modality)},
                                               {"utterance_id", seq.utterance_id},
                                               {"frame_period", seq.frame_period},
                                               {"dim", seq.dim()},
                                               {"frames", seq.length()}});
}

inline FeatureSequence read_feature_file(const fs::path& csv) {
  const Json meta = read_json_file(feature_meta_path(csv));
  std::istringstream in(read_text_file(csv));
  std::string line;
  if (!std::getline(in, line)) throw IngestionError(csv.string() + ": empty feature file");
  const auto header = split(trim(line), ',');
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) != "dim_" + std::to_string(c)) {
      throw IngestionError(csv.string() + ": bad header column '" + header[c] + "'");
    }
  }
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) {
      throw IngestionError(csv.string() + ": row " + std::to_string(rows + 1) + " has " +
                           std::to_string(cells.size()) + " columns");
    }
    for (const auto& cell : cells) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw IngestionError(csv.string() + ": bad number '" + cell + "'");
      values.push_back(v);
    }
    ++rows;
  }
  FeatureSequence seq;
  seq.frames = Eigen::Map<MatrixD>(values.data(), rows, static_cast<Eigen::Index>(header.size()));
  seq.modality = modality_from_string(meta.at("modality").get<std::string>());
  seq.utterance_id = meta.at("utterance_id").get<std::string>();
  seq.frame_period = meta.at("frame_period").get<double>();
  seq.validate();
  return seq;
}

}  // namespace artvq::features
