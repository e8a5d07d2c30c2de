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

// Corpus manifest: one JSON document listing the utterances of a corpus.
//
//   {
//     "corpus": "mocha-fsew0",
//     "layout": "mocha",
//     "phone_table": "phones.csv",
//     "utterances": [
//       {"id": "fsew0_001", "speaker": "fsew0", "wav": "wav/fsew0_001.wav",
//        "ema": "ema/fsew0_001.csv", "segmentation": "lab/fsew0_001.lab"},
//       ...
//     ]
//   }
//
// Relative paths resolve against the manifest's directory. "ema" may be
// omitted for audio-only speakers. An optional "features" object per
// utterance maps a modality name to a precomputed feature file, which is
// then used instead of extraction.

#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "artvq/core/io.hpp"
#include "artvq/features/ema.hpp"
#include "artvq/features/sequence.hpp"

namespace artvq::experiment {

using features::Modality;

struct UtteranceRecord {
  std::string id;
  std::string speaker;
  fs::path wav;
  std::optional<fs::path> ema;
  fs::path segmentation;
  std::map<Modality, fs::path> features;
};

struct CorpusManifest {
  std::string corpus;
  std::string layout = "mocha";
  fs::path phone_table;
  std::vector<UtteranceRecord> utterances;

  const UtteranceRecord& at(const std::string& id) const {
    for (const auto& u : utterances)
      if (u.id == id) return u;
    throw IngestionError("manifest has no utterance '" + id + "'");
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& u : utterances) out.push_back(u.id);
    return out;
  }

  // Keeps only the utterances of one speaker; an empty name keeps everything.
  CorpusManifest for_speaker(const std::string& speaker) const {
    if (speaker.empty()) return *this;
    CorpusManifest m = *this;
    m.utterances.clear();
    for (const auto& u : utterances)
      if (u.speaker == speaker) m.utterances.push_back(u);
    if (m.utterances.empty()) throw ConfigurationError("manifest has no utterances of speaker '" + speaker + "'");
    return m;
  }

  bool all_have_ema() const {
    for (const auto& u : utterances)
      if (!u.ema && !u.features.count(Modality::kArticulatory)) return false;
    return true;
  }
};

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

inline void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw IngestionError(what + " not found: " + p.string());
}

}  // namespace detail

// `check_files` verifies that every referenced file exists.
inline CorpusManifest parse_manifest(const Json& j, const fs::path& base_dir, bool check_files = true) {
  CorpusManifest m;
  try {
    m.corpus = j.at("corpus").get<std::string>();
    m.layout = j.value("layout", m.layout);
    m.phone_table = detail::resolve(base_dir, j.at("phone_table").get<std::string>());
    std::set<std::string> seen;
    for (const auto& u : j.at("utterances")) {
      UtteranceRecord r;
      r.id = u.at("id").get<std::string>();
      if (r.id.empty()) throw IngestionError("manifest: empty utterance id");
      if (!seen.insert(r.id).second) throw IngestionError("manifest: duplicate utterance id '" + r.id + "'");
      r.speaker = u.value("speaker", std::string());
      r.wav = detail::resolve(base_dir, u.at("wav").get<std::string>());
      if (u.contains("ema") && !u["ema"].is_null()) r.ema = detail::resolve(base_dir, u["ema"].get<std::string>());
      r.segmentation = detail::resolve(base_dir, u.at("segmentation").get<std::string>());
      if (u.contains("features")) {
        for (const auto& [k, v] : u["features"].items()) {
          r.features[features::modality_from_string(k)] = detail::resolve(base_dir, v.get<std::string>());
        }
      }
      m.utterances.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw IngestionError(std::string("malformed manifest: ") + e.what());
  }
  if (m.utterances.empty()) throw IngestionError("manifest lists no utterances");
  features::ArticulatoryLayout::by_name(m.layout);
  if (check_files) {
    detail::require_file(m.phone_table, "phone table");
    for (const auto& u : m.utterances) {
      detail::require_file(u.wav, "wav of '" + u.id + "'");
      detail::require_file(u.segmentation, "segmentation of '" + u.id + "'");
      if (u.ema) detail::require_file(*u.ema, "EMA of '" + u.id + "'");
      for (const auto& [mod, p] : u.features) detail::require_file(p, "features of '" + u.id + "'");
    }
  }
  return m;
}

inline CorpusManifest load_manifest(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IngestionError("manifest not found: " + path.string());
  return parse_manifest(read_json_file(path), path.parent_path());
}

// Paths are written relative to `base_dir` when they lie below it.
inline Json manifest_to_json(const CorpusManifest& m, const fs::path& base_dir) {
  auto rel = [&](const fs::path& p) {
    const fs::path r = p.lexically_relative(base_dir);
    return (r.empty() || *r.begin() == "..") ? p.generic_string() : r.generic_string();
  };
  Json utts = Json::array();
  for (const auto& u : m.utterances) {
    Json e{{"id", u.id}, {"speaker", u.speaker}, {"wav", rel(u.wav)}, {"segmentation", rel(u.segmentation)}};
    if (u.ema) e["ema"] = rel(*u.ema);
    if (!u.features.empty()) {
      Json f = Json::object();
      for (const auto& [mod, p] : u.features) f[features::to_string(mod)] = rel(p);
      e["features"] = f;
    }
    utts.push_back(e);
  }
  return Json{{"corpus", m.corpus}, {"layout", m.layout}, {"phone_table", rel(m.phone_table)}, {"utterances", utts}};
}

}  // namespace artvq::experiment
