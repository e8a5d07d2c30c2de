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
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "artvq/core/io.hpp"
#include "artvq/features/sequence.hpp"

namespace artvq::abx {

struct PhoneSegment {
  std::string label;
  double start = 0.0;  // seconds
  double end = 0.0;
};

// Lines of `start_seconds end_seconds phone_label`. Blank lines and lines
// starting with '#' are ignored.
inline std::vector<PhoneSegment> parse_segmentation(const std::string& text,
                                                    const std::string& source = "segmentation") {
  std::vector<PhoneSegment> segs;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    PhoneSegment s;
    if (!(ls >> s.start >> s.end >> s.label)) {
      throw IngestionError(source + ":" + std::to_string(lineno) + ": expected 'start end label'");
    }
    if (!(s.end > s.start)) {
      throw IngestionError(source + ":" + std::to_string(lineno) + ": segment end must exceed start");
    }
    if (!segs.empty() && s.start < segs.back().end - 1e-9) {
      throw IngestionError(source + ":" + std::to_string(lineno) +
                           ": segments must be time-ordered and non-overlapping");
    }
    segs.push_back(std::move(s));
  }
  return segs;
}

inline std::vector<PhoneSegment> read_segmentation(const fs::path& path) {
  return parse_segmentation(read_text_file(path), path.string());
}

inline std::string format_segmentation(const std::vector<PhoneSegment>& segs) {
  std::string out;
  for (const auto& s : segs) out += format_double(s.start) + " " + format_double(s.end) + " " + s.label + "\n";
  return out;
}

enum class PhoneClass { kVowel, kConsonant, kOther };

inline std::string to_string(PhoneClass c) {
  switch (c) {
    case PhoneClass::kVowel: return "vowel";
    case PhoneClass::kConsonant: return "consonant";
    case PhoneClass::kOther: return "other";
  }
  return "other";
}

inline const std::vector<std::string>& place_groups() {
  static const std::vector<std::string> g{"labiodental", "palatal", "dorsal"};
  return g;
}

inline const std::vector<std::string>& manner_groups() {
  static const std::vector<std::string> g{"voiced_stop", "voiceless_stop", "voiced_fricative",
                                          "voiceless_fricative", "sonorant"};
  return g;
}

struct PhoneInfo {
  PhoneClass cls = PhoneClass::kOther;
  std::string place;   // empty unless a consonant
  std::string manner;
};

// Per-corpus phone classification. "other" marks pauses and similar labels
// that break a VCV pattern without being an error.
struct PhoneTable {
  std::map<std::string, PhoneInfo> phones;

  const PhoneInfo& at(const std::string& label) const {
    auto it = phones.find(label);
    if (it == phones.end()) throw IngestionError("unknown phone label '" + label + "'");
    return it->second;
  }
  bool contains(const std::string& label) const { return phones.count(label) > 0; }

  std::vector<std::string> consonants_in_place(const std::string& group) const {
    std::vector<std::string> out;
    for (const auto& [p, info] : phones)
      if (info.cls == PhoneClass::kConsonant && info.place == group) out.push_back(p);
    return out;
  }
  std::vector<std::string> consonants_in_manner(const std::string& group) const {
    std::vector<std::string> out;
    for (const auto& [p, info] : phones)
      if (info.cls == PhoneClass::kConsonant && info.manner == group) out.push_back(p);
    return out;
  }
};

// CSV `phone,class,place_group,manner_group` with a header row.
inline PhoneTable parse_phone_table(const std::string& text, const std::string& source = "phone table") {
  PhoneTable t;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto f = split(line, ',');
    for (auto& s : f) s = trim(s);
    if (header) {
      header = false;
      if (f.size() < 2 || f[0] != "phone" || f[1] != "class") {
        throw IngestionError(source + ": header must be 'phone,class,place_group,manner_group'");
      }
      continue;
    }
    f.resize(4);
    const std::string where = source + ":" + std::to_string(lineno);
    if (f[0].empty()) throw IngestionError(where + ": empty phone label");
    PhoneInfo info;
    if (f[1] == "vowel") {
      info.cls = PhoneClass::kVowel;
    } else if (f[1] == "consonant") {
      info.cls = PhoneClass::kConsonant;
      info.place = f[2];
      info.manner = f[3];
      if (!info.place.empty() &&
          std::find(place_groups().begin(), place_groups().end(), info.place) == place_groups().end()) {
        throw IngestionError(where + ": unknown place group '" + info.place + "'");
      }
      if (!info.manner.empty() && std::find(manner_groups().begin(), manner_groups().end(),
                                            info.manner) == manner_groups().end()) {
        throw IngestionError(where + ": unknown manner group '" + info.manner + "'");
      }
    } else if (f[1] == "other") {
      info.cls = PhoneClass::kOther;
    } else {
      throw IngestionError(where + ": class must be vowel, consonant or other, got '" + f[1] + "'");
    }
    if (!t.phones.emplace(f[0], info).second) throw IngestionError(where + ": duplicate phone '" + f[0] + "'");
  }
  return t;
}

inline PhoneTable read_phone_table(const fs::path& path) {
  return parse_phone_table(read_text_file(path), path.string());
}

inline std::string format_phone_table(const PhoneTable& t) {
  std::string out = "phone,class,place_group,manner_group\n";
  for (const auto& [p, info] : t.phones) out += p + "," + to_string(info.cls) + "," + info.place + "," + info.manner + "\n";
  return out;
}

struct VcvSegment {
  std::string utterance_id;
  std::string left_vowel;
  std::string consonant;
  std::string right_vowel;
  Eigen::Index first_frame = 0;  // inclusive
  Eigen::Index last_frame = 0;   // inclusive

  Eigen::Index frame_count() const { return last_frame - first_frame + 1; }
  std::string context() const { return left_vowel + consonant + right_vowel; }
  bool same_occurrence(const VcvSegment& o) const {
    return utterance_id == o.utterance_id && first_frame == o.first_frame;
  }
};

// Frames whose centres (i + 0.5) * period fall in [start, end).
inline std::pair<Eigen::Index, Eigen::Index> frames_in_interval(double start, double end, double period) {
  constexpr double kSlack = 1e-9;
  const auto first = static_cast<Eigen::Index>(std::ceil(start / period - 0.5 - kSlack));
  const auto stop = static_cast<Eigen::Index>(std::ceil(end / period - 0.5 - kSlack));
  return {std::max<Eigen::Index>(first, 0), stop - 1};
}

// Every vowel, consonant, vowel run of consecutive segments yields one VCV;
// neighbouring VCVs may share a vowel. `num_frames` (when >= 0) clips the
// consonant range to the utterance; VCVs left with no frames are dropped.
inline std::vector<VcvSegment> extract_vcv(const std::string& utterance_id,
                                           const std::vector<PhoneSegment>& segs,
                                           const PhoneTable& table,
                                           double frame_period = features::kFramePeriod,
                                           Eigen::Index num_frames = -1) {
  std::vector<PhoneClass> cls;
  cls.reserve(segs.size());
  for (const auto& s : segs) {
    if (!table.contains(s.label)) {
      throw IngestionError("utterance '" + utterance_id + "': unknown phone label '" + s.label + "'");
    }
    cls.push_back(table.at(s.label).cls);
  }
  std::vector<VcvSegment> out;
  for (std::size_t i = 1; i + 1 < segs.size(); ++i) {
    if (cls[i - 1] != PhoneClass::kVowel || cls[i] != PhoneClass::kConsonant ||
        cls[i + 1] != PhoneClass::kVowel) {
      continue;
    }
    auto [first, last] = frames_in_interval(segs[i].start, segs[i].end, frame_period);
    if (num_frames >= 0) last = std::min(last, num_frames - 1);
    if (last < first) continue;
    out.push_back({utterance_id, segs[i - 1].label, segs[i].label, segs[i + 1].label, first, last});
  }
  return out;
}

}  // namespace artvq::abx
