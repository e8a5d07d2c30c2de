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
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "artvq/abx/dtw.hpp"
#include "artvq/abx/sampler.hpp"
#include "artvq/abx/segments.hpp"

namespace artvq::abx {

// Per-utterance embedding sequences ([T x D], one row per 10 ms frame).
class EmbeddingStore {
 public:
  void add(const std::string& utterance_id, MatrixD frames) { utts_[utterance_id] = std::move(frames); }
  bool contains(const std::string& utterance_id) const { return utts_.count(utterance_id) > 0; }
  std::size_t size() const { return utts_.size(); }

  MatrixD slice(const VcvSegment& v) const {
    auto it = utts_.find(v.utterance_id);
    if (it == utts_.end()) throw EvaluationError("no features for utterance '" + v.utterance_id + "'");
    if (v.first_frame < 0 || v.last_frame < v.first_frame || v.last_frame >= it->second.rows()) {
      throw EvaluationError("utterance '" + v.utterance_id + "': consonant frames [" +
                            std::to_string(v.first_frame) + ", " + std::to_string(v.last_frame) +
                            "] outside its " + std::to_string(it->second.rows()) + " frames");
    }
    return it->second.middleRows(v.first_frame, v.frame_count());
  }

 private:
  std::map<std::string, MatrixD> utts_;
};

struct DistancePair {
  double d_ax = 0.0;
  double d_bx = 0.0;
  bool success() const { return d_ax < d_bx; }  // ties fail
};

inline std::vector<DistancePair> triplet_distances(const std::vector<VcvSegment>& vcvs,
                                                   const std::vector<AbxTriplet>& triplets,
                                                   const EmbeddingStore& store) {
  std::vector<std::optional<MatrixD>> slices(vcvs.size());
  auto get = [&](std::size_t i) -> const MatrixD& {
    if (!slices[i]) slices[i] = store.slice(vcvs[i]);
    return *slices[i];
  };
  std::map<std::pair<std::size_t, std::size_t>, double> cache;
  auto dist = [&](std::size_t i, std::size_t x) {
    auto [it, fresh] = cache.try_emplace({i, x}, 0.0);
    if (fresh) it->second = dtw_cosine_distance(get(i), get(x));
    return it->second;
  };
  std::vector<DistancePair> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back({dist(t.a, t.x), dist(t.b, t.x)});
  return out;
}

struct CellScore {
  std::size_t successes = 0;
  std::size_t count = 0;
  double score() const { return count ? static_cast<double>(successes) / static_cast<double>(count) : 0.0; }
};

using PairKey = std::pair<std::string, std::string>;  // (c_A, c_B)

struct AbxScores {
  double overall = 0.0;
  std::size_t count = 0;
  std::map<PairKey, CellScore> pairwise;
};

// `keep` (when set) restricts the scoring to triplets for which it returns true.
inline AbxScores score_triplets(const std::vector<VcvSegment>& vcvs, const std::vector<AbxTriplet>& triplets,
                                const std::vector<DistancePair>& d,
                                const std::function<bool(const AbxTriplet&)>& keep = {}) {
  if (d.size() != triplets.size()) throw EvaluationError("ABX scoring: distance count does not match triplets");
  AbxScores s;
  std::size_t wins = 0;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto& t = triplets[i];
    if (keep && !keep(t)) continue;
    auto& cell = s.pairwise[{vcvs[t.a].consonant, vcvs[t.b].consonant}];
    ++cell.count;
    ++s.count;
    if (d[i].success()) {
      ++cell.successes;
      ++wins;
    }
  }
  s.overall = s.count ? static_cast<double>(wins) / static_cast<double>(s.count) : 0.0;
  return s;
}

struct GroupScore {
  std::string group;
  std::size_t consonants = 0;
  std::size_t triplets = 0;
  double score = 0.0;
};

struct GroupedScores {
  std::optional<double> manner;  // averaged over place groups
  std::optional<double> place;   // averaged over manner groups
  std::vector<GroupScore> within_place;
  std::vector<GroupScore> within_manner;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::optional<double> group_average(
    const std::vector<std::string>& groups, const std::function<std::vector<std::string>(const std::string&)>& members,
    const std::string& kind, const std::vector<VcvSegment>& vcvs, const std::vector<AbxTriplet>& triplets,
    const std::vector<DistancePair>& d, std::vector<GroupScore>& detail_out, std::vector<std::string>& warnings) {
  double total = 0.0;
  int used = 0;
  for (const auto& g : groups) {
    const auto cs = members(g);
    if (cs.size() < 2) {
      warnings.push_back(kind + " group '" + g + "' has " + std::to_string(cs.size()) + " consonant(s); skipped");
      continue;
    }
    auto in = [&](const std::string& c) { return std::find(cs.begin(), cs.end(), c) != cs.end(); };
    const auto s = score_triplets(vcvs, triplets, d, [&](const AbxTriplet& t) {
      return in(vcvs[t.a].consonant) && in(vcvs[t.b].consonant);
    });
    if (s.count == 0) {
      warnings.push_back(kind + " group '" + g + "' has no triplets; skipped");
      continue;
    }
    detail_out.push_back({g, cs.size(), s.count, s.overall});
    total += s.overall;
    ++used;
  }
  if (used == 0) return std::nullopt;
  return total / used;
}

}  // namespace detail

// Manner score: ABX restricted to triplets whose consonants share a place
// group, averaged over place groups. Place score: the same within manner
// groups.
inline GroupedScores grouped_scores(const std::vector<VcvSegment>& vcvs, const std::vector<AbxTriplet>& triplets,
                                    const std::vector<DistancePair>& d, const PhoneTable& table) {
  GroupedScores g;
  g.manner = detail::group_average(
      place_groups(), [&](const std::string& grp) { return table.consonants_in_place(grp); }, "place", vcvs,
      triplets, d, g.within_place, g.warnings);
  g.place = detail::group_average(
      manner_groups(), [&](const std::string& grp) { return table.consonants_in_manner(grp); }, "manner", vcvs,
      triplets, d, g.within_manner, g.warnings);
  return g;
}

// Merged distance: omega * acoustic + articulatory.
inline DistancePair late_fusion(const DistancePair& acoustic, const DistancePair& articulatory, double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw ParameterError("late fusion weight must be positive and finite, got " + format_double(omega));
  }
  return {omega * acoustic.d_ax + articulatory.d_ax, omega * acoustic.d_bx + articulatory.d_bx};
}

inline std::vector<DistancePair> late_fusion(const std::vector<DistancePair>& acoustic,
                                             const std::vector<DistancePair>& articulatory, double omega) {
  if (acoustic.size() != articulatory.size()) {
    throw EvaluationError("late fusion: distance lists come from different triplet sets");
  }
  std::vector<DistancePair> out;
  out.reserve(acoustic.size());
  for (std::size_t i = 0; i < acoustic.size(); ++i) out.push_back(late_fusion(acoustic[i], articulatory[i], omega));
  return out;
}

// `count` log-spaced points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0) || !(hi >= lo) || count < 1) throw ParameterError("log grid needs 0 < lo <= hi and count >= 1");
  std::vector<double> g;
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < count; ++i) g.push_back(count == 1 ? lo : std::pow(10.0, a + (b - a) * i / (count - 1)));
  return g;
}

inline std::vector<double> default_fusion_grid() { return log_grid(0.1, 10.0, 25); }

// Beyond this weight every triplet with a non-zero acoustic margin gets the
// acoustic-only decision. Only triplets whose acoustic and articulatory
// margins disagree in sign can change, at |m_art| / |m_ac|.
inline double acoustic_dominance_threshold(const std::vector<DistancePair>& acoustic,
                                           const std::vector<DistancePair>& articulatory) {
  if (acoustic.size() != articulatory.size()) {
    throw EvaluationError("late fusion: distance lists come from different triplet sets");
  }
  double t = 0.0;
  for (std::size_t i = 0; i < acoustic.size(); ++i) {
    const double m_ac = acoustic[i].d_bx - acoustic[i].d_ax;
    const double m_art = articulatory[i].d_bx - articulatory[i].d_ax;
    if ((m_ac > 0 && m_art < 0) || (m_ac < 0 && m_art > 0)) t = std::max(t, std::abs(m_art) / std::abs(m_ac));
  }
  return t;
}

struct FusionPoint {
  double omega = 0.0;
  double overall = 0.0;
  std::optional<double> manner;
  std::optional<double> place;
};

inline std::vector<FusionPoint> fusion_sweep(const std::vector<VcvSegment>& vcvs,
                                             const std::vector<AbxTriplet>& triplets,
                                             const std::vector<DistancePair>& acoustic,
                                             const std::vector<DistancePair>& articulatory, const PhoneTable& table,
                                             const std::vector<double>& grid = default_fusion_grid()) {
  std::vector<FusionPoint> out;
  for (double w : grid) {
    const auto fused = late_fusion(acoustic, articulatory, w);
    const auto g = grouped_scores(vcvs, triplets, fused, table);
    out.push_back({w, score_triplets(vcvs, triplets, fused).overall, g.manner, g.place});
  }
  return out;
}

// ------------------------------------------------------------ reports ----

struct AbxReport {
  std::string representation;  // e.g. "acoustic", "late-fusion"
  double overall = 0.0;
  std::map<PairKey, CellScore> pairwise;
  GroupedScores grouped;
  std::size_t triplet_count = 0;
  std::size_t requested = 0;
  std::size_t skipped = 0;
  std::vector<std::string> excluded_consonants;
  std::uint64_t seed = 0;
  std::vector<FusionPoint> sweep;  // only for fused reports
};

inline AbxReport make_report(const std::string& representation, const std::vector<VcvSegment>& vcvs,
                             const SampleResult& sample, const std::vector<DistancePair>& d,
                             const PhoneTable& table, RngSeed seed) {
  AbxReport r;
  r.representation = representation;
  const auto s = score_triplets(vcvs, sample.triplets, d);
  r.overall = s.overall;
  r.pairwise = s.pairwise;
  r.grouped = grouped_scores(vcvs, sample.triplets, d, table);
  r.triplet_count = s.count;
  r.requested = sample.requested;
  r.skipped = sample.skipped;
  r.excluded_consonants = sample.excluded_consonants;
  r.seed = seed.value;
  return r;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json abx_report_to_json(const AbxReport& r) {
  Json pairs = Json::array();
  for (const auto& [k, c] : r.pairwise) {
    pairs.push_back({{"a", k.first}, {"b", k.second}, {"score", c.score()}, {"count", c.count}});
  }
  auto groups = [](const std::vector<GroupScore>& gs) {
    Json a = Json::array();
    for (const auto& g : gs) {
      a.push_back({{"group", g.group}, {"consonants", g.consonants}, {"triplets", g.triplets}, {"score", g.score}});
    }
    return a;
  };
  Json j{{"representation", r.representation},
         {"overall", r.overall},
         {"manner_score", optional_json(r.grouped.manner)},
         {"place_score", optional_json(r.grouped.place)},
         {"within_place_groups", groups(r.grouped.within_place)},
         {"within_manner_groups", groups(r.grouped.within_manner)},
         {"warnings", r.grouped.warnings},
         {"triplets", r.triplet_count},
         {"requested_triplets", r.requested},
         {"skipped_triplets", r.skipped},
         {"excluded_consonants", r.excluded_consonants},
         {"seed", r.seed},
         {"pairwise", pairs}};
  if (!r.sweep.empty()) {
    Json sw = Json::array();
    for (const auto& p : r.sweep) {
      sw.push_back({{"omega", p.omega},
                    {"overall", p.overall},
                    {"manner_score", optional_json(p.manner)},
                    {"place_score", optional_json(p.place)}});
    }
    j["fusion_sweep"] = sw;
  }
  return j;
}

// Pairwise matrix, rows c_A and columns c_B; the diagonal and untested cells
// are empty.
inline std::string pairwise_csv(const std::map<PairKey, CellScore>& pairwise) {
  std::vector<std::string> cs;
  for (const auto& [k, c] : pairwise) {
    cs.push_back(k.first);
    cs.push_back(k.second);
  }
  std::sort(cs.begin(), cs.end());
  cs.erase(std::unique(cs.begin(), cs.end()), cs.end());
  std::string out = "a\\b";
  for (const auto& c : cs) out += "," + c;
  out += "\n";
  for (const auto& a : cs) {
    out += a;
    for (const auto& b : cs) {
      out += ",";
      auto it = pairwise.find({a, b});
      if (a != b && it != pairwise.end() && it->second.count > 0) out += format_double(it->second.score());
    }
    out += "\n";
  }
  return out;
}

}  // namespace artvq::abx
