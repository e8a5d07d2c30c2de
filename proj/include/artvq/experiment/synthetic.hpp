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

// Synthetic VCV corpus. Consonants sit on a place x manner grid; the place
// of a consonant is encoded (linearly) only in the articulatory stream and
// its manner only in the acoustic stream. Vowels are visible in both.
//
// The latent streams can be used directly as feature sequences, or rendered
// to EMA coil tracks and a waveform (one sinusoid per mel band, whose log
// power follows the acoustic stream) together with segmentations, a phone
// table and a manifest.

#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <numbers>
#include <string>
#include <vector>

#include "artvq/abx/segments.hpp"
#include "artvq/experiment/manifest.hpp"
#include "artvq/features/ema.hpp"
#include "artvq/features/mel.hpp"
#include "artvq/features/wav.hpp"

namespace artvq::experiment {

struct SyntheticCorpusConfig {
  int utterances = 60;
  int vcvs_per_utterance = 5;
  std::string speaker = "synth";
  std::string layout = "mocha";
  int acoustic_dim = 40;
  double separation = 1.0;    // norm of each factor-level direction
  double noise = 0.3;         // per-frame noise, total over the stream's dims
  int min_phone_frames = 6;
  int max_phone_frames = 10;
  int silence_frames = 5;
  double smoothing = 0.6;     // first-order approach rate towards each target
  RngSeed seed{0};

  void validate() const {
    if (utterances < 1 || vcvs_per_utterance < 1) throw ConfigurationError("synthetic corpus: empty corpus");
    if (min_phone_frames < 1 || max_phone_frames < min_phone_frames || silence_frames < 0) {
      throw ConfigurationError("synthetic corpus: bad phone durations");
    }
    if (!(smoothing > 0 && smoothing <= 1)) throw ConfigurationError("synthetic corpus: smoothing in (0, 1]");
    if (acoustic_dim < 1 || !(separation > 0) || !(noise >= 0)) {
      throw ConfigurationError("synthetic corpus: bad stream parameters");
    }
  }

  Json to_json() const {
    return Json{{"utterances", utterances},       {"vcvs_per_utterance", vcvs_per_utterance},
                {"speaker", speaker},             {"layout", layout},
                {"acoustic_dim", acoustic_dim},   {"separation", separation},
                {"noise", noise},                 {"min_phone_frames", min_phone_frames},
                {"max_phone_frames", max_phone_frames}, {"silence_frames", silence_frames},
                {"smoothing", smoothing},         {"seed", seed.value}};
  }
};

struct SyntheticConsonant {
  std::string label;
  std::string place;
  std::string manner;
};

// 3 places x 5 manners.
inline const std::vector<SyntheticConsonant>& synthetic_consonants() {
  static const std::vector<SyntheticConsonant> c{
      {"b", "labiodental", "voiced_stop"},   {"p", "labiodental", "voiceless_stop"},
      {"v", "labiodental", "voiced_fricative"}, {"f", "labiodental", "voiceless_fricative"},
      {"m", "labiodental", "sonorant"},      {"dj", "palatal", "voiced_stop"},
      {"tj", "palatal", "voiceless_stop"},   {"zh", "palatal", "voiced_fricative"},
      {"sh", "palatal", "voiceless_fricative"}, {"y", "palatal", "sonorant"},
      {"g", "dorsal", "voiced_stop"},        {"k", "dorsal", "voiceless_stop"},
      {"gh", "dorsal", "voiced_fricative"},  {"x", "dorsal", "voiceless_fricative"},
      {"ng", "dorsal", "sonorant"}};
  return c;
}

inline const std::vector<std::string>& synthetic_vowels() {
  static const std::vector<std::string> v{"a", "i", "u"};
  return v;
}

inline abx::PhoneTable synthetic_phone_table() {
  abx::PhoneTable t;
  for (const auto& v : synthetic_vowels()) t.phones[v] = {abx::PhoneClass::kVowel, "", ""};
  for (const auto& c : synthetic_consonants()) t.phones[c.label] = {abx::PhoneClass::kConsonant, c.place, c.manner};
  t.phones["sil"] = {abx::PhoneClass::kOther, "", ""};
  return t;
}

struct SyntheticUtterance {
  std::string id;
  std::vector<abx::PhoneSegment> segments;
  features::FeatureSequence articulatory;  // latent articulatory parameters
  features::FeatureSequence acoustic;      // log band powers
};

struct SyntheticCorpus {
  SyntheticCorpusConfig config;
  abx::PhoneTable table;
  std::vector<SyntheticUtterance> utterances;
};

namespace detail {

inline VectorD random_direction(Eigen::Index dim, double norm, Rng& rng) {
  VectorD v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = rng.normal();
  return norm * v / v.norm();
}

}  // namespace detail

inline SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  cfg.validate();
  const auto layout = features::ArticulatoryLayout::by_name(cfg.layout);
  const Eigen::Index art_dim = layout.total_components();
  const Eigen::Index ac_dim = cfg.acoustic_dim;
  Rng code_rng(derive_seed(cfg.seed, 1));

  std::map<std::string, VectorD> art_target, ac_target;
  for (const auto& p : abx::place_groups()) art_target[p] = detail::random_direction(art_dim, cfg.separation, code_rng);
  for (const auto& m : abx::manner_groups()) ac_target[m] = detail::random_direction(ac_dim, cfg.separation, code_rng);
  std::map<std::string, std::pair<VectorD, VectorD>> vowel_target;
  for (const auto& v : synthetic_vowels()) {
    VectorD a = detail::random_direction(art_dim, cfg.separation, code_rng);
    vowel_target[v] = {a, detail::random_direction(ac_dim, cfg.separation, code_rng)};
  }

  SyntheticCorpus corpus;
  corpus.config = cfg;
  corpus.table = synthetic_phone_table();
  Rng rng(derive_seed(cfg.seed, 2));
  const auto& cons = synthetic_consonants();
  std::vector<std::size_t> deck;
  const double art_noise = cfg.noise / std::sqrt(static_cast<double>(art_dim));
  const double ac_noise = cfg.noise / std::sqrt(static_cast<double>(ac_dim));
  const auto pad = static_cast<int>(std::to_string(cfg.utterances - 1).size());

  for (int u = 0; u < cfg.utterances; ++u) {
    SyntheticUtterance utt;
    std::string num = std::to_string(u);
    utt.id = cfg.speaker + "_" + std::string(static_cast<std::size_t>(std::max(0, pad - static_cast<int>(num.size()))), '0') + num;

    // Phone sequence: sil V C V ... C V sil, consonants dealt from a shuffled
    // deck so every consonant occurs equally often across the corpus.
    std::vector<std::string> phones{"sil"};
    auto vowel = [&] { return synthetic_vowels()[rng.below(synthetic_vowels().size())]; };
    phones.push_back(vowel());
    for (int k = 0; k < cfg.vcvs_per_utterance; ++k) {
      if (deck.empty()) {
        deck.resize(cons.size());
        std::iota(deck.begin(), deck.end(), std::size_t{0});
        rng.shuffle(deck);
      }
      phones.push_back(cons[deck.back()].label);
      deck.pop_back();
      phones.push_back(vowel());
    }
    phones.push_back("sil");

    std::vector<VectorD> art_t, ac_t;
    int frame = 0;
    for (std::size_t i = 0; i < phones.size(); ++i) {
      const std::string& p = phones[i];
      const int len = p == "sil" ? cfg.silence_frames
                                 : cfg.min_phone_frames +
                                       static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                           cfg.max_phone_frames - cfg.min_phone_frames + 1)));
      if (len == 0) continue;
      VectorD a = VectorD::Zero(art_dim), c = VectorD::Zero(ac_dim);
      const auto& info = corpus.table.at(p);
      if (info.cls == abx::PhoneClass::kVowel) {
        a = vowel_target[p].first;
        c = vowel_target[p].second;
      } else if (info.cls == abx::PhoneClass::kConsonant) {
        a = art_target[info.place];
        c = ac_target[info.manner];
      }
      utt.segments.push_back({p, frame * features::kFramePeriod, (frame + len) * features::kFramePeriod});
      for (int t = 0; t < len; ++t) {
        art_t.push_back(a);
        ac_t.push_back(c);
      }
      frame += len;
    }

    const auto n = static_cast<Eigen::Index>(art_t.size());
    MatrixD art(n, art_dim), ac(n, ac_dim);
    VectorD sa = art_t.front(), sc = ac_t.front();
    for (Eigen::Index t = 0; t < n; ++t) {
      sa += cfg.smoothing * (art_t[static_cast<std::size_t>(t)] - sa);
      sc += cfg.smoothing * (ac_t[static_cast<std::size_t>(t)] - sc);
      art.row(t) = sa.transpose();
      ac.row(t) = sc.transpose();
      for (Eigen::Index d = 0; d < art_dim; ++d) art(t, d) += rng.normal(0.0, art_noise);
      for (Eigen::Index d = 0; d < ac_dim; ++d) ac(t, d) += rng.normal(0.0, ac_noise);
    }
    utt.articulatory = {art, features::kFramePeriod, Modality::kArticulatory, utt.id};
    utt.acoustic = {ac, features::kFramePeriod, Modality::kAcoustic, utt.id};
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

// ------------------------------------------------------------ rendering ----

// Fixed linear map from latent articulatory parameters to coil coordinates
// (mm): each role's coils move in a role-specific subspace, and every coil
// except the velum also follows the jaw.
struct EmaRenderer {
  features::ArticulatoryLayout layout;
  VectorD rest;   // [raw]
  MatrixD map;    // [raw x latent]

  EmaRenderer(const features::ArticulatoryLayout& l, RngSeed seed) : layout(l) {
    Rng rng(seed);
    const Eigen::Index raw = layout.raw_dim();
    rest.resize(raw);
    for (Eigen::Index i = 0; i < raw; ++i) rest[i] = rng.uniform(-30.0, 30.0);
    map = MatrixD::Zero(raw, layout.total_components());
    Eigen::Index latent = 0;
    for (auto role : features::kRoleOrder) {
      if (!layout.has_role(role)) continue;
      const int k = features::role_components(role);
      for (int col : layout.role_columns(role)) {
        for (int j = 0; j < k; ++j) map(col, latent + j) = rng.normal(0.0, 3.0);
        if (role != features::ArticulatorRole::kJaw && role != features::ArticulatorRole::kVelum) {
          map(col, 0) = rng.normal(0.0, 1.5);
        }
      }
      latent += k;
    }
  }

  MatrixD render(const MatrixD& latent) const { return (latent * map.transpose()).rowwise() + rest.transpose(); }
};

// One sinusoid at the centre of each mel band; its power tracks exp(level),
// so the band's log-mel energy follows the latent level up to a constant and
// the leakage of neighbouring bands. Mel frame t is centred on latent frame t.
inline features::Waveform render_waveform(const MatrixD& log_power, const features::MelConfig& mel, Rng& rng) {
  if (log_power.cols() != mel.n_mels) {
    throw DimensionError("render_waveform: " + std::to_string(log_power.cols()) + " levels for " +
                         std::to_string(mel.n_mels) + " mel bands");
  }
  const auto edges = features::mel_band_edges(mel);
  const Eigen::Index frames = log_power.rows();
  const int hop = mel.hop_samples(), win = mel.window_samples();
  const std::size_t n = static_cast<std::size_t>(win + hop * (frames - 1));
  features::Waveform w;
  w.sample_rate = mel.sample_rate;
  w.samples.assign(n, 0.0);
  const MatrixD amp = 0.01 * (0.5 * log_power.array()).exp();
  for (int b = 0; b < mel.n_mels; ++b) {
    const double omega = 2.0 * std::numbers::pi * edges[static_cast<std::size_t>(b + 1)] / mel.sample_rate;
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    for (std::size_t s = 0; s < n; ++s) {
      const double pos = std::clamp((static_cast<double>(s) - 0.5 * win) / hop, 0.0, static_cast<double>(frames - 1));
      const auto f0 = static_cast<Eigen::Index>(pos);
      const Eigen::Index f1 = std::min(f0 + 1, frames - 1);
      const double frac = pos - static_cast<double>(f0);
      const double a = (1.0 - frac) * amp(f0, b) + frac * amp(f1, b);
      w.samples[s] += a * std::sin(omega * static_cast<double>(s) + phase);
    }
  }
  for (auto& s : w.samples) s = std::clamp(s + rng.normal(0.0, 1e-4), -1.0, 32767.0 / 32768.0);
  return w;
}

// Writes wav/, ema/, lab/, phones.csv and manifest.json under `dir`.
// Returns the manifest path.
inline fs::path write_synthetic_corpus(const SyntheticCorpus& corpus, const fs::path& dir,
                                       const features::MelConfig& mel = {}) {
  const auto layout = features::ArticulatoryLayout::by_name(corpus.config.layout);
  const EmaRenderer ema(layout, derive_seed(corpus.config.seed, 3));
  Rng rng(derive_seed(corpus.config.seed, 4));
  CorpusManifest m;
  m.corpus = "synthetic-" + corpus.config.speaker;
  m.layout = layout.name;
  m.phone_table = dir / "phones.csv";
  write_text_file(m.phone_table, abx::format_phone_table(corpus.table));
  for (const auto& u : corpus.utterances) {
    UtteranceRecord r;
    r.id = u.id;
    r.speaker = corpus.config.speaker;
    r.wav = dir / "wav" / (u.id + ".wav");
    r.ema = dir / "ema" / (u.id + ".csv");
    r.segmentation = dir / "lab" / (u.id + ".lab");
    features::write_wav(r.wav, render_waveform(u.acoustic.frames, mel, rng));
    features::write_ema_csv(*r.ema, layout, ema.render(u.articulatory.frames));
    write_text_file(r.segmentation, abx::format_segmentation(u.segments));
    m.utterances.push_back(std::move(r));
  }
  const fs::path manifest = dir / "manifest.json";
  Json j = manifest_to_json(m, dir);
  j["generator"] = corpus.config.to_json();
  write_json_file(manifest, j);
  return manifest;
}

}  // namespace artvq::experiment
