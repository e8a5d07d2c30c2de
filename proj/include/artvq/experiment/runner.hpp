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

// Repeated train/evaluate protocol. Output tree:
//
//   <root>/<experiment>/run_record.json
//   <root>/<experiment>/summary.json, summary.csv
//   <root>/<experiment>/<rep>/features/    splits, guided PCA, normalizers
//   <root>/<experiment>/<rep>/checkpoints/ one VQ-VAE per modality
//   <root>/<experiment>/<rep>/reports/     ABX reports, pairwise matrices,
//                                          late-fusion curve
//
// Nothing written depends on the clock or the host, so two runs with the same
// inputs produce identical files.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <functional>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "artvq/abx/evaluate.hpp"
#include "artvq/experiment/manifest.hpp"
#include "artvq/experiment/splits.hpp"
#include "artvq/features/guided_pca.hpp"
#include "artvq/features/mel.hpp"
#include "artvq/features/normalizer.hpp"
#include "artvq/vqvae/train.hpp"

namespace artvq::experiment {

inline constexpr const char* kOutputRootVariable = "ARTVQ_OUTPUT_ROOT";

inline fs::path output_root() {
  const char* v = std::getenv(kOutputRootVariable);
  return (v && *v) ? fs::path(v) : fs::path("out");
}

inline std::string modality_key(Modality m) {
  switch (m) {
    case Modality::kArticulatory: return "articulatory";
    case Modality::kAcoustic: return "acoustic";
    case Modality::kFused: return "fused-early";
    case Modality::kArticulatoryInferred: return "articulatory-inferred";
  }
  return "unknown";
}

inline Modality modality_from_key(const std::string& s) {
  if (s == "fused-early") return Modality::kFused;
  return features::modality_from_string(s);
}

struct ExperimentConfig {
  std::string name = "experiment";
  RngSeed seed{0};
  int repetitions = 5;
  double test_fraction = 0.2;
  double validation_fraction = 0.2;
  std::vector<Modality> modalities{Modality::kArticulatory, Modality::kAcoustic, Modality::kFused};
  bool late_fusion = true;
  vqvae::TrainConfig vqvae;  // its seed is replaced per repetition and modality
  std::size_t triplets = 5000;
  double omega_min = 0.1;
  double omega_max = 10.0;
  int omega_points = 25;
  features::MelConfig mel;
  std::string speaker;  // empty: every utterance in the manifest
  int jobs = 1;

  bool uses(Modality m) const { return std::find(modalities.begin(), modalities.end(), m) != modalities.end(); }
  bool needs_articulatory() const { return uses(Modality::kArticulatory) || uses(Modality::kFused) || fuses(); }
  bool needs_acoustic() const { return uses(Modality::kAcoustic) || uses(Modality::kFused) || fuses(); }
  bool fuses() const { return late_fusion && uses(Modality::kArticulatory) && uses(Modality::kAcoustic); }

  void validate() const {
    if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
      throw ConfigurationError("experiment name must be a plain directory name");
    }
    if (repetitions < 1) throw ConfigurationError("repetitions must be >= 1");
    if (modalities.empty()) throw ConfigurationError("no modality selected");
    for (auto m : modalities) {
      if (m == Modality::kArticulatoryInferred) {
        throw ConfigurationError("inferred articulatory features enter an experiment as precomputed articulatory features");
      }
    }
    if (triplets < 1) throw ConfigurationError("triplet count must be >= 1");
    if (jobs < 1) throw ConfigurationError("jobs must be >= 1");
    SplitPlan{seed, test_fraction, validation_fraction, 0}.validate();
    vqvae.validate();
    mel.validate();
    abx::log_grid(omega_min, omega_max, omega_points);
  }

  std::vector<double> omega_grid() const { return abx::log_grid(omega_min, omega_max, omega_points); }

  Json to_json() const {
    Json mods = Json::array();
    for (auto m : modalities) mods.push_back(modality_key(m));
    return Json{{"name", name},
                {"seed", seed.value},
                {"repetitions", repetitions},
                {"test_fraction", test_fraction},
                {"validation_fraction", validation_fraction},
                {"modalities", mods},
                {"late_fusion", late_fusion},
                {"vqvae", vqvae::train_config_to_json(vqvae)},
                {"triplets", triplets},
                {"omega_min", omega_min},
                {"omega_max", omega_max},
                {"omega_points", omega_points},
                {"mel", {{"sample_rate", mel.sample_rate},
                         {"window", mel.window},
                         {"hop", mel.hop},
                         {"n_mels", mel.n_mels},
                         {"fft_size", mel.fft_size},
                         {"floor", mel.floor}}},
                {"speaker", speaker}};
  }

  // Missing keys keep their defaults. `jobs` is a property of the invocation,
  // not of the experiment, and is never read from a file.
  static ExperimentConfig from_json(const Json& j) {
    ExperimentConfig c;
    try {
      c.name = j.value("name", c.name);
      c.seed = RngSeed{j.value("seed", c.seed.value)};
      c.repetitions = j.value("repetitions", c.repetitions);
      c.test_fraction = j.value("test_fraction", c.test_fraction);
      c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
      if (j.contains("modalities")) {
        c.modalities.clear();
        for (const auto& m : j["modalities"]) c.modalities.push_back(modality_from_key(m.get<std::string>()));
      }
      c.late_fusion = j.value("late_fusion", c.late_fusion);
      if (j.contains("vqvae")) c.vqvae = vqvae::train_config_from_json(j["vqvae"]);
      c.triplets = j.value("triplets", c.triplets);
      c.omega_min = j.value("omega_min", c.omega_min);
      c.omega_max = j.value("omega_max", c.omega_max);
      c.omega_points = j.value("omega_points", c.omega_points);
      if (j.contains("mel")) {
        const auto& m = j["mel"];
        c.mel.sample_rate = m.value("sample_rate", c.mel.sample_rate);
        c.mel.window = m.value("window", c.mel.window);
        c.mel.hop = m.value("hop", c.mel.hop);
        c.mel.n_mels = m.value("n_mels", c.mel.n_mels);
        c.mel.fft_size = m.value("fft_size", c.mel.fft_size);
        c.mel.floor = m.value("floor", c.mel.floor);
      }
      c.speaker = j.value("speaker", c.speaker);
    } catch (const Json::exception& e) {
      throw ConfigurationError(std::string("malformed experiment config: ") + e.what());
    }
    return c;
  }
};

// ------------------------------------------------------------- corpus ----

// Everything read from disk once and shared read-only by the repetitions.
struct CorpusData {
  CorpusManifest manifest;
  abx::PhoneTable table;
  features::ArticulatoryLayout layout;
  std::map<std::string, std::vector<abx::PhoneSegment>> segments;
  std::map<std::string, features::FeatureSequence> acoustic;      // log-mel
  std::map<std::string, features::EmaRecording> ema;              // coil tracks
  std::map<std::string, features::FeatureSequence> articulatory;  // precomputed

  bool precomputed_articulatory() const { return !articulatory.empty(); }
};

inline features::FeatureSequence acoustic_features(const UtteranceRecord& u, const features::MelConfig& mel) {
  auto it = u.features.find(Modality::kAcoustic);
  features::FeatureSequence seq =
      it != u.features.end() ? features::read_feature_file(it->second) : features::compute_mel(features::read_wav(u.wav), mel, u.id);
  seq.utterance_id = u.id;
  seq.validate();
  return seq;
}

inline CorpusData load_corpus(const CorpusManifest& manifest, bool articulatory, bool acoustic,
                              const features::MelConfig& mel = {}) {
  CorpusData d;
  d.manifest = manifest;
  d.table = abx::read_phone_table(manifest.phone_table);
  d.layout = features::ArticulatoryLayout::by_name(manifest.layout);
  bool all_pre = true;
  for (const auto& u : manifest.utterances) {
    all_pre = all_pre && (u.features.count(Modality::kArticulatory) || u.features.count(Modality::kArticulatoryInferred));
  }
  for (const auto& u : manifest.utterances) {
    d.segments[u.id] = abx::read_segmentation(u.segmentation);
    if (acoustic) d.acoustic[u.id] = acoustic_features(u, mel);
    if (!articulatory) continue;
    if (all_pre) {
      auto it = u.features.find(Modality::kArticulatory);
      if (it == u.features.end()) it = u.features.find(Modality::kArticulatoryInferred);
      auto seq = features::read_feature_file(it->second);
      seq.utterance_id = u.id;
      seq.validate();
      d.articulatory[u.id] = std::move(seq);
    } else if (u.ema) {
      d.ema[u.id] = features::read_ema_csv(*u.ema, d.layout);
    } else {
      throw ConfigurationError("utterance '" + u.id + "' has no EMA track; articulatory modalities need one for every utterance");
    }
  }
  return d;
}

// Guided PCA fitted on the training utterances only, applied to every
// utterance. With precomputed articulatory features nothing is fitted.
struct ArticulatoryFeatures {
  std::optional<features::GuidedPcaModel> model;
  std::map<std::string, features::FeatureSequence> sequences;
};

inline ArticulatoryFeatures articulatory_features(const CorpusData& d, const std::vector<std::string>& train) {
  ArticulatoryFeatures out;
  if (d.precomputed_articulatory()) {
    out.sequences = d.articulatory;
    return out;
  }
  Eigen::Index rows = 0;
  for (const auto& id : train) rows += d.ema.at(id).coords.rows();
  MatrixD stacked(rows, d.layout.raw_dim());
  rows = 0;
  for (const auto& id : train) {
    const auto& c = d.ema.at(id).coords;
    stacked.middleRows(rows, c.rows()) = c;
    rows += c.rows();
  }
  out.model = features::fit_guided_pca(stacked, d.layout);
  for (const auto& [id, rec] : d.ema) out.sequences[id] = features::apply_guided_pca(*out.model, rec, id);
  return out;
}

// ---------------------------------------------------------- repetition ----

struct RepetitionResult {
  int repetition = 0;
  RngSeed seed{0};
  std::map<std::string, abx::AbxReport> reports;  // keyed by representation
  std::map<std::string, std::string> checkpoint_sha256;
  std::optional<std::string> error;
  std::string failed_stage;
};

inline fs::path repetition_dir(const fs::path& experiment_dir, int rep) { return experiment_dir / std::to_string(rep); }

inline std::string fusion_sweep_csv(const std::vector<abx::FusionPoint>& sweep) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string out = "omega,overall,manner_score,place_score\n";
  for (const auto& p : sweep) {
    out += format_double(p.omega) + "," + format_double(p.overall) + "," + opt(p.manner) + "," + opt(p.place) + "\n";
  }
  return out;
}

// Reported late-fusion weight: the sweep point with the best overall score
// (ties: smallest omega).
inline std::size_t best_sweep_point(const std::vector<abx::FusionPoint>& sweep) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < sweep.size(); ++k)
    if (sweep[k].overall > sweep[best].overall) best = k;
  return best;
}

// Seeds: split = derive(rep_seed, 1), triplets = derive(rep_seed, 2), the
// VQ-VAE of the i-th modality = derive(rep_seed, 10 + i).
inline RepetitionResult run_repetition(const CorpusData& d, const ExperimentConfig& cfg, int rep,
                                       const fs::path& experiment_dir,
                                       const std::function<void(const std::string&)>& log = {}) {
  RepetitionResult res;
  res.repetition = rep;
  const SplitPlan plan{cfg.seed, cfg.test_fraction, cfg.validation_fraction, rep};
  res.seed = plan.repetition_seed();
  const fs::path dir = repetition_dir(experiment_dir, rep);
  std::string stage = "split";
  auto say = [&](const std::string& s) {
    stage = s;
    if (log) log("[rep " + std::to_string(rep) + "] " + s);
  };
  try {
    say("split");
    const Splits splits = make_splits(d.manifest.ids(), plan);
    write_json_file(dir / "features" / "splits.json", splits_to_json(splits, plan));

    std::map<Modality, std::map<std::string, features::FeatureSequence>> seqs;
    if (cfg.needs_articulatory()) {
      say("articulatory features");
      auto art = articulatory_features(d, splits.train);
      if (art.model) write_json_file(dir / "features" / "guided_pca.json", features::guided_pca_to_json(*art.model));
      seqs[Modality::kArticulatory] = std::move(art.sequences);
    }
    if (cfg.needs_acoustic()) seqs[Modality::kAcoustic] = d.acoustic;
    if (cfg.uses(Modality::kFused)) {
      say("early fusion");
      for (const auto& u : d.manifest.utterances) {
        seqs[Modality::kFused][u.id] =
            features::concat_modalities(seqs[Modality::kArticulatory].at(u.id), seqs[Modality::kAcoustic].at(u.id));
      }
    }

    // One VCV list and one triplet set, shared by every representation.
    say("triplet sampling");
    std::vector<abx::VcvSegment> vcvs;
    for (const auto& id : splits.test) {
      Eigen::Index frames = -1;
      for (const auto& [m, by_id] : seqs) {
        const Eigen::Index n = by_id.at(id).length();
        frames = frames < 0 ? n : std::min(frames, n);
      }
      auto v = abx::extract_vcv(id, d.segments.at(id), d.table, features::kFramePeriod, frames);
      vcvs.insert(vcvs.end(), v.begin(), v.end());
    }
    abx::SamplerOptions so;
    so.n = cfg.triplets;
    so.seed = derive_seed(res.seed, 2);
    const abx::SampleResult sample = abx::sample_triplets(vcvs, so);
    write_json_file(dir / "reports" / "triplets.json", abx::sample_summary_json(sample));

    std::map<Modality, std::vector<abx::DistancePair>> distances;
    for (std::size_t i = 0; i < cfg.modalities.size(); ++i) {
      const Modality m = cfg.modalities[i];
      const std::string key = modality_key(m);
      const auto& by_id = seqs.at(m);
      say("train " + key);
      std::vector<features::FeatureSequence> train, val;
      for (const auto& id : splits.train) train.push_back(by_id.at(id));
      for (const auto& id : splits.validation) val.push_back(by_id.at(id));
      const features::Normalizer norm = features::fit_normalizer(train, "train");
      write_json_file(dir / "features" / (key + "_normalizer.json"), features::normalizer_to_json(norm));
      for (auto& s : train) s = norm.apply(s);
      for (auto& s : val) s = norm.apply(s);
      vqvae::TrainConfig tc = cfg.vqvae;
      tc.seed = derive_seed(res.seed, 10 + static_cast<std::uint64_t>(i));
      auto trained = vqvae::train_vqvae<double>(train, val, tc, norm);
      const fs::path ckpt = dir / "checkpoints" / (key + ".json");
      write_json_file(ckpt, vqvae::vqvae_to_json(trained.model, tc, trained.summary()));
      res.checkpoint_sha256[key] = sha256_file(ckpt);

      say("evaluate " + key);
      if (trained.model.normalizer.fit_split != "train") {
        throw EvaluationError("normalizer of " + key + " was not fitted on the training split");
      }
      abx::EmbeddingStore store;
      std::vector<features::FeatureSequence> test;
      for (const auto& id : splits.test) {
        store.add(id, vqvae::encode_sequence(trained.model, by_id.at(id)).embeddings);
        test.push_back(by_id.at(id));
      }
      distances[m] = abx::triplet_distances(vcvs, sample.triplets, store);
      auto report = abx::make_report(key, vcvs, sample, distances[m], d.table, so.seed);
      Json j = abx::abx_report_to_json(report);
      j["codebook_perplexity_test"] = vqvae::codebook_usage(trained.model, test).perplexity;
      write_json_file(dir / "reports" / (key + ".json"), j);
      write_text_file(dir / "reports" / (key + "_pairwise.csv"), abx::pairwise_csv(report.pairwise));
      res.reports[key] = std::move(report);
    }

    if (cfg.fuses()) {
      say("late fusion");
      const auto& ac = distances.at(Modality::kAcoustic);
      const auto& art = distances.at(Modality::kArticulatory);
      const auto sweep = abx::fusion_sweep(vcvs, sample.triplets, ac, art, d.table, cfg.omega_grid());
      const std::size_t best = best_sweep_point(sweep);
      auto report = abx::make_report("late-fusion", vcvs, sample, abx::late_fusion(ac, art, sweep[best].omega),
                                     d.table, so.seed);
      report.sweep = sweep;
      Json j = abx::abx_report_to_json(report);
      j["omega"] = sweep[best].omega;
      j["acoustic_dominance_threshold"] = abx::acoustic_dominance_threshold(ac, art);
      write_json_file(dir / "reports" / "late-fusion.json", j);
      write_text_file(dir / "reports" / "late-fusion_pairwise.csv", abx::pairwise_csv(report.pairwise));
      write_text_file(dir / "reports" / "fusion_sweep.csv", fusion_sweep_csv(sweep));
      res.reports["late-fusion"] = std::move(report);
    }
  } catch (const std::exception& e) {
    res.error = e.what();
    res.failed_stage = stage;
    try {
      write_json_file(dir / "error.json", Json{{"repetition", rep}, {"stage", stage}, {"message", e.what()}});
    } catch (const std::exception&) {
      // the summary still lists the repetition as failed: it has no reports
    }
    if (log) log("[rep " + std::to_string(rep) + "] failed during " + stage + ": " + e.what());
  }
  return res;
}

// ------------------------------------------------------------- summary ----

inline const std::vector<std::string>& summary_metrics() {
  static const std::vector<std::string> m{"overall", "manner_score", "place_score"};
  return m;
}

// Recomputes the experiment summary from the per-repetition report files:
// for each representation and metric, the arithmetic mean over the
// repetitions that produced a value, accumulated in repetition order.
inline Json summarize_experiment(const fs::path& experiment_dir, int repetitions) {
  std::map<std::string, std::map<std::string, std::vector<std::pair<int, double>>>> values;
  Json failed = Json::array();
  for (int rep = 0; rep < repetitions; ++rep) {
    const fs::path dir = repetition_dir(experiment_dir, rep);
    if (fs::exists(dir / "error.json")) {
      failed.push_back(read_json_file(dir / "error.json"));
      continue;
    }
    if (!fs::is_directory(dir / "reports")) {
      failed.push_back({{"repetition", rep}, {"stage", "unknown"}, {"message", "no reports were written"}});
      continue;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "reports")) {
      if (e.path().extension() == ".json" && e.path().filename() != "triplets.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const Json r = read_json_file(f);
      const std::string rep_name = r.at("representation").get<std::string>();
      for (const auto& m : summary_metrics()) {
        if (r.contains(m) && r[m].is_number()) values[rep_name][m].push_back({rep, r[m].get<double>()});
      }
    }
  }
  Json reps = Json::object();
  for (const auto& [name, metrics] : values) {
    Json e = Json::object();
    for (const auto& [metric, vs] : metrics) {
      double sum = 0.0;
      Json per = Json::object();
      for (const auto& [rep, v] : vs) {
        sum += v;
        per[std::to_string(rep)] = v;
      }
      e[metric] = {{"mean", sum / static_cast<double>(vs.size())}, {"repetitions", per}};
    }
    reps[name] = e;
  }
  return Json{{"representations", reps}, {"failed_repetitions", failed}, {"repetitions", repetitions}};
}

inline std::string summary_csv(const Json& summary) {
  std::string out = "representation,metric,repetition,value\n";
  for (const auto& [name, metrics] : summary.at("representations").items()) {
    for (const auto& [metric, e] : metrics.items()) {
      for (const auto& [rep, v] : e.at("repetitions").items()) {
        out += name + "," + metric + "," + rep + "," + format_double(v.get<double>()) + "\n";
      }
      out += name + "," + metric + ",mean," + format_double(e.at("mean").get<double>()) + "\n";
    }
  }
  return out;
}

// Markdown table of the mean scores, recomputed from the stored reports.
inline std::string render_summary_markdown(const Json& summary) {
  auto cell = [](const Json& metrics, const std::string& m) {
    if (!metrics.contains(m)) return std::string("-");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * metrics[m].at("mean").get<double>());
    return std::string(buf);
  };
  std::string out = "| representation | overall (%) | manner (%) | place (%) |\n|---|---|---|---|\n";
  for (const auto& [name, metrics] : summary.at("representations").items()) {
    out += "| " + name + " | " + cell(metrics, "overall") + " | " + cell(metrics, "manner_score") + " | " +
           cell(metrics, "place_score") + " |\n";
  }
  const auto& failed = summary.at("failed_repetitions");
  if (!failed.empty()) out += "\n" + std::to_string(failed.size()) + " repetition(s) failed.\n";
  return out;
}

inline void write_summary(const fs::path& experiment_dir, int repetitions) {
  const Json s = summarize_experiment(experiment_dir, repetitions);
  write_json_file(experiment_dir / "summary.json", s);
  write_text_file(experiment_dir / "summary.csv", summary_csv(s));
  write_text_file(experiment_dir / "summary.md", render_summary_markdown(s));
}

// ---------------------------------------------------------- experiment ----

struct ExperimentResult {
  fs::path directory;
  std::vector<RepetitionResult> repetitions;
  Json summary;

  std::size_t failures() const {
    return static_cast<std::size_t>(
        std::count_if(repetitions.begin(), repetitions.end(), [](const auto& r) { return r.error.has_value(); }));
  }
};

// `manifest_path` only feeds the run record. Repetitions run on `cfg.jobs`
// worker threads; each writes to its own directory, so the output does not
// depend on scheduling.
inline ExperimentResult run_experiment(const CorpusManifest& full_manifest, const ExperimentConfig& cfg,
                                       const fs::path& root, const fs::path& manifest_path = {},
                                       const std::function<void(const std::string&)>& log = {}) {
  cfg.validate();
  const CorpusManifest manifest = full_manifest.for_speaker(cfg.speaker);
  if (manifest.utterances.size() < kMinUtterances) {
    throw ConfigurationError("experiment needs at least " + std::to_string(kMinUtterances) + " utterances");
  }
  const CorpusData data = load_corpus(manifest, cfg.needs_articulatory(), cfg.needs_acoustic(), cfg.mel);

  ExperimentResult result;
  result.directory = root / cfg.name;
  result.repetitions.resize(static_cast<std::size_t>(cfg.repetitions));
  std::mutex log_mutex;
  auto safe_log = [&](const std::string& s) {
    if (!log) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    log(s);
  };
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int rep = next++; rep < cfg.repetitions; rep = next++) {
      result.repetitions[static_cast<std::size_t>(rep)] = run_repetition(data, cfg, rep, result.directory, safe_log);
    }
  };
  const int threads = std::min(cfg.jobs, cfg.repetitions);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Json reps = Json::array();
  for (const auto& r : result.repetitions) {
    reps.push_back({{"repetition", r.repetition},
                    {"seed", r.seed.value},
                    {"split_seed", derive_seed(r.seed, 1).value},
                    {"triplet_seed", derive_seed(r.seed, 2).value},
                    {"checkpoint_sha256", r.checkpoint_sha256},
                    {"status", r.error ? "failed" : "ok"}});
  }
  Json record{{"experiment", cfg.name},
              {"config", cfg.to_json()},
              {"manifest", manifest_path.empty() ? Json(nullptr) : Json(manifest_path.generic_string())},
              {"manifest_sha256", manifest_path.empty() ? Json(nullptr) : Json(sha256_file(manifest_path))},
              {"phone_table_sha256", sha256_file(manifest.phone_table)},
              {"corpus", manifest.corpus},
              {"utterances", manifest.utterances.size()},
              {"repetitions", reps}};
  write_json_file(result.directory / "run_record.json", record);
  write_summary(result.directory, cfg.repetitions);
  result.summary = read_json_file(result.directory / "summary.json");
  return result;
}

}  // namespace artvq::experiment
