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

// Command implementations behind the artvq tool. Each validates all of its
// inputs before writing anything, and every output comes with a run record
// (`<output>.run.json`, or `run_record.json` inside an output directory)
// holding the command, its options, seeds and input/output hashes.
//
// Feature directories, as written by `features extract`:
//
//   <dir>/features.json           manifest path, modalities, split seed
//   <dir>/splits.json             train / validation / test utterance ids
//   <dir>/guided_pca.json         when articulatory features were extracted
//   <dir>/<modality>/<id>.csv     one feature file (+ .meta.json) per utterance

#pragma once

#include <iostream>
#include <string>
#include <vector>

#include "artvq/experiment/runner.hpp"
#include "artvq/experiment/synthetic.hpp"
#include "artvq/inversion/inversion.hpp"

namespace artvq::experiment {

inline constexpr const char* kToolVersion = "artvq 0.1.0";

inline fs::path run_record_path(const fs::path& output) {
  if (fs::is_directory(output)) return output / "run_record.json";
  return fs::path(output.string() + ".run.json");
}

inline void write_run_record(const fs::path& output, const std::string& command, const Json& options,
                             const Json& extra = Json::object()) {
  Json r{{"tool", kToolVersion}, {"command", command}, {"options", options}};
  for (const auto& [k, v] : extra.items()) r[k] = v;
  write_json_file(run_record_path(output), r);
}

inline std::vector<std::string> modality_names(const std::vector<Modality>& ms) {
  std::vector<std::string> out;
  for (auto m : ms) out.push_back(features::to_string(m));
  return out;
}

// ------------------------------------------------------ feature dirs ----

struct FeatureDir {
  fs::path root;
  Json info;
  Splits splits;

  static FeatureDir open(const fs::path& root) {
    if (!fs::is_directory(root)) throw IngestionError("feature directory not found: " + root.string());
    FeatureDir d;
    d.root = root;
    d.info = read_json_file(root / "features.json");
    d.splits = splits_from_json(read_json_file(root / "splits.json"));
    return d;
  }

  fs::path file(Modality m, const std::string& id) const {
    return root / features::to_string(m) / (id + ".csv");
  }

  bool has(Modality m) const { return fs::is_directory(root / features::to_string(m)); }

  features::FeatureSequence read(Modality m, const std::string& id) const {
    const fs::path p = file(m, id);
    if (!fs::is_regular_file(p)) throw IngestionError("no " + features::to_string(m) + " features for '" + id + "' in " + root.string());
    return features::read_feature_file(p);
  }

  std::vector<features::FeatureSequence> read(Modality m, const std::vector<std::string>& ids) const {
    std::vector<features::FeatureSequence> out;
    for (const auto& id : ids) out.push_back(read(m, id));
    return out;
  }

  std::vector<std::string> all_ids() const {
    std::vector<std::string> ids = splits.train;
    ids.insert(ids.end(), splits.validation.begin(), splits.validation.end());
    ids.insert(ids.end(), splits.test.begin(), splits.test.end());
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  fs::path manifest() const { return fs::path(info.at("manifest").get<std::string>()); }
};

// ---------------------------------------------------- features extract ----

struct ExtractOptions {
  fs::path manifest;
  fs::path out;
  std::vector<Modality> modalities{Modality::kArticulatory, Modality::kAcoustic};
  RngSeed seed{0};
  int repetition = 0;
  std::string speaker;
  features::MelConfig mel;

  Json to_json() const {
    return Json{{"manifest", manifest.generic_string()}, {"out", out.generic_string()},
                {"modalities", modality_names(modalities)}, {"seed", seed.value},
                {"repetition", repetition}, {"speaker", speaker}};
  }
};

// Guided PCA is fitted on the training split of (seed, repetition).
inline Json features_extract(const ExtractOptions& o) {
  const CorpusManifest manifest = load_manifest(o.manifest).for_speaker(o.speaker);
  auto uses = [&](Modality m) { return std::find(o.modalities.begin(), o.modalities.end(), m) != o.modalities.end(); };
  for (auto m : o.modalities) {
    if (m == Modality::kArticulatoryInferred) throw ConfigurationError("inferred features come from `invert apply`");
  }
  const bool art = uses(Modality::kArticulatory) || uses(Modality::kFused);
  const bool ac = uses(Modality::kAcoustic) || uses(Modality::kFused);
  const SplitPlan plan{o.seed, 0.2, 0.2, o.repetition};
  const Splits splits = make_splits(manifest.ids(), plan);
  const CorpusData data = load_corpus(manifest, art, ac, o.mel);

  std::map<Modality, std::map<std::string, features::FeatureSequence>> seqs;
  std::optional<features::GuidedPcaModel> gpca;
  if (art) {
    auto a = articulatory_features(data, splits.train);
    gpca = a.model;
    seqs[Modality::kArticulatory] = std::move(a.sequences);
  }
  if (ac) seqs[Modality::kAcoustic] = data.acoustic;
  if (uses(Modality::kFused)) {
    for (const auto& u : manifest.utterances) {
      seqs[Modality::kFused][u.id] =
          features::concat_modalities(seqs[Modality::kArticulatory].at(u.id), seqs[Modality::kAcoustic].at(u.id));
    }
  }
  fs::create_directories(o.out);
  write_json_file(o.out / "splits.json", splits_to_json(splits, plan));
  if (gpca) write_json_file(o.out / "guided_pca.json", features::guided_pca_to_json(*gpca));
  for (auto m : o.modalities) {
    for (const auto& [id, s] : seqs.at(m)) features::write_feature_file(o.out / features::to_string(m) / (id + ".csv"), s);
  }
  const Json info{{"manifest", fs::absolute(o.manifest).lexically_normal().generic_string()},
                  {"modalities", modality_names(o.modalities)},
                  {"seed", o.seed.value},
                  {"repetition", o.repetition},
                  {"utterances", manifest.utterances.size()}};
  write_json_file(o.out / "features.json", info);
  write_run_record(o.out, "features extract", o.to_json(),
                   {{"manifest_sha256", sha256_file(o.manifest)}, {"split_seed", derive_seed(plan.repetition_seed(), 1).value}});
  return info;
}

// --------------------------------------------------------- vqvae train ----

struct VqTrainOptions {
  fs::path features;
  Modality modality = Modality::kAcoustic;
  fs::path out;
  vqvae::TrainConfig config;

  Json to_json() const {
    return Json{{"features", features.generic_string()}, {"modality", features::to_string(modality)},
                {"out", out.generic_string()}, {"config", vqvae::train_config_to_json(config)}};
  }
};

inline vqvae::TrainResult<double> vqvae_train(const VqTrainOptions& o,
                                              const std::function<void(const vqvae::EpochRecord&)>& on_epoch = {}) {
  const FeatureDir dir = FeatureDir::open(o.features);
  auto train = dir.read(o.modality, dir.splits.train);
  auto val = dir.read(o.modality, dir.splits.validation);
  const features::Normalizer norm = features::fit_normalizer(train, "train");
  for (auto& s : train) s = norm.apply(s);
  for (auto& s : val) s = norm.apply(s);
  auto result = vqvae::train_vqvae<double>(train, val, o.config, norm, on_epoch);
  write_json_file(o.out, vqvae::vqvae_to_json(result.model, o.config, result.summary()));
  write_run_record(o.out, "vqvae train", o.to_json(),
                   {{"seed", o.config.seed.value}, {"checkpoint_sha256", sha256_file(o.out)},
                    {"best_epoch", result.best_epoch}});
  return result;
}

// ------------------------------------------------------------ abx eval ----

struct AbxOptions {
  fs::path features;
  std::optional<fs::path> model;      // absent: evaluate the features themselves
  Modality modality = Modality::kAcoustic;  // used when no model is given
  std::optional<fs::path> manifest;   // default: the one recorded with the features
  std::size_t triplets = 5000;
  RngSeed seed{0};
  fs::path out;

  Json to_json() const {
    return Json{{"features", features.generic_string()},
                {"model", model ? Json(model->generic_string()) : Json(nullptr)},
                {"modality", features::to_string(modality)},
                {"manifest", manifest ? Json(manifest->generic_string()) : Json(nullptr)},
                {"triplets", triplets}, {"seed", seed.value}, {"out", out.generic_string()}};
  }
};

// Test-split VCVs and one triplet sample, shared by every stream evaluated
// on the same feature directory, seed and count.
struct TestSet {
  abx::PhoneTable table;
  std::vector<abx::VcvSegment> vcvs;
  abx::SampleResult sample;
};

inline TestSet test_set(const FeatureDir& dir, const std::optional<fs::path>& manifest_path,
                        const std::vector<Modality>& streams, std::size_t n, RngSeed seed) {
  const CorpusManifest manifest = load_manifest(manifest_path ? *manifest_path : dir.manifest());
  TestSet t;
  t.table = abx::read_phone_table(manifest.phone_table);
  for (const auto& id : dir.splits.test) {
    Eigen::Index frames = -1;
    for (auto m : streams) {
      const Eigen::Index len = dir.read(m, id).length();
      frames = frames < 0 ? len : std::min(frames, len);
    }
    auto v = abx::extract_vcv(id, abx::read_segmentation(manifest.at(id).segmentation), t.table,
                              features::kFramePeriod, frames);
    t.vcvs.insert(t.vcvs.end(), v.begin(), v.end());
  }
  abx::SamplerOptions so;
  so.n = n;
  so.seed = seed;
  t.sample = abx::sample_triplets(t.vcvs, so);
  return t;
}

inline std::vector<abx::DistancePair> stream_distances(const FeatureDir& dir, const TestSet& t,
                                                       vqvae::VqVaeModel<double>* model, Modality m) {
  abx::EmbeddingStore store;
  for (const auto& id : dir.splits.test) {
    const auto seq = dir.read(m, id);
    store.add(id, model ? vqvae::encode_sequence(*model, seq).embeddings : seq.frames);
  }
  return abx::triplet_distances(t.vcvs, t.sample.triplets, store);
}

inline vqvae::VqVaeModel<double> load_vqvae(const fs::path& p) {
  return vqvae::vqvae_from_json<double>(read_json_file(p));
}

inline abx::AbxReport abx_eval(const AbxOptions& o) {
  const FeatureDir dir = FeatureDir::open(o.features);
  std::optional<vqvae::VqVaeModel<double>> model;
  Modality m = o.modality;
  if (o.model) {
    model = load_vqvae(*o.model);
    m = model->modality;
  }
  const TestSet t = test_set(dir, o.manifest, {m}, o.triplets, o.seed);
  const auto d = stream_distances(dir, t, model ? &*model : nullptr, m);
  const std::string name = model ? features::to_string(m) : features::to_string(m) + "-features";
  const auto report = abx::make_report(name, t.vcvs, t.sample, d, t.table, o.seed);
  write_json_file(o.out, abx::abx_report_to_json(report));
  fs::path csv = o.out;
  csv.replace_extension(".pairwise.csv");
  write_text_file(csv, abx::pairwise_csv(report.pairwise));
  write_run_record(o.out, "abx eval", o.to_json(),
                   {{"model_sha256", o.model ? Json(sha256_file(*o.model)) : Json(nullptr)},
                    {"report_sha256", sha256_file(o.out)}});
  return report;
}

// -------------------------------------------------------- fusion sweep ----

struct FusionOptions {
  fs::path features;
  fs::path acoustic_model;
  fs::path articulatory_model;
  std::optional<fs::path> manifest;
  double omega_min = 0.1;
  double omega_max = 10.0;
  int points = 25;
  std::size_t triplets = 5000;
  RngSeed seed{0};
  fs::path out;  // CSV; a JSON report is written next to it

  Json to_json() const {
    return Json{{"features", features.generic_string()},
                {"acoustic_model", acoustic_model.generic_string()},
                {"articulatory_model", articulatory_model.generic_string()},
                {"manifest", manifest ? Json(manifest->generic_string()) : Json(nullptr)},
                {"omega_min", omega_min}, {"omega_max", omega_max}, {"points", points},
                {"triplets", triplets}, {"seed", seed.value}, {"out", out.generic_string()}};
  }
};

inline std::vector<abx::FusionPoint> fusion_sweep(const FusionOptions& o) {
  const auto grid = abx::log_grid(o.omega_min, o.omega_max, o.points);
  const FeatureDir dir = FeatureDir::open(o.features);
  auto ac_model = load_vqvae(o.acoustic_model);
  auto art_model = load_vqvae(o.articulatory_model);
  if (ac_model.modality != Modality::kAcoustic) throw ModalityError(o.acoustic_model.string() + " is not an acoustic model");
  if (art_model.modality != Modality::kArticulatory && art_model.modality != Modality::kArticulatoryInferred) {
    throw ModalityError(o.articulatory_model.string() + " is not an articulatory model");
  }
  const TestSet t = test_set(dir, o.manifest, {Modality::kAcoustic, art_model.modality}, o.triplets, o.seed);
  const auto ac = stream_distances(dir, t, &ac_model, Modality::kAcoustic);
  const auto art = stream_distances(dir, t, &art_model, art_model.modality);
  const auto sweep = abx::fusion_sweep(t.vcvs, t.sample.triplets, ac, art, t.table, grid);
  write_text_file(o.out, fusion_sweep_csv(sweep));
  fs::path json = o.out;
  json.replace_extension(".json");
  const double omega = sweep[best_sweep_point(sweep)].omega;
  auto report = abx::make_report("late-fusion", t.vcvs, t.sample, abx::late_fusion(ac, art, omega), t.table, o.seed);
  report.sweep = sweep;
  Json j = abx::abx_report_to_json(report);
  j["omega"] = omega;
  j["acoustic_dominance_threshold"] = abx::acoustic_dominance_threshold(ac, art);
  write_json_file(json, j);
  write_run_record(o.out, "fusion sweep", o.to_json(),
                   {{"acoustic_model_sha256", sha256_file(o.acoustic_model)},
                    {"articulatory_model_sha256", sha256_file(o.articulatory_model)}});
  return sweep;
}

// -------------------------------------------------------------- invert ----

struct InvertOptions {
  fs::path features;
  fs::path out;
  std::optional<fs::path> synthesizer;
  std::optional<fs::path> inversion;
  inversion::NetTrainConfig config;

  Json to_json() const {
    return Json{{"features", features.generic_string()},
                {"out", out.generic_string()},
                {"synthesizer", synthesizer ? Json(synthesizer->generic_string()) : Json(nullptr)},
                {"inversion", inversion ? Json(inversion->generic_string()) : Json(nullptr)},
                {"config", inversion::net_train_config_to_json(config)}};
  }
};

inline inversion::Synthesizer<double> load_synthesizer(const fs::path& p) {
  auto s = inversion::synthesizer_from_json<double>(read_json_file(p));
  s.freeze();
  return s;
}

// Supervised articulatory -> mel synthesizer on the reference speaker's
// feature directory; saved frozen.
inline inversion::FitSummary invert_pretrain(const InvertOptions& o,
                                             const std::function<void(const inversion::FitRecord&)>& on_epoch = {}) {
  const FeatureDir dir = FeatureDir::open(o.features);
  auto pairs = [&](const std::vector<std::string>& ids) {
    std::vector<std::pair<features::FeatureSequence, features::FeatureSequence>> out;
    for (const auto& id : ids) {
      const auto fused = features::concat_modalities(dir.read(Modality::kArticulatory, id), dir.read(Modality::kAcoustic, id));
      const auto art_dim = dir.read(Modality::kArticulatory, id).dim();
      out.push_back(features::split_modalities(fused, art_dim));
    }
    return out;
  };
  const auto tr = pairs(dir.splits.train), va = pairs(dir.splits.validation);
  std::vector<const MatrixD*> a, m;
  for (const auto& [x, y] : tr) {
    a.push_back(&x.frames);
    m.push_back(&y.frames);
  }
  const auto an = features::fit_normalizer(a, "train"), mn = features::fit_normalizer(m, "train");
  auto to_pairs = [&](const auto& v) {
    std::vector<inversion::FramePair> out;
    for (const auto& [x, y] : v) out.push_back({x.utterance_id, an.apply(x.frames), mn.apply(y.frames)});
    return out;
  };
  auto r = inversion::train_synthesizer<double>(to_pairs(tr), to_pairs(va), an, mn, o.config, on_epoch);
  r.model.freeze();
  write_text_file(o.out, inversion::synthesizer_checkpoint_text(r.model));
  write_run_record(o.out, "invert pretrain", o.to_json(),
                   {{"seed", o.config.seed.value}, {"synthesizer_sha256", sha256_file(o.out)}, {"fit", r.fit.to_json()}});
  return r.fit;
}

// Inversion network on an audio-only speaker's acoustic features, trained
// through the frozen synthesizer.
inline inversion::FitSummary invert_train(const InvertOptions& o,
                                          const std::function<void(const inversion::FitRecord&)>& on_epoch = {}) {
  if (!o.synthesizer) throw ConfigurationError("invert train needs a synthesizer checkpoint");
  const auto synth = load_synthesizer(*o.synthesizer);
  const FeatureDir dir = FeatureDir::open(o.features);
  const auto tr = dir.read(Modality::kAcoustic, dir.splits.train);
  const auto va = dir.read(Modality::kAcoustic, dir.splits.validation);
  const auto norm = features::fit_normalizer(tr, "train");
  std::vector<MatrixD> trz, vaz;
  for (const auto& s : tr) trz.push_back(norm.apply(s.frames));
  for (const auto& s : va) vaz.push_back(norm.apply(s.frames));
  auto r = inversion::train_inversion<double>(trz, vaz, synth, norm, o.config, on_epoch);
  write_json_file(o.out, inversion::inversion_to_json(r.system));
  write_run_record(o.out, "invert train", o.to_json(),
                   {{"seed", o.config.seed.value},
                    {"synthesizer_sha256", r.system.synthesizer_sha256},
                    {"inversion_sha256", sha256_file(o.out)},
                    {"fit", r.fit.to_json()}});
  return r.fit;
}

// Writes inferred articulatory features for every utterance into a feature
// directory usable by `vqvae train --modality articulatory-inferred`.
inline std::size_t invert_apply(const InvertOptions& o) {
  if (!o.synthesizer || !o.inversion) throw ConfigurationError("invert apply needs inversion and synthesizer checkpoints");
  const auto synth = load_synthesizer(*o.synthesizer);
  auto sys = inversion::inversion_from_json<double>(read_json_file(*o.inversion), synth);
  const FeatureDir dir = FeatureDir::open(o.features);
  std::vector<features::FeatureSequence> inferred;
  for (const auto& id : dir.all_ids()) inferred.push_back(inversion::infer_articulatory(sys, dir.read(Modality::kAcoustic, id)));
  fs::create_directories(o.out);
  for (const auto& s : inferred) {
    features::write_feature_file(o.out / features::to_string(Modality::kArticulatoryInferred) / (s.utterance_id + ".csv"), s);
  }
  fs::copy_file(o.features / "splits.json", o.out / "splits.json", fs::copy_options::overwrite_existing);
  Json info = dir.info;
  info["modalities"] = {features::to_string(Modality::kArticulatoryInferred)};
  info["inferred_from"] = fs::absolute(o.features).lexically_normal().generic_string();
  write_json_file(o.out / "features.json", info);
  write_run_record(o.out, "invert apply", o.to_json(),
                   {{"synthesizer_sha256", sys.synthesizer_sha256}, {"inversion_sha256", sha256_file(*o.inversion)}});
  return inferred.size();
}

// -------------------------------------------------------------- report ----

inline Json report_render(const fs::path& experiment_dir) {
  const fs::path record = experiment_dir / "run_record.json";
  if (!fs::is_regular_file(record)) throw IngestionError("no run record in " + experiment_dir.string());
  const int reps = read_json_file(record).at("config").at("repetitions").get<int>();
  write_summary(experiment_dir, reps);
  return read_json_file(experiment_dir / "summary.json");
}

}  // namespace artvq::experiment
