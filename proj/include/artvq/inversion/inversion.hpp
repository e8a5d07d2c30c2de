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

// Audio-only inversion: mel -> articulatory (reference speaker space) ->
// frozen synthesizer -> mel, trained to reproduce its input.

#pragma once

#include <string>
#include <vector>

#include "artvq/inversion/synthesizer.hpp"

namespace artvq::inversion {

template <typename T>
struct InversionSystem {
  nn::Mlp<T> inversion;
  Synthesizer<T> synthesizer;  // frozen
  Normalizer acoustic;         // the audio-only speaker's own mel statistics
  std::string synthesizer_sha256;

  Eigen::Index acoustic_dim() const { return inversion.input_size(); }
  Eigen::Index articulatory_dim() const { return inversion.output_size(); }
};

// One pass over z-scored mel frames: the loss is the per-element MSE between
// the input and its resynthesis. Gradients reach the inversion network only.
template <typename T>
double inversion_forward_backward(const Matrix<T>& mel_z, InversionSystem<T>& sys, Rng& dropout_rng,
                                  nn::Mode mode = nn::Mode::kTrain) {
  const Matrix<T> art = sys.inversion.forward(mel_z, mode, dropout_rng);
  const Matrix<T> out = sys.synthesizer.net.forward(art, nn::Mode::kEval, dropout_rng);
  const double l = mse(out, mel_z);
  if (!std::isfinite(l)) throw TrainingError("inversion loss is not finite");
  const Matrix<T> g = sys.synthesizer.net.backward(static_cast<T>(2.0 / static_cast<double>(mel_z.size())) *
                                                   (out - mel_z));
  sys.inversion.backward(g);
  return l;
}

// Resynthesis MSE on z-scored mel frames (eval mode).
template <typename T>
double resynthesis_mse(InversionSystem<T>& sys, const Matrix<T>& mel_z) {
  return mse(sys.synthesizer.net.forward(sys.inversion.forward(mel_z)), mel_z);
}

template <typename T>
struct InversionResult {
  InversionSystem<T> system;  // best validation snapshot
  FitSummary fit;
};

// `train` and `validation` hold mel frames z-scored with `acoustic`, which
// must come from the training split of the audio-only speaker.
template <typename T>
InversionResult<T> train_inversion(const std::vector<MatrixD>& train, const std::vector<MatrixD>& validation,
                                   const Synthesizer<T>& synthesizer, const Normalizer& acoustic,
                                   const NetTrainConfig& cfg,
                                   const std::function<void(const FitRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (!synthesizer.frozen()) {
    throw ConfigurationError("train_inversion: the synthesizer must be frozen before inversion training");
  }
  if (train.empty() || validation.empty()) {
    throw ConfigurationError("train_inversion: training and validation splits must be non-empty");
  }
  if (acoustic.fit_split != "train") {
    throw ConfigurationError("train_inversion: acoustic normalizer was fitted on the '" + acoustic.fit_split +
                             "' split");
  }
  const Eigen::Index mel_dim = synthesizer.acoustic_dim();
  for (const auto* split : {&train, &validation}) {
    for (const auto& m : *split) {
      if (m.cols() != mel_dim) {
        throw ModalityError("train_inversion: mel frames have " + std::to_string(m.cols()) +
                            " dims, synthesizer produces " + std::to_string(mel_dim));
      }
    }
  }

  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng shuffle_rng(derive_seed(cfg.seed, 2));
  Rng dropout_rng(derive_seed(cfg.seed, 3));
  nn::MlpConfig mc;
  mc.input = mel_dim;
  mc.hidden = cfg.hidden;
  mc.output = synthesizer.articulatory_dim();
  mc.dropout = cfg.dropout;
  mc.order = cfg.block_order;
  InversionSystem<T> sys{nn::Mlp<T>(mc, "inversion", init_rng), synthesizer, acoustic,
                         synthesizer_hash(synthesizer)};

  std::vector<const MatrixD*> vparts;
  for (const auto& m : validation) vparts.push_back(&m);
  const Matrix<T> val = stack<T>(vparts);

  auto params = sys.inversion.parameters();
  nn::AdamState<T> adam(cfg.adam);
  InversionResult<T> result;
  auto step = [&](const std::vector<std::size_t>& batch) {
    std::vector<const MatrixD*> parts;
    for (auto i : batch) parts.push_back(&train[i]);
    const Matrix<T> x = stack<T>(parts);
    sys.inversion.zero_grad();
    const double l = inversion_forward_backward(x, sys, dropout_rng);
    nn::adam_step(params, adam);
    return std::pair<double, double>{l * static_cast<double>(x.rows()), static_cast<double>(x.rows())};
  };
  auto validate = [&] { return resynthesis_mse(sys, val); };
  auto keep = [&] { result.system = sys; };
  result.fit = run_early_stopping(train.size(), cfg, shuffle_rng, step, validate, keep, on_epoch);
  if (synthesizer_hash(sys.synthesizer) != sys.synthesizer_sha256) {
    throw TrainingError("train_inversion: synthesizer parameters changed during inversion training");
  }
  return result;
}

// Mel frames (raw) to articulatory frames in the reference speaker's space,
// tagged as inferred.
template <typename T>
FeatureSequence infer_articulatory(InversionSystem<T>& sys, const FeatureSequence& mel) {
  if (mel.modality != Modality::kAcoustic || mel.dim() != sys.acoustic_dim()) {
    throw ModalityError("inversion expects " + std::to_string(sys.acoustic_dim()) + "-dim acoustic frames, got " +
                        std::to_string(mel.dim()) + "-dim " + features::to_string(mel.modality) + " frames");
  }
  const Matrix<T> z = sys.acoustic.apply(mel.frames).template cast<T>();
  FeatureSequence out = mel;
  out.frames = sys.synthesizer.articulatory.invert(MatrixD(sys.inversion.forward(z).template cast<double>()));
  out.modality = Modality::kArticulatoryInferred;
  return out;
}

template <typename T>
Json inversion_to_json(const InversionSystem<T>& s) {
  return Json{{"format_version", nn::kCheckpointFormatVersion},
              {"kind", "inversion"},
              {"net", nn::mlp_to_json(s.inversion)},
              {"acoustic_normalizer", features::normalizer_to_json(s.acoustic)},
              {"synthesizer_sha256", s.synthesizer_sha256}};
}

// Rebuilds a system from an inversion checkpoint and the synthesizer it was
// trained against; the synthesizer's content hash must match the record.
template <typename T>
InversionSystem<T> inversion_from_json(const Json& j, const Synthesizer<T>& synthesizer) {
  nn::check_format_version(j, "inversion checkpoint");
  if (j.value("kind", std::string()) != "inversion") throw IngestionError("not an inversion checkpoint");
  InversionSystem<T> s;
  s.inversion = nn::mlp_from_json<T>(j.at("net"));
  s.acoustic = features::normalizer_from_json(j.at("acoustic_normalizer"));
  s.synthesizer = synthesizer;
  s.synthesizer_sha256 = j.at("synthesizer_sha256").get<std::string>();
  const std::string actual = synthesizer_hash(synthesizer);
  if (actual != s.synthesizer_sha256) {
    throw IngestionError("inversion checkpoint was trained against synthesizer " + s.synthesizer_sha256 +
                         ", given " + actual);
  }
  if (s.inversion.output_size() != synthesizer.articulatory_dim() ||
      s.inversion.input_size() != synthesizer.acoustic_dim()) {
    throw IngestionError("inversion checkpoint does not match the synthesizer dimensions");
  }
  return s;
}

}  // namespace artvq::inversion
