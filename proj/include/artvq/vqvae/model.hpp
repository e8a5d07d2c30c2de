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

// Frame-level VQ-VAE: encoder MLP -> nearest-codebook quantization -> decoder
// MLP. Frames are processed independently; sequences only group frames into
// mini-batches and carry the time axis for downstream alignment.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "artvq/features/normalizer.hpp"
#include "artvq/features/sequence.hpp"
#include "artvq/nn/adam.hpp"
#include "artvq/nn/checkpoint.hpp"
#include "artvq/nn/mlp.hpp"
#include "artvq/vqvae/codebook.hpp"

namespace artvq::vqvae {

using features::FeatureSequence;
using features::Modality;
using features::Normalizer;

struct TrainConfig {
  int batch_sequences = 8;
  int codebook_size = 64;    // K
  int embedding_dim = 32;    // D
  double commitment_weight = 0.25;  // beta
  double codebook_weight = 1.0;
  int max_epochs = 500;
  int patience = 10;
  RngSeed seed{0};
  std::vector<Eigen::Index> encoder_hidden{256, 256, 256};
  std::vector<Eigen::Index> decoder_hidden{256, 256, 256};
  double dropout = 0.25;
  nn::BlockOrder block_order = nn::BlockOrder::kDropoutThenNorm;
  nn::AdamConfig adam;
  double codebook_init_jitter = 1e-3;

  void validate() const {
    if (batch_sequences < 1 || codebook_size < 2 || embedding_dim < 1) {
      throw ConfigurationError("train config: batch >= 1, K >= 2 and D >= 1 required");
    }
    if (max_epochs < 1 || patience < 1) {
      throw ConfigurationError("train config: max_epochs and patience must be positive");
    }
    if (commitment_weight < 0 || codebook_weight < 0) {
      throw ConfigurationError("train config: loss weights must be non-negative");
    }
  }
};

inline Json train_config_to_json(const TrainConfig& c) {
  return Json{{"batch_sequences", c.batch_sequences},
              {"codebook_size", c.codebook_size},
              {"embedding_dim", c.embedding_dim},
              {"commitment_weight", c.commitment_weight},
              {"codebook_weight", c.codebook_weight},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"seed", c.seed.value},
              {"encoder_hidden", c.encoder_hidden},
              {"decoder_hidden", c.decoder_hidden},
              {"dropout", c.dropout},
              {"block_order", nn::to_string(c.block_order)},
              {"learning_rate", c.adam.learning_rate},
              {"adam_beta1", c.adam.beta1},
              {"adam_beta2", c.adam.beta2},
              {"adam_epsilon", c.adam.epsilon},
              {"codebook_init_jitter", c.codebook_init_jitter}};
}

inline TrainConfig train_config_from_json(const Json& j) {
  TrainConfig c;
  c.batch_sequences = j.value("batch_sequences", c.batch_sequences);
  c.codebook_size = j.value("codebook_size", c.codebook_size);
  c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
  c.commitment_weight = j.value("commitment_weight", c.commitment_weight);
  c.codebook_weight = j.value("codebook_weight", c.codebook_weight);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = RngSeed{j.value("seed", std::uint64_t{0})};
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
  c.decoder_hidden = j.value("decoder_hidden", c.decoder_hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.block_order = nn::block_order_from_string(j.value("block_order", nn::to_string(c.block_order)));
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("adam_beta1", c.adam.beta1);
  c.adam.beta2 = j.value("adam_beta2", c.adam.beta2);
  c.adam.epsilon = j.value("adam_epsilon", c.adam.epsilon);
  c.codebook_init_jitter = j.value("codebook_init_jitter", c.codebook_init_jitter);
  return c;
}

template <typename T>
struct VqVaeModel {
  nn::Mlp<T> encoder;
  nn::Mlp<T> decoder;
  Codebook<T> codebook;
  Normalizer normalizer;
  Modality modality = Modality::kAcoustic;

  VqVaeModel() = default;

  VqVaeModel(Eigen::Index input_dim, Modality m, const TrainConfig& cfg, Rng& init_rng)
      : codebook(cfg.codebook_size, cfg.embedding_dim), modality(m) {
    nn::MlpConfig enc;
    enc.input = input_dim;
    enc.hidden = cfg.encoder_hidden;
    enc.output = cfg.embedding_dim;
    enc.dropout = cfg.dropout;
    enc.order = cfg.block_order;
    nn::MlpConfig dec = enc;
    dec.input = cfg.embedding_dim;
    dec.hidden = cfg.decoder_hidden;
    dec.output = input_dim;
    encoder = nn::Mlp<T>(enc, "encoder", init_rng);
    decoder = nn::Mlp<T>(dec, "decoder", init_rng);
  }

  Eigen::Index input_dim() const { return encoder.input_size(); }
  Eigen::Index embedding_dim() const { return codebook.dim(); }

  std::vector<nn::Parameter<T>*> parameters() {
    auto ps = encoder.parameters();
    for (auto* p : decoder.parameters()) ps.push_back(p);
    ps.push_back(&codebook.embeddings);
    return ps;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }
};

struct LossTerms {
  double total = 0.0;
  double reconstruction = 0.0;  // mean over frames of ||x - x_hat||^2
  double codebook = 0.0;        // mean over frames of ||sg[z_e] - e_k||^2
  double commitment = 0.0;      // mean over frames of ||z_e - sg[e_k]||^2, before beta
  Eigen::Index frames = 0;

  double reconstruction_mse(Eigen::Index dim) const {
    return dim > 0 ? reconstruction / static_cast<double>(dim) : 0.0;
  }
};

namespace detail {

template <typename T>
LossTerms loss_terms(const Matrix<T>& x, const Matrix<T>& x_hat, const Matrix<T>& z,
                     const Matrix<T>& q, double beta, double codebook_weight) {
  LossTerms l;
  l.frames = x.rows();
  const double n = static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
  l.reconstruction = static_cast<double>((x - x_hat).squaredNorm()) / n;
  l.codebook = static_cast<double>((z - q).squaredNorm()) / n;
  l.commitment = l.codebook;  // same value, different gradient routing
  l.total = l.reconstruction + codebook_weight * l.codebook + beta * l.commitment;
  if (!std::isfinite(l.total)) throw TrainingError("VQ-VAE loss is not finite");
  return l;
}

}  // namespace detail

// Loss on already-normalized frames in eval mode (no dropout, running BN
// statistics).
template <typename T>
LossTerms vqvae_loss(const Matrix<T>& x, VqVaeModel<T>& model, double beta = 0.25,
                     double codebook_weight = 1.0) {
  const Matrix<T> z = model.encoder.forward(x);
  const Matrix<T> q = gather_codes(model.codebook, quantize_rows(z, model.codebook));
  const Matrix<T> x_hat = model.decoder.forward(q);
  return detail::loss_terms(x, x_hat, z, q, beta, codebook_weight);
}

// One forward/backward pass in train mode. Gradients are accumulated into
// the model parameters; the straight-through estimator copies the decoder
// input gradient to the encoder output.
template <typename T>
LossTerms vqvae_forward_backward(const Matrix<T>& x, VqVaeModel<T>& model, const TrainConfig& cfg,
                                 Rng& dropout_rng, nn::Mode mode = nn::Mode::kTrain) {
  const Matrix<T> z = model.encoder.forward(x, mode, dropout_rng);
  const std::vector<int> codes = quantize_rows(z, model.codebook);
  const Matrix<T> q = gather_codes(model.codebook, codes);
  const Matrix<T> x_hat = model.decoder.forward(q, mode, dropout_rng);
  const LossTerms loss =
      detail::loss_terms(x, x_hat, z, q, cfg.commitment_weight, cfg.codebook_weight);

  const T scale = static_cast<T>(2.0 / static_cast<double>(std::max<Eigen::Index>(x.rows(), 1)));
  const Matrix<T> grad_q = model.decoder.backward(scale * (x_hat - x));
  const Matrix<T> diff = z - q;
  const Matrix<T> grad_z = grad_q + (static_cast<T>(cfg.commitment_weight) * scale) * diff;
  auto& cb_grad = model.codebook.embeddings.grad;
  const T cb_scale = static_cast<T>(cfg.codebook_weight) * scale;
  for (std::size_t n = 0; n < codes.size(); ++n) {
    cb_grad.row(codes[n]) -= cb_scale * diff.row(static_cast<Eigen::Index>(n));
  }
  model.encoder.backward(grad_z);
  return loss;
}

// ----------------------------------------------------------- encoding ----

inline bool modality_compatible(Modality model, Modality data) {
  auto family = [](Modality m) {
    return m == Modality::kArticulatoryInferred ? Modality::kArticulatory : m;
  };
  return family(model) == family(data);
}

template <typename T>
struct EncodedSequence {
  std::vector<QuantizationResult> frames;
  MatrixD embeddings;  // [T x D], rows are the selected codebook vectors
  std::vector<int> codes;
};

// Normalizes, encodes and quantizes every frame (eval mode).
template <typename T>
EncodedSequence<T> encode_sequence(VqVaeModel<T>& model, const FeatureSequence& seq) {
  if (!modality_compatible(model.modality, seq.modality)) {
    throw ModalityError("model trained on " + features::to_string(model.modality) +
                        " features cannot encode " + features::to_string(seq.modality) +
                        " utterance '" + seq.utterance_id + "'");
  }
  if (seq.dim() != model.input_dim()) {
    throw ModalityError("utterance '" + seq.utterance_id + "' has " + std::to_string(seq.dim()) +
                        " dims, model expects " + std::to_string(model.input_dim()));
  }
  const Matrix<T> x = model.normalizer.apply(seq.frames).template cast<T>();
  const Matrix<T> z = model.encoder.forward(x);
  EncodedSequence<T> out;
  out.codes = quantize_rows(z, model.codebook);
  out.embeddings.resize(z.rows(), model.embedding_dim());
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    QuantizationResult r;
    r.code_index = out.codes[static_cast<std::size_t>(t)];
    r.embedding = model.codebook.embeddings.value.row(r.code_index).transpose().template cast<double>();
    r.encoder_output = z.row(t).transpose().template cast<double>();
    r.squared_distance = (r.embedding - r.encoder_output).squaredNorm();
    out.embeddings.row(t) = r.embedding.transpose();
    out.frames.push_back(std::move(r));
  }
  return out;
}

struct CodebookUsage {
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  double perplexity = 1.0;  // exp(entropy of the code histogram), in [1, K]

  std::size_t codes_above(double fraction) const {
    std::size_t n = 0;
    for (auto c : counts)
      if (total > 0 && static_cast<double>(c) / static_cast<double>(total) > fraction) ++n;
    return n;
  }
};

inline CodebookUsage usage_from_codes(const std::vector<int>& codes, std::size_t k) {
  CodebookUsage u;
  u.counts.assign(k, 0);
  for (int c : codes) ++u.counts.at(static_cast<std::size_t>(c));
  u.total = codes.size();
  double entropy = 0.0;
  for (auto c : u.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(u.total);
    entropy -= p * std::log(p);
  }
  u.perplexity = std::exp(entropy);
  return u;
}

template <typename T>
CodebookUsage codebook_usage(VqVaeModel<T>& model, const std::vector<FeatureSequence>& data) {
  std::vector<int> all;
  for (const auto& s : data) {
    const auto enc = encode_sequence(model, s);
    all.insert(all.end(), enc.codes.begin(), enc.codes.end());
  }
  return usage_from_codes(all, static_cast<std::size_t>(model.codebook.size()));
}

// --------------------------------------------------------- checkpoint ----

template <typename T>
Json vqvae_to_json(const VqVaeModel<T>& model, const TrainConfig& cfg, const Json& training = {}) {
  Json j{{"format_version", nn::kCheckpointFormatVersion},
         {"kind", "vqvae"},
         {"modality", features::to_string(model.modality)},
         {"input_dim", model.input_dim()},
         {"encoder", nn::mlp_to_json(model.encoder)},
         {"decoder", nn::mlp_to_json(model.decoder)},
         {"codebook", nn::tensor_to_json(model.codebook.embeddings.value)},
         {"normalizer", features::normalizer_to_json(model.normalizer)},
         {"train_config", train_config_to_json(cfg)}};
  if (!training.is_null()) j["training"] = training;
  return j;
}

template <typename T>
VqVaeModel<T> vqvae_from_json(const Json& j) {
  nn::check_format_version(j, "VQ-VAE checkpoint");
  if (j.value("kind", std::string()) != "vqvae") throw IngestionError("not a VQ-VAE checkpoint");
  VqVaeModel<T> m;
  m.encoder = nn::mlp_from_json<T>(j.at("encoder"));
  m.decoder = nn::mlp_from_json<T>(j.at("decoder"));
  const Matrix<T> cb = nn::tensor_from_json<T>(j.at("codebook"), "codebook");
  m.codebook = Codebook<T>(cb.rows(), cb.cols());
  m.codebook.embeddings.value = cb;
  m.normalizer = features::normalizer_from_json(j.at("normalizer"));
  m.modality = features::modality_from_string(j.at("modality").get<std::string>());
  if (m.encoder.output_size() != m.codebook.dim() || m.decoder.input_size() != m.codebook.dim() ||
      m.decoder.output_size() != m.encoder.input_size()) {
    throw IngestionError("VQ-VAE checkpoint has inconsistent shapes");
  }
  return m;
}

}  // namespace artvq::vqvae
