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

// Articulatory-to-acoustic synthesizer: a feed-forward regression from
// z-scored articulatory frames to z-scored mel frames of one reference
// speaker.

#pragma once

#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "artvq/features/normalizer.hpp"
#include "artvq/features/sequence.hpp"
#include "artvq/nn/adam.hpp"
#include "artvq/nn/checkpoint.hpp"
#include "artvq/nn/mlp.hpp"

namespace artvq::inversion {

using features::FeatureSequence;
using features::Modality;
using features::Normalizer;

struct NetTrainConfig {
  std::vector<Eigen::Index> hidden{256, 256, 256, 256};
  double dropout = 0.25;
  nn::BlockOrder block_order = nn::BlockOrder::kDropoutThenNorm;
  nn::AdamConfig adam;
  int batch_sequences = 8;
  int max_epochs = 500;
  int patience = 10;
  RngSeed seed{0};

  void validate() const {
    if (batch_sequences < 1 || max_epochs < 1 || patience < 1) {
      throw ConfigurationError("network config: batch, max_epochs and patience must be positive");
    }
  }
};

inline Json net_train_config_to_json(const NetTrainConfig& c) {
  return Json{{"hidden", c.hidden},
              {"dropout", c.dropout},
              {"block_order", nn::to_string(c.block_order)},
              {"learning_rate", c.adam.learning_rate},
              {"adam_beta1", c.adam.beta1},
              {"adam_beta2", c.adam.beta2},
              {"adam_epsilon", c.adam.epsilon},
              {"batch_sequences", c.batch_sequences},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"seed", c.seed.value}};
}

inline NetTrainConfig net_train_config_from_json(const Json& j) {
  NetTrainConfig c;
  c.hidden = j.value("hidden", c.hidden);
  c.dropout = j.value("dropout", c.dropout);
  c.block_order = nn::block_order_from_string(j.value("block_order", nn::to_string(c.block_order)));
  c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
  c.adam.beta1 = j.value("adam_beta1", c.adam.beta1);
  c.adam.beta2 = j.value("adam_beta2", c.adam.beta2);
  c.adam.epsilon = j.value("adam_epsilon", c.adam.epsilon);
  c.batch_sequences = j.value("batch_sequences", c.batch_sequences);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.seed = RngSeed{j.value("seed", std::uint64_t{0})};
  return c;
}

struct FitRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

inline Json fit_history_to_json(const std::vector<FitRecord>& h) {
  Json a = Json::array();
  for (const auto& r : h) {
    a.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"validation_loss", r.validation_loss}});
  }
  return a;
}

struct FitSummary {
  std::vector<FitRecord> history;
  int best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();

  Json to_json() const {
    return Json{{"best_epoch", best_epoch},
                {"best_validation_loss", best_validation_loss},
                {"epochs_run", static_cast<int>(history.size())},
                {"history", fit_history_to_json(history)}};
  }
};

// Mini-batch epochs over `n_train` sequences with patience-based early
// stopping. `step(batch)` trains on the given sequence indices and returns
// {summed loss, frames}; `validate()` returns the validation loss; `keep()` is
// called whenever the validation loss improves.
template <typename Step, typename Validate, typename Keep>
FitSummary run_early_stopping(std::size_t n_train, const NetTrainConfig& cfg, Rng& shuffle_rng, Step&& step,
                              Validate&& validate, Keep&& keep,
                              const std::function<void(const FitRecord&)>& on_epoch = {}) {
  FitSummary s;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0, frames = 0.0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_sequences)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_sequences));
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(b),
                                           order.begin() + static_cast<std::ptrdiff_t>(e));
      const auto [l, n] = step(batch);
      loss_sum += l;
      frames += n;
    }
    const FitRecord rec{epoch, frames > 0 ? loss_sum / frames : 0.0, validate()};
    s.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.validation_loss < s.best_validation_loss) {
      s.best_validation_loss = rec.validation_loss;
      s.best_epoch = epoch;
      keep();
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return s;
}

// Frame-aligned regression pair (already z-scored).
struct FramePair {
  std::string id;
  MatrixD input;
  MatrixD target;
};

inline void check_pairs(const std::vector<FramePair>& pairs, Eigen::Index in_dim, Eigen::Index out_dim) {
  for (const auto& p : pairs) {
    if (p.input.rows() != p.target.rows()) {
      throw IngestionError("utterance '" + p.id + "': " + std::to_string(p.input.rows()) +
                           " articulatory frames vs " + std::to_string(p.target.rows()) + " acoustic frames");
    }
    if (p.input.cols() != in_dim || p.target.cols() != out_dim) {
      throw DimensionError("utterance '" + p.id + "': inconsistent feature widths");
    }
    if (p.input.rows() == 0) throw IngestionError("utterance '" + p.id + "' has no frames");
  }
}

template <typename T>
Matrix<T> stack(const std::vector<const MatrixD*>& parts) {
  Eigen::Index rows = 0;
  for (const auto* m : parts) rows += m->rows();
  Matrix<T> out(rows, parts.empty() ? 0 : parts.front()->cols());
  Eigen::Index r = 0;
  for (const auto* m : parts) {
    out.middleRows(r, m->rows()) = m->template cast<T>();
    r += m->rows();
  }
  return out;
}

// Mean over all elements of (a - b)^2.
template <typename T>
double mse(const Matrix<T>& a, const Matrix<T>& b) {
  return a.size() ? static_cast<double>((a - b).squaredNorm()) / static_cast<double>(a.size()) : 0.0;
}

template <typename T>
struct Synthesizer {
  nn::Mlp<T> net;
  Normalizer articulatory;  // reference speaker, train split
  Normalizer acoustic;

  bool frozen() const { return net.frozen(); }
  void freeze() { net.freeze(); }
  Eigen::Index articulatory_dim() const { return net.input_size(); }
  Eigen::Index acoustic_dim() const { return net.output_size(); }

  // Raw articulatory frames to raw mel frames (eval mode).
  FeatureSequence synthesize(const FeatureSequence& art) {
    if (art.dim() != articulatory_dim()) {
      throw ModalityError("synthesizer expects " + std::to_string(articulatory_dim()) +
                          "-dim articulatory frames, got " + std::to_string(art.dim()));
    }
    const Matrix<T> z = articulatory.apply(art.frames).template cast<T>();
    FeatureSequence out = art;
    out.frames = acoustic.invert(MatrixD(net.forward(z).template cast<double>()));
    out.modality = Modality::kAcoustic;
    return out;
  }
};

template <typename T>
struct SynthesizerResult {
  Synthesizer<T> model;  // best validation snapshot, not frozen
  FitSummary fit;
};

// Supervised training on z-scored (articulatory, mel) frame pairs. The
// normalizers are stored with the model.
template <typename T>
SynthesizerResult<T> train_synthesizer(const std::vector<FramePair>& train, const std::vector<FramePair>& validation,
                                       const Normalizer& articulatory, const Normalizer& acoustic,
                                       const NetTrainConfig& cfg,
                                       const std::function<void(const FitRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty() || validation.empty()) {
    throw ConfigurationError("train_synthesizer: training and validation splits must be non-empty");
  }
  const Eigen::Index in_dim = train.front().input.cols();
  const Eigen::Index out_dim = train.front().target.cols();
  check_pairs(train, in_dim, out_dim);
  check_pairs(validation, in_dim, out_dim);

  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng shuffle_rng(derive_seed(cfg.seed, 2));
  Rng dropout_rng(derive_seed(cfg.seed, 3));
  nn::MlpConfig mc;
  mc.input = in_dim;
  mc.hidden = cfg.hidden;
  mc.output = out_dim;
  mc.dropout = cfg.dropout;
  mc.order = cfg.block_order;
  Synthesizer<T> model{nn::Mlp<T>(mc, "synthesizer", init_rng), articulatory, acoustic};

  std::vector<const MatrixD*> vin, vout;
  for (const auto& p : validation) {
    vin.push_back(&p.input);
    vout.push_back(&p.target);
  }
  const Matrix<T> val_x = stack<T>(vin), val_y = stack<T>(vout);

  auto params = model.net.parameters();
  nn::AdamState<T> adam(cfg.adam);
  SynthesizerResult<T> result;
  auto step = [&](const std::vector<std::size_t>& batch) {
    std::vector<const MatrixD*> in, out;
    for (auto i : batch) {
      in.push_back(&train[i].input);
      out.push_back(&train[i].target);
    }
    const Matrix<T> x = stack<T>(in), y = stack<T>(out);
    model.net.zero_grad();
    const Matrix<T> y_hat = model.net.forward(x, nn::Mode::kTrain, dropout_rng);
    const double l = mse(y_hat, y);
    if (!std::isfinite(l)) throw TrainingError("synthesizer loss is not finite");
    model.net.backward(static_cast<T>(2.0 / static_cast<double>(y.size())) * (y_hat - y));
    nn::adam_step(params, adam);
    return std::pair<double, double>{l * static_cast<double>(x.rows()), static_cast<double>(x.rows())};
  };
  auto validate = [&] { return mse(model.net.forward(val_x), val_y); };
  auto keep = [&] { result.model = model; };
  result.fit = run_early_stopping(train.size(), cfg, shuffle_rng, step, validate, keep, on_epoch);
  return result;
}

template <typename T>
Json synthesizer_to_json(const Synthesizer<T>& s) {
  return Json{{"format_version", nn::kCheckpointFormatVersion},
              {"kind", "synthesizer"},
              {"net", nn::mlp_to_json(s.net)},
              {"articulatory_normalizer", features::normalizer_to_json(s.articulatory)},
              {"acoustic_normalizer", features::normalizer_to_json(s.acoustic)}};
}

template <typename T>
Synthesizer<T> synthesizer_from_json(const Json& j) {
  nn::check_format_version(j, "synthesizer checkpoint");
  if (j.value("kind", std::string()) != "synthesizer") throw IngestionError("not a synthesizer checkpoint");
  Synthesizer<T> s;
  s.net = nn::mlp_from_json<T>(j.at("net"));
  s.articulatory = features::normalizer_from_json(j.at("articulatory_normalizer"));
  s.acoustic = features::normalizer_from_json(j.at("acoustic_normalizer"));
  if (s.articulatory.dim() != s.net.input_size() || s.acoustic.dim() != s.net.output_size()) {
    throw IngestionError("synthesizer checkpoint: normalizer widths do not match the network");
  }
  return s;
}

// Exact bytes written for a synthesizer checkpoint, and their SHA-256.
template <typename T>
std::string synthesizer_checkpoint_text(const Synthesizer<T>& s) {
  return synthesizer_to_json(s).dump(2) + "\n";
}

template <typename T>
std::string synthesizer_hash(const Synthesizer<T>& s) {
  return sha256_hex(synthesizer_checkpoint_text(s));
}

}  // namespace artvq::inversion
