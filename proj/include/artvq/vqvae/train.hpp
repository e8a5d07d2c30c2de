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

#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "artvq/vqvae/model.hpp"

namespace artvq::vqvae {

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_mse = 0.0;  // per-element reconstruction error
};

inline Json history_to_json(const std::vector<EpochRecord>& h) {
  Json a = Json::array();
  for (const auto& e : h) {
    a.push_back({{"epoch", e.epoch},
                 {"train_loss", e.train_loss},
                 {"validation_loss", e.validation_loss},
                 {"validation_mse", e.validation_mse}});
  }
  return a;
}

// Stacks the frames of the selected sequences, casting to the training type.
template <typename T>
Matrix<T> stack_frames(const std::vector<FeatureSequence>& seqs,
                       const std::vector<std::size_t>& which) {
  Eigen::Index rows = 0;
  for (auto i : which) rows += seqs[i].length();
  Matrix<T> out(rows, which.empty() ? 0 : seqs[which.front()].dim());
  Eigen::Index r = 0;
  for (auto i : which) {
    out.middleRows(r, seqs[i].length()) = seqs[i].frames.template cast<T>();
    r += seqs[i].length();
  }
  return out;
}

template <typename T>
Matrix<T> stack_frames(const std::vector<FeatureSequence>& seqs) {
  std::vector<std::size_t> all(seqs.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return stack_frames<T>(seqs, all);
}

template <typename T>
struct TrainResult {
  VqVaeModel<T> model;  // snapshot with the lowest validation loss
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_validation_loss = std::numeric_limits<double>::infinity();

  Json summary() const {
    return Json{{"best_epoch", best_epoch},
                {"best_validation_loss", best_validation_loss},
                {"epochs_run", static_cast<int>(history.size())},
                {"history", history_to_json(history)}};
  }
};

// Rows for the initial codebook: encoder outputs of K training frames drawn
// without replacement (with replacement when there are fewer than K frames),
// plus a small jitter so that no two rows coincide.
template <typename T>
void init_codebook_from_encoder(VqVaeModel<T>& model, const Matrix<T>& train_frames,
                                double jitter, Rng& rng) {
  const Matrix<T> z = model.encoder.forward(train_frames);
  const Eigen::Index k = model.codebook.size();
  std::vector<Eigen::Index> rows;
  if (z.rows() >= k) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(z.rows()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < k; ++i) {
      const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(z.rows() - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      rows.push_back(idx[static_cast<std::size_t>(i)]);
    }
  } else {
    for (Eigen::Index i = 0; i < k; ++i) {
      rows.push_back(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(z.rows()))));
    }
  }
  auto& e = model.codebook.embeddings.value;
  for (Eigen::Index i = 0; i < k; ++i) {
    e.row(i) = z.row(rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index d = 0; d < e.cols(); ++d) e(i, d) += static_cast<T>(rng.normal(0.0, jitter));
  }
}

// Trains on already-normalized sequences. `normalizer` is stored in the model
// for later encoding and must have been fitted on the training split.
template <typename T>
TrainResult<T> train_vqvae(const std::vector<FeatureSequence>& train,
                           const std::vector<FeatureSequence>& validation, const TrainConfig& cfg,
                           const Normalizer& normalizer,
                           const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train.empty() || validation.empty()) {
    throw ConfigurationError("train_vqvae: training and validation splits must be non-empty");
  }
  if (normalizer.fit_split != "train") {
    throw ConfigurationError("train_vqvae: normalizer was fitted on the '" + normalizer.fit_split +
                             "' split");
  }
  const Eigen::Index dim = train.front().dim();
  const Modality modality = train.front().modality;
  for (const auto* split : {&train, &validation}) {
    for (const auto& s : *split) {
      if (s.dim() != dim) {
        throw DimensionError("train_vqvae: utterance '" + s.utterance_id + "' has " +
                             std::to_string(s.dim()) + " dims, expected " + std::to_string(dim));
      }
      if (s.length() < 1) throw ConfigurationError("train_vqvae: empty utterance " + s.utterance_id);
    }
  }

  Rng init_rng(derive_seed(cfg.seed, 1));
  Rng shuffle_rng(derive_seed(cfg.seed, 2));
  Rng dropout_rng(derive_seed(cfg.seed, 3));

  TrainResult<T> result;
  VqVaeModel<T> model(dim, modality, cfg, init_rng);
  model.normalizer = normalizer;
  const Matrix<T> all_train = stack_frames<T>(train);
  const Matrix<T> all_val = stack_frames<T>(validation);
  init_codebook_from_encoder(model, all_train, cfg.codebook_init_jitter, init_rng);

  auto params = model.parameters();
  nn::AdamState<T> adam(cfg.adam);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    Eigen::Index frame_sum = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_sequences)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_sequences));
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(b),
                                           order.begin() + static_cast<std::ptrdiff_t>(e));
      const Matrix<T> x = stack_frames<T>(train, batch);
      model.zero_grad();
      const LossTerms l = vqvae_forward_backward(x, model, cfg, dropout_rng);
      nn::adam_step(params, adam);
      loss_sum += l.total * static_cast<double>(l.frames);
      frame_sum += l.frames;
    }
    const LossTerms val =
        vqvae_loss(all_val, model, cfg.commitment_weight, cfg.codebook_weight);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(frame_sum), val.total,
                    val.reconstruction_mse(dim)};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (val.total < result.best_validation_loss) {
      result.best_validation_loss = val.total;
      result.best_epoch = epoch;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace artvq::vqvae
