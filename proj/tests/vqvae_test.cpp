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

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "artvq/nn/gradcheck.hpp"
#include "artvq/vqvae/codebook.hpp"
#include "artvq/vqvae/model.hpp"
#include "artvq/vqvae/train.hpp"

namespace artvq::vqvae {
namespace {

MatrixD random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  MatrixD m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

// Exhaustive scan written without the library helpers.
int brute_force_argmin(const VectorD& z, const MatrixD& codes) {
  std::vector<double> d(static_cast<std::size_t>(codes.rows()));
  for (Eigen::Index k = 0; k < codes.rows(); ++k) {
    double acc = 0;
    for (Eigen::Index j = 0; j < codes.cols(); ++j) acc += (z[j] - codes(k, j)) * (z[j] - codes(k, j));
    d[static_cast<std::size_t>(k)] = acc;
  }
  return static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin());
}

Codebook<double> make_codebook(const MatrixD& rows) {
  Codebook<double> cb(rows.rows(), rows.cols());
  cb.embeddings.value = rows;
  return cb;
}

TEST(Quantize, ExactMatchSelectsThatRow) {
  Rng rng(RngSeed{1});
  const auto cb = make_codebook(random_matrix(6, 4, rng));
  const VectorD z = cb.embeddings.value.row(3).transpose();
  const auto r = quantize(z, cb);
  EXPECT_EQ(r.code_index, 3);
  EXPECT_EQ(r.squared_distance, 0.0);
  EXPECT_TRUE(r.embedding == z);
}

TEST(Quantize, HandWorkedExample) {
  MatrixD rows(3, 2);
  rows << 0, 0, 1, 1, 2, 2;
  VectorD z(2);
  z << 0.9, 0.8;
  // squared distances: 1.45, 0.05, 2.45
  EXPECT_EQ(quantize(z, make_codebook(rows)).code_index, 1);
}

TEST(Quantize, MatchesBruteForceAndBreaksTiesLow) {
  Rng rng(RngSeed{2});
  for (int trial = 0; trial < 1000; ++trial) {
    const MatrixD codes = random_matrix(8, 4, rng);
    const VectorD z = random_matrix(4, 1, rng);
    const auto r = quantize(z, make_codebook(codes));
    ASSERT_EQ(r.code_index, brute_force_argmin(z, codes));
    for (int k = 0; k < 8; ++k) EXPECT_EQ(r.posterior(k), k == r.code_index ? 1.0 : 0.0);
  }
  // Duplicated rows and a point equidistant from two rows.
  MatrixD codes(4, 2);
  codes << 1, 0, -1, 0, 1, 0, 0, 5;
  VectorD origin = VectorD::Zero(2);
  EXPECT_EQ(quantize(origin, make_codebook(codes)).code_index, 0);
  VectorD right(2);
  right << 1, 0;
  EXPECT_EQ(quantize(right, make_codebook(codes)).code_index, 0);
}

TEST(Quantize, DimensionMismatchThrows) {
  Rng rng(RngSeed{3});
  const auto cb = make_codebook(random_matrix(4, 3, rng));
  EXPECT_THROW(quantize(VectorD(VectorD::Zero(2)), cb), DimensionError);
}

TrainConfig small_config(std::uint64_t seed, int k = 8, int d = 4) {
  TrainConfig cfg;
  cfg.codebook_size = k;
  cfg.embedding_dim = d;
  cfg.encoder_hidden = {24, 24, 24};
  cfg.decoder_hidden = {24, 24, 24};
  cfg.seed = RngSeed{seed};
  return cfg;
}

TEST(Loss, ZeroAtTheFixedPoint) {
  Rng rng(RngSeed{4});
  const auto cfg = small_config(4);
  VqVaeModel<double> model(3, features::Modality::kAcoustic, cfg, rng);
  model.codebook.embeddings.value = random_matrix(8, 4, rng);
  MatrixD x0(1, 3);
  x0 << 0.5, -1.0, 2.0;
  // Encoder ignores its input and emits codebook row 3; decoder emits x0.
  auto enc_params = model.encoder.parameters();
  auto dec_params = model.decoder.parameters();
  enc_params[enc_params.size() - 2]->value.setZero();
  enc_params.back()->value = model.codebook.embeddings.value.row(3);
  dec_params[dec_params.size() - 2]->value.setZero();
  dec_params.back()->value = x0;
  const MatrixD x = x0.replicate(5, 1);
  const auto l = vqvae_loss(x, model);
  EXPECT_EQ(l.total, 0.0);
  EXPECT_EQ(l.reconstruction, 0.0);
  EXPECT_EQ(l.codebook, 0.0);
}

TEST(Loss, TermsMatchIndependentRecomputation) {
  Rng rng(RngSeed{5});
  const auto cfg = small_config(5);
  VqVaeModel<double> model(3, features::Modality::kAcoustic, cfg, rng);
  model.codebook.embeddings.value = random_matrix(8, 4, rng, 0.3);
  const MatrixD x = random_matrix(7, 3, rng);
  const auto l = vqvae_loss(x, model, 0.25, 1.0);

  const MatrixD z = model.encoder.forward(x);
  double recon = 0, vq = 0;
  for (Eigen::Index n = 0; n < x.rows(); ++n) {
    const int k = brute_force_argmin(z.row(n).transpose(), model.codebook.embeddings.value);
    const MatrixD q = model.codebook.embeddings.value.row(k);
    const MatrixD xh = model.decoder.forward(q);
    for (Eigen::Index j = 0; j < 3; ++j) recon += (x(n, j) - xh(0, j)) * (x(n, j) - xh(0, j));
    for (Eigen::Index j = 0; j < 4; ++j) vq += (z(n, j) - q(0, j)) * (z(n, j) - q(0, j));
  }
  recon /= 7;
  vq /= 7;
  EXPECT_NEAR(l.reconstruction, recon, 1e-10);
  EXPECT_NEAR(l.codebook, vq, 1e-10);
  EXPECT_NEAR(l.commitment, vq, 1e-10);
  EXPECT_NEAR(l.total, recon + vq + 0.25 * vq, 1e-10);
  EXPECT_GE(l.reconstruction, 0);
  const auto no_commit = vqvae_loss(x, model, 0.0, 1.0);
  EXPECT_NEAR(no_commit.total, recon + vq, 1e-10);
}

// With the codebook frozen, the encoder gradient from the straight-through
// estimator equals the exact gradient of the loss where the quantizer is
// replaced by z -> z + (e_k - z_0): the selected code shifted along with z.
TEST(StraightThrough, EncoderGradientMatchesShiftedIdentitySurrogate) {
  Rng rng(RngSeed{6});
  auto cfg = small_config(6);
  cfg.commitment_weight = 0.0;
  cfg.codebook_weight = 0.0;
  VqVaeModel<double> model(3, features::Modality::kAcoustic, cfg, rng);
  model.codebook.embeddings.value = random_matrix(8, 4, rng, 0.5);
  const MatrixD x = random_matrix(6, 3, rng);
  const MatrixD z0 = model.encoder.forward(x);
  const MatrixD offset =
      gather_codes(model.codebook, quantize_rows(z0, model.codebook)) - z0;

  auto surrogate = [&] {
    const MatrixD z = model.encoder.forward(x);
    const MatrixD xh = model.decoder.forward(MatrixD(z + offset));
    return (x - xh).squaredNorm() / 6.0;
  };
  auto analytic = [&] {
    model.zero_grad();
    Rng unused(RngSeed{0});
    vqvae_forward_backward(x, model, cfg, unused, nn::Mode::kEval);
  };
  const auto report = nn::gradient_check(surrogate, analytic, model.encoder.parameters(), 1e-3);
  EXPECT_TRUE(report.passed()) << report.max_relative_error();
}

TEST(Gradients, DecoderAndCodebookMatchFiniteDifferences) {
  Rng rng(RngSeed{7});
  const auto cfg = small_config(7);
  VqVaeModel<double> model(3, features::Modality::kAcoustic, cfg, rng);
  model.codebook.embeddings.value = random_matrix(8, 4, rng, 0.5);
  const MatrixD x = random_matrix(9, 3, rng);
  auto analytic = [&] {
    model.zero_grad();
    Rng mask(RngSeed{11});
    vqvae_forward_backward(x, model, cfg, mask);
  };
  // Decoder parameters see the full loss.
  auto full_loss = [&] {
    Rng mask(RngSeed{11});
    const MatrixD z = model.encoder.forward(x, nn::Mode::kTrain, mask);
    const MatrixD q = gather_codes(model.codebook, quantize_rows(z, model.codebook));
    const MatrixD xh = model.decoder.forward(q, nn::Mode::kTrain, mask);
    return ((x - xh).squaredNorm() + 1.25 * (z - q).squaredNorm()) / 9.0;
  };
  auto dec = nn::gradient_check(full_loss, analytic, model.decoder.parameters(), 1e-4);
  EXPECT_TRUE(dec.passed()) << dec.max_relative_error();
  // The codebook only receives the codebook term (the decoder path is routed
  // to the encoder).
  auto codebook_term = [&] {
    Rng mask(RngSeed{11});
    const MatrixD z = model.encoder.forward(x, nn::Mode::kTrain, mask);
    const MatrixD q = gather_codes(model.codebook, quantize_rows(z, model.codebook));
    return (z - q).squaredNorm() / 9.0;
  };
  auto cb = nn::gradient_check(codebook_term, analytic, {&model.codebook.embeddings}, 1e-4);
  EXPECT_TRUE(cb.passed()) << cb.max_relative_error();
}

std::vector<features::FeatureSequence> sequences_from(const MatrixD& frames, int per_seq,
                                                      const std::string& prefix) {
  std::vector<features::FeatureSequence> out;
  for (Eigen::Index r = 0; r < frames.rows(); r += per_seq) {
    const Eigen::Index n = std::min<Eigen::Index>(per_seq, frames.rows() - r);
    out.push_back({frames.middleRows(r, n), 0.01, features::Modality::kAcoustic,
                   prefix + std::to_string(r)});
  }
  return out;
}

Normalizer identity_normalizer(Eigen::Index dim) {
  Normalizer n;
  n.mean = VectorD::Zero(dim);
  n.stddev = VectorD::Ones(dim);
  return n;
}

TrainConfig training_config(std::uint64_t seed) {
  auto cfg = small_config(seed, 8, 32);
  cfg.encoder_hidden = {64, 64, 64};
  cfg.decoder_hidden = {64, 64, 64};
  return cfg;
}

// In train mode a batch of identical frames has zero variance, so with
// dropout ahead of batch norm the hidden activations carry only the dropout
// noise. Dropout is disabled here and patience covers the whole budget,
// since the running statistics need a few dozen steps to settle.
TEST(Training, ConstantDataIsReconstructed) {
  MatrixD frames = MatrixD::Zero(160, 3);
  frames.rowwise() = (RowVector<double>(3) << 0.7, -0.4, 1.1).finished();
  const auto train = sequences_from(frames, 10, "t");
  const auto val = sequences_from(frames.topRows(40), 10, "v");
  auto cfg = small_config(8);
  cfg.dropout = 0.0;
  cfg.max_epochs = 200;
  cfg.patience = 200;
  const auto result = train_vqvae<double>(train, val, cfg, identity_normalizer(3));
  EXPECT_LE(result.history.size(), 200u);
  EXPECT_LT(result.history[result.best_epoch - 1].validation_mse, 1e-3);
}

struct Clusters {
  std::vector<features::FeatureSequence> train, val;
  std::vector<int> val_labels;
};

// Lloyd iterations from farthest-point seeding.
std::vector<int> kmeans_labels(const MatrixD& x, int k) {
  MatrixD c(k, x.cols());
  c.row(0) = x.row(0);
  for (int j = 1; j < k; ++j) {
    Eigen::Index far = 0;
    double far_d = -1;
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      double d = std::numeric_limits<double>::infinity();
      for (int i = 0; i < j; ++i) d = std::min(d, (x.row(n) - c.row(i)).squaredNorm());
      if (d > far_d) far_d = d, far = n;
    }
    c.row(j) = x.row(far);
  }
  std::vector<int> label(static_cast<std::size_t>(x.rows()), 0);
  for (int it = 0; it < 50; ++it) {
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < k; ++i) {
        const double d = (x.row(n) - c.row(i)).squaredNorm();
        if (d < best) best = d, label[static_cast<std::size_t>(n)] = i;
      }
    }
    MatrixD sum = MatrixD::Zero(k, x.cols());
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index n = 0; n < x.rows(); ++n) {
      sum.row(label[static_cast<std::size_t>(n)]) += x.row(n);
      ++cnt[static_cast<std::size_t>(label[static_cast<std::size_t>(n)])];
    }
    for (int i = 0; i < k; ++i)
      if (cnt[static_cast<std::size_t>(i)] > 0) c.row(i) = sum.row(i) / cnt[static_cast<std::size_t>(i)];
  }
  return label;
}

// Four well-separated Gaussian clusters in 8-D; each sequence stays in one
// cluster.
Clusters four_clusters(std::uint64_t seed) {
  Rng rng(RngSeed{seed});
  MatrixD centers = MatrixD::Zero(4, 8);
  for (int c = 0; c < 4; ++c) {
    centers(c, 2 * c) = 6.0;
    centers(c, 2 * c + 1) = -3.0;
  }
  Clusters out;
  for (int s = 0; s < 200; ++s) {
    const int c = s % 4;
    MatrixD f(10, 8);
    for (Eigen::Index t = 0; t < 10; ++t)
      for (Eigen::Index j = 0; j < 8; ++j) f(t, j) = centers(c, j) + rng.normal(0.0, 0.05);
    features::FeatureSequence seq{f, 0.01, features::Modality::kAcoustic, "s" + std::to_string(s)};
    if (s < 160) {
      out.train.push_back(seq);
    } else {
      out.val.push_back(seq);
      out.val_labels.push_back(c);
    }
  }
  return out;
}

TEST(Training, SeparatedClustersGetDistinctDominantCodes) {
  auto data = four_clusters(9);
  // Cluster identities come from k-means on the raw validation frames.
  const MatrixD raw_frames = stack_frames<double>(data.val);
  const auto oracle = kmeans_labels(raw_frames, 4);
  for (std::size_t n = 0; n < oracle.size(); ++n) {
    const std::size_t seq = n / 10;
    ASSERT_EQ(oracle[n], oracle[seq * 10]);
    if (seq > 0 && data.val_labels[seq] != data.val_labels[seq - 1] && n % 10 == 0) {
      ASSERT_NE(oracle[n], oracle[n - 1]);
    }
  }
  const auto norm = features::fit_normalizer(data.train);
  for (auto* split : {&data.train, &data.val})
    for (auto& s : *split) s = norm.apply(s);
  auto result = train_vqvae<double>(data.train, data.val, training_config(9), norm);
  std::map<int, std::map<int, int>> counts;  // cluster -> code -> frames
  std::size_t frame = 0;
  for (std::size_t i = 0; i < data.val.size(); ++i) {
    auto raw = norm.invert(data.val[i]);
    for (int code : encode_sequence(result.model, raw).codes) ++counts[oracle[frame++]][code];
  }
  EXPECT_LT(result.history[result.best_epoch - 1].validation_mse, 0.1);
  std::set<int> dominant;
  for (auto& [cluster, hist] : counts) {
    int best = -1, best_n = 0, total = 0;
    for (auto [code, n] : hist) {
      total += n;
      if (n > best_n) best_n = n, best = code;
    }
    EXPECT_GT(static_cast<double>(best_n) / total, 0.9) << "cluster " << cluster;
    dominant.insert(best);
  }
  EXPECT_EQ(dominant.size(), 4u);
  std::vector<features::FeatureSequence> raw_val;
  for (auto& s : data.val) raw_val.push_back(norm.invert(s));
  EXPECT_GE(codebook_usage(result.model, raw_val).codes_above(0.05), 4u);
}

TEST(Training, ReturnsTheBestValidationSnapshotDeterministically) {
  auto data = four_clusters(10);
  const auto norm = features::fit_normalizer(data.train);
  for (auto* split : {&data.train, &data.val})
    for (auto& s : *split) s = norm.apply(s);
  auto cfg = training_config(10);
  cfg.max_epochs = 15;
  cfg.patience = 3;
  auto a = train_vqvae<double>(data.train, data.val, cfg, norm);
  auto b = train_vqvae<double>(data.train, data.val, cfg, norm);
  EXPECT_EQ(vqvae_to_json(a.model, cfg).dump(), vqvae_to_json(b.model, cfg).dump());
  for (const auto& e : a.history) EXPECT_LE(a.best_validation_loss, e.validation_loss);
  const auto check = vqvae_loss(stack_frames<double>(data.val), a.model);
  EXPECT_DOUBLE_EQ(check.total, a.best_validation_loss);
  EXPECT_GT(a.model.codebook.min_separation(), 1e-10);
}

TEST(Training, RejectsEmptySplitsAndForeignNormalizers) {
  auto data = four_clusters(11);
  const auto cfg = small_config(11);
  const auto norm = features::fit_normalizer(data.train);
  EXPECT_THROW(train_vqvae<double>(data.train, {}, cfg, norm), ConfigurationError);
  EXPECT_THROW(train_vqvae<double>({}, data.val, cfg, norm), ConfigurationError);
  auto leaked = norm;
  leaked.fit_split = "test";
  EXPECT_THROW(train_vqvae<double>(data.train, data.val, cfg, leaked), ConfigurationError);
}

class EncodeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(RngSeed{12});
    model_ = VqVaeModel<double>(5, features::Modality::kArticulatory, small_config(12), rng);
    model_.codebook.embeddings.value = random_matrix(8, 4, rng, 0.2);
    model_.normalizer = identity_normalizer(5);
  }
  VqVaeModel<double> model_;
};

TEST_F(EncodeTest, SingleFrameAndConstantFrames) {
  Rng rng(RngSeed{13});
  features::FeatureSequence one{random_matrix(1, 5, rng), 0.01, features::Modality::kArticulatory, "u"};
  EXPECT_EQ(encode_sequence(model_, one).frames.size(), 1u);
  features::FeatureSequence same{random_matrix(1, 5, rng).replicate(6, 1), 0.01,
                                 features::Modality::kArticulatory, "u"};
  const auto enc = encode_sequence(model_, same);
  EXPECT_TRUE(std::all_of(enc.codes.begin(), enc.codes.end(), [&](int c) { return c == enc.codes[0]; }));
}

TEST_F(EncodeTest, FramesAreIndependentAndPermutationEquivariant) {
  Rng rng(RngSeed{14});
  features::FeatureSequence seq{random_matrix(12, 5, rng), 0.01, features::Modality::kArticulatory, "u"};
  const auto whole = encode_sequence(model_, seq);
  for (Eigen::Index t = 0; t < 12; ++t) {
    features::FeatureSequence single{seq.frames.row(t), 0.01, features::Modality::kArticulatory, "u"};
    const auto enc = encode_sequence(model_, single);
    EXPECT_EQ(enc.codes[0], whole.codes[static_cast<std::size_t>(t)]);
    EXPECT_LT((enc.frames[0].encoder_output - whole.frames[t].encoder_output).cwiseAbs().maxCoeff(), 1e-12);
  }
  std::vector<Eigen::Index> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  features::FeatureSequence permuted = seq;
  for (Eigen::Index t = 0; t < 12; ++t) permuted.frames.row(t) = seq.frames.row(perm[t]);
  const auto p = encode_sequence(model_, permuted);
  for (Eigen::Index t = 0; t < 12; ++t) EXPECT_EQ(p.codes[t], whole.codes[perm[t]]);
}

TEST_F(EncodeTest, ModalityAndWidthChecked) {
  Rng rng(RngSeed{15});
  features::FeatureSequence ac{random_matrix(3, 5, rng), 0.01, features::Modality::kAcoustic, "u"};
  EXPECT_THROW(encode_sequence(model_, ac), ModalityError);
  features::FeatureSequence narrow{random_matrix(3, 4, rng), 0.01, features::Modality::kArticulatory, "u"};
  EXPECT_THROW(encode_sequence(model_, narrow), ModalityError);
  features::FeatureSequence inferred{random_matrix(3, 5, rng), 0.01,
                                     features::Modality::kArticulatoryInferred, "u"};
  EXPECT_NO_THROW(encode_sequence(model_, inferred));
}

TEST_F(EncodeTest, CheckpointRoundTripEncodesIdentically) {
  Rng rng(RngSeed{16});
  features::FeatureSequence seq{random_matrix(9, 5, rng), 0.01, features::Modality::kArticulatory, "u"};
  auto back = vqvae_from_json<double>(Json::parse(vqvae_to_json(model_, small_config(12)).dump()));
  EXPECT_TRUE(encode_sequence(back, seq).embeddings == encode_sequence(model_, seq).embeddings);
}

TEST(Usage, PerplexityBounds) {
  EXPECT_DOUBLE_EQ(usage_from_codes(std::vector<int>(50, 3), 64).perplexity, 1.0);
  std::vector<int> uniform;
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 64; ++k) uniform.push_back(k);
  const auto u = usage_from_codes(uniform, 64);
  EXPECT_NEAR(u.perplexity, 64.0, 1e-9);
  EXPECT_EQ(u.total, 192u);
}

}  // namespace
}  // namespace artvq::vqvae
