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

#include <cmath>
#include <complex>
#include <numbers>

#include "artvq/features/ema.hpp"
#include "artvq/features/guided_pca.hpp"
#include "artvq/features/mel.hpp"
#include "artvq/features/normalizer.hpp"
#include "artvq/features/sequence.hpp"
#include "artvq/features/wav.hpp"

namespace artvq::features {
namespace {

const fs::path kData = ARTVQ_TEST_DATA_DIR;

Waveform tone(double hz, double seconds, double amplitude = 0.5) {
  Waveform w;
  const auto n = static_cast<std::size_t>(seconds * 16000);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amplitude * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0);
  }
  return w;
}

// ---------------------------------------------------------------- mel ----

TEST(Mel, FramingArithmetic) {
  const auto seq = compute_mel(tone(440, 1.0), MelConfig{});
  EXPECT_EQ(seq.length(), 98);
  EXPECT_EQ(seq.dim(), 40);
  EXPECT_EQ(seq.modality, Modality::kAcoustic);
}

TEST(Mel, SilenceIsTheLogFloor) {
  Waveform silence;
  silence.samples.assign(16000, 0.0);
  const auto seq = compute_mel(silence, MelConfig{});
  EXPECT_TRUE((seq.frames.array() == std::log(1e-10)).all());
}

// Slaney mel scale and filter edges recomputed from the textbook formulas.
double oracle_hz_to_mel(double f) {
  return f < 1000 ? 3 * f / 200 : 15 + 27 * std::log(f / 1000) / std::log(6.4);
}
double oracle_mel_to_hz(double m) {
  return m < 15 ? 200 * m / 3 : 1000 * std::exp((m - 15) * std::log(6.4) / 27);
}

TEST(Mel, PureToneLandsInTheBracketingFilter) {
  const Waveform w = tone(1000, 1.0);
  const auto seq = compute_mel(w, MelConfig{});
  // Direct O(N^2) DFT of frame 10 followed by hand-built triangles.
  const int start = 10 * 160;
  std::vector<double> power(257);
  for (int k = 0; k <= 256; ++k) {
    std::complex<double> acc = 0;
    for (int n = 0; n < 400; ++n) {
      const double hann = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * n / 400);
      acc += w.samples[start + n] * hann * std::polar(1.0, -2 * std::numbers::pi * k * n / 512);
    }
    power[k] = std::norm(acc);
  }
  std::vector<double> edges(42);
  const double top = oracle_hz_to_mel(8000);
  for (int i = 0; i < 42; ++i) edges[i] = oracle_mel_to_hz(top * i / 41);
  int oracle_best = 0;
  double best = -1;
  std::vector<double> oracle_mel(40);
  for (int m = 0; m < 40; ++m) {
    double acc = 0;
    for (int k = 0; k <= 256; ++k) {
      const double f = k * 16000.0 / 512;
      const double tri = std::max(0.0, std::min((f - edges[m]) / (edges[m + 1] - edges[m]),
                                                (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1])));
      acc += power[k] * tri * 2 / (edges[m + 2] - edges[m]);
    }
    oracle_mel[m] = std::log(std::max(acc, 1e-10));
    if (acc > best) {
      best = acc;
      oracle_best = m;
    }
  }
  Eigen::Index got = 0;
  seq.frames.row(10).maxCoeff(&got);
  EXPECT_EQ(got, oracle_best);
  EXPECT_LE(edges[oracle_best], 1000.0);
  EXPECT_GE(edges[oracle_best + 2], 1000.0);
  for (int m = 0; m < 40; ++m) EXPECT_NEAR(seq.frames(10, m), oracle_mel[m], 1e-8) << m;
}

TEST(Mel, ShiftByOneHopShiftsFrames) {
  Rng rng(RngSeed{3});
  Waveform w;
  for (int i = 0; i < 8000; ++i) w.samples.push_back(rng.uniform(-0.5, 0.5));
  Waveform shifted;
  shifted.samples.assign(160, 0.0);
  shifted.samples.insert(shifted.samples.end(), w.samples.begin(), w.samples.end());
  const auto a = compute_mel(w, MelConfig{});
  const auto b = compute_mel(shifted, MelConfig{});
  ASSERT_EQ(b.length(), a.length() + 1);
  EXPECT_LT((b.frames.bottomRows(a.length()) - a.frames).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mel, MatchesLibrosaReferenceFixture) {
  const Waveform w = read_wav(kData / "mel_fixture.wav");
  const auto seq = compute_mel(w, MelConfig{}, "fixture");
  std::istringstream in(read_text_file(kData / "mel_fixture_librosa.csv"));
  std::string line;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    ASSERT_EQ(cells.size(), 40u);
    for (int m = 0; m < 40; ++m) {
      EXPECT_NEAR(seq.frames(row, m), std::stod(cells[m]), 1e-8) << "frame " << row << " mel " << m;
    }
    ++row;
  }
  EXPECT_EQ(row, seq.length());
}

TEST(Mel, RejectsWrongRateAndShortSignals) {
  Waveform w = tone(440, 0.1);
  w.sample_rate = 22050;
  EXPECT_THROW(compute_mel(w, MelConfig{}), IngestionError);
  Waveform short_wav;
  short_wav.samples.assign(399, 0.1);
  EXPECT_THROW(compute_mel(short_wav, MelConfig{}), IngestionError);
  MelConfig bad;
  bad.hop = 0.03;
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(Wav, EncodeParseKeepsPcmValues) {
  Rng rng(RngSeed{8});
  Waveform w;
  for (int i = 0; i < 1000; ++i) w.samples.push_back(static_cast<double>(static_cast<int>(rng.below(65536)) - 32768) / 32768.0);
  const Waveform back = parse_wav(encode_wav(w), "mem");
  EXPECT_EQ(back.sample_rate, 16000);
  EXPECT_EQ(back.samples, w.samples);
}

TEST(Wav, RejectsStereoAndNonPcm) {
  std::string bytes = encode_wav(tone(100, 0.01));
  std::string stereo = bytes;
  stereo[22] = 2;
  EXPECT_THROW(parse_wav(stereo, "stereo"), IngestionError);
  std::string eight_bit = bytes;
  eight_bit[34] = 8;
  EXPECT_THROW(parse_wav(eight_bit, "8bit"), IngestionError);
  EXPECT_THROW(parse_wav("garbage", "junk"), IngestionError);
}

// --------------------------------------------------------- guided PCA ----

// Jacobi eigenvalue iteration: an oracle independent of Eigen's solver.
std::pair<VectorD, MatrixD> jacobi_eigen(MatrixD a) {
  const Eigen::Index n = a.rows();
  MatrixD v = MatrixD::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1 : -1) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  return {a.diagonal(), v};
}

// Coil trajectories driven by independent latent factors plus small noise.
MatrixD synthetic_ema(const ArticulatoryLayout& layout, Eigen::Index frames, Rng& rng,
                      double jaw_amplitude = 1.0, double lips_independent = 1.0) {
  MatrixD ema(frames, layout.raw_dim());
  for (Eigen::Index t = 0; t < frames; ++t) {
    const double jaw = jaw_amplitude * rng.normal();
    for (std::size_t c = 0; c < layout.coils.size(); ++c) {
      const auto role = layout.coils[c].role;
      double own_x = rng.normal(), own_y = rng.normal();
      double jaw_gain = 0.0;
      if (role == ArticulatorRole::kJaw) {
        own_x = 0.3 * jaw;
        own_y = jaw;
      } else if (role == ArticulatorRole::kLips) {
        jaw_gain = 0.8;
        own_x *= lips_independent;
        own_y *= lips_independent;
      } else if (role == ArticulatorRole::kTongue) {
        jaw_gain = 0.5;
      }
      ema(t, 2 * c) = 10.0 * c + own_x + jaw_gain * 0.2 * jaw;
      ema(t, 2 * c + 1) = -5.0 * c + 0.7 * own_y + jaw_gain * jaw;
    }
  }
  return ema;
}

TEST(GuidedPca, OutputDimensionsFollowLayout) {
  Rng rng(RngSeed{1});
  const auto mocha = fit_guided_pca(synthetic_ema(ArticulatoryLayout::mocha(), 300, rng),
                                    ArticulatoryLayout::mocha());
  EXPECT_EQ(mocha.output_dim(), 7);
  EXPECT_EQ(ArticulatoryLayout::mocha().total_components(), 7);
  const auto pb = ArticulatoryLayout::pb2007();
  const MatrixD ema = synthetic_ema(pb, 300, rng);
  const auto model = fit_guided_pca(ema, pb);
  EXPECT_EQ(model.output_dim(), 6);
  EXPECT_EQ(apply_guided_pca(model, ema).cols(), 6);
}

TEST(GuidedPca, JawDrivenLipsLeaveNoResidual) {
  Rng rng(RngSeed{2});
  const auto layout = ArticulatoryLayout::pb2007();
  const MatrixD ema = synthetic_ema(layout, 400, rng, 1.0, 0.0);
  const auto model = fit_guided_pca(ema, layout);
  const MatrixD params = apply_guided_pca(model, ema);
  const MatrixD lips = params.middleCols(1, 2);
  EXPECT_LT(lips.squaredNorm() / static_cast<double>(lips.rows()), 1e-10);
  EXPECT_LT(lips.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(GuidedPca, FrozenJawReducesToPlainRolewisePca) {
  Rng rng(RngSeed{3});
  const auto layout = ArticulatoryLayout::mocha();
  const MatrixD ema = synthetic_ema(layout, 500, rng, 0.0);
  const auto model = fit_guided_pca(ema, layout);
  for (const auto& f : model.roles) {
    EXPECT_EQ(f.jaw_slope.cwiseAbs().maxCoeff(), 0.0) << to_string(f.role);
    if (f.role == ArticulatorRole::kJaw) continue;
    MatrixD raw(ema.rows(), static_cast<Eigen::Index>(f.columns.size()));
    for (std::size_t i = 0; i < f.columns.size(); ++i) raw.col(i) = ema.col(f.columns[i]);
    const MatrixD centered = raw.rowwise() - raw.colwise().mean();
    const MatrixD cov = centered.transpose() * centered / static_cast<double>(ema.rows());
    auto [values, vectors] = jacobi_eigen(cov);
    std::vector<Eigen::Index> order(values.size());
    for (Eigen::Index i = 0; i < values.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] > values[b]; });
    for (Eigen::Index k = 0; k < f.axes.cols(); ++k) {
      const VectorD oracle = vectors.col(order[k]);
      const double align = std::abs(oracle.dot(f.axes.col(k)));
      EXPECT_NEAR(align, 1.0, 1e-8) << to_string(f.role) << " axis " << k;
    }
  }
}

TEST(GuidedPca, AxesAreOrthonormalWithPositiveDominantLoading) {
  Rng rng(RngSeed{4});
  const auto layout = ArticulatoryLayout::mocha();
  const auto model = fit_guided_pca(synthetic_ema(layout, 300, rng), layout);
  for (const auto& f : model.roles) {
    const MatrixD gram = f.axes.transpose() * f.axes;
    EXPECT_LT((gram - MatrixD::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-8);
    for (Eigen::Index k = 0; k < f.axes.cols(); ++k) {
      Eigen::Index arg = 0;
      f.axes.col(k).cwiseAbs().maxCoeff(&arg);
      EXPECT_GT(f.axes(arg, k), 0.0);
    }
  }
}

TEST(GuidedPca, ResidualFactorsAreUncorrelatedWithJaw) {
  Rng rng(RngSeed{5});
  const auto layout = ArticulatoryLayout::mocha();
  const MatrixD ema = synthetic_ema(layout, 600, rng);
  const MatrixD p = apply_guided_pca(fit_guided_pca(ema, layout), ema);
  const VectorD jaw = p.col(0).array() - p.col(0).mean();
  for (Eigen::Index k = 1; k < 6; ++k) {  // lips and tongue
    const VectorD c = p.col(k).array() - p.col(k).mean();
    const double r = jaw.dot(c) / (jaw.norm() * c.norm());
    EXPECT_LT(std::abs(r), 1e-6) << "component " << k;
  }
}

TEST(GuidedPca, TrainingMeanProjectsToZero) {
  Rng rng(RngSeed{6});
  const auto layout = ArticulatoryLayout::pb2007();
  const MatrixD ema = synthetic_ema(layout, 200, rng);
  const auto model = fit_guided_pca(ema, layout);
  const MatrixD mean_frame = ema.colwise().mean();
  EXPECT_LT(apply_guided_pca(model, mean_frame).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GuidedPca, ReconstructThenProjectIsIdempotent) {
  Rng rng(RngSeed{7});
  const auto layout = ArticulatoryLayout::mocha();
  const MatrixD ema = synthetic_ema(layout, 300, rng);
  const auto model = fit_guided_pca(ema, layout);
  const MatrixD p = apply_guided_pca(model, ema);
  const MatrixD again = apply_guided_pca(model, reconstruct_ema(model, p));
  EXPECT_LT((again - p).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(GuidedPca, ErrorsNameTheProblem) {
  Rng rng(RngSeed{8});
  const auto layout = ArticulatoryLayout::pb2007();
  MatrixD ema = synthetic_ema(layout, 200, rng);
  EXPECT_THROW(fit_guided_pca(ema.topRows(99), layout), FitError);
  for (int c : layout.role_columns(ArticulatorRole::kTongue)) ema.col(c).setConstant(3.0);
  try {
    fit_guided_pca(ema, layout);
    FAIL() << "expected FitError";
  } catch (const FitError& e) {
    EXPECT_NE(std::string(e.what()).find("tongue"), std::string::npos);
  }
  const auto model = fit_guided_pca(synthetic_ema(layout, 200, rng), layout);
  EXPECT_THROW(apply_guided_pca(model, MatrixD(MatrixD::Zero(3, 14))), DimensionError);
}

TEST(GuidedPca, JsonRoundTrip) {
  Rng rng(RngSeed{9});
  const auto layout = ArticulatoryLayout::mocha();
  const MatrixD ema = synthetic_ema(layout, 150, rng);
  const auto model = fit_guided_pca(ema, layout);
  const auto back = guided_pca_from_json(Json::parse(guided_pca_to_json(model).dump()));
  EXPECT_EQ((apply_guided_pca(back, ema) - apply_guided_pca(model, ema)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Ema, ParsesColumnsByNameAndChecksRate) {
  const auto layout = ArticulatoryLayout::pb2007();
  std::string csv = "time,ll_x,ll_y,li_x,li_y,ul_x,ul_y,tt_x,tt_y,tb_x,tb_y,td_x,td_y,extra\n";
  csv += "0,1,2,3,4,5,6,7,8,9,10,11,12,99\n0.01,1,2,3,4,5,6,7,8,9,10,11,12,99\n";
  const auto rec = parse_ema_csv(csv, layout, "mem");
  ASSERT_EQ(rec.coords.rows(), 2);
  EXPECT_EQ(rec.coords(0, 0), 3.0);  // li_x comes first in layout order
  EXPECT_EQ(rec.coords(0, 2), 5.0);  // then ul_x
  EXPECT_EQ(rec.coords(0, 4), 1.0);  // then ll_x
  std::string wrong_rate = "time,ll_x,ll_y,li_x,li_y,ul_x,ul_y,tt_x,tt_y,tb_x,tb_y,td_x,td_y,extra\n";
  wrong_rate += "0,1,2,3,4,5,6,7,8,9,10,11,12,99\n0.005,1,2,3,4,5,6,7,8,9,10,11,12,99\n";
  EXPECT_THROW(parse_ema_csv(wrong_rate, layout, "mem"), IngestionError);
  EXPECT_THROW(parse_ema_csv("time,li_x,li_y\n0,1,2\n", layout, "mem"), IngestionError);
}

// --------------------------------------------------------- normalizer ----

TEST(Normalizer, HandArithmetic) {
  MatrixD x(2, 1);
  x << 3, 7;  // mean 5, population std 2
  const auto n = fit_normalizer({&x});
  EXPECT_DOUBLE_EQ(n.mean[0], 5.0);
  EXPECT_DOUBLE_EQ(n.stddev[0], 2.0);
  EXPECT_DOUBLE_EQ(n.apply(MatrixD::Constant(1, 1, 7.0))(0, 0), 1.0);
}

TEST(Normalizer, TrainingDataIsStandardizedAndInvertible) {
  Rng rng(RngSeed{10});
  std::vector<FeatureSequence> train;
  for (int u = 0; u < 5; ++u) {
    MatrixD f(40 + u, 3);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal(4.0, 3.0) * (1 + i % 3);
    train.push_back({f, 0.01, Modality::kAcoustic, "u" + std::to_string(u)});
  }
  const auto n = fit_normalizer(train);
  MatrixD all(0, 3);
  for (const auto& s : train) {
    MatrixD grown(all.rows() + s.length(), 3);
    grown << all, n.apply(s.frames);
    all = grown;
    EXPECT_LT((n.invert(n.apply(s.frames)) - s.frames).cwiseAbs().maxCoeff(), 1e-9);
  }
  const RowVector<double> mean = all.colwise().mean();
  const RowVector<double> sd = ((all.rowwise() - mean).array().square().colwise().mean()).sqrt();
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((sd.array() - 1).abs().maxCoeff(), 1e-6);

  // Standardized data is a fixed point.
  const auto again = fit_normalizer({&all});
  EXPECT_LT((again.apply(all) - all).cwiseAbs().maxCoeff(), 1e-6);

  // Held-out data drawn from a shifted distribution keeps its offset.
  MatrixD test(100, 3);
  for (Eigen::Index i = 0; i < test.size(); ++i) test.data()[i] = rng.normal(9.0, 1.0);
  EXPECT_GT(n.apply(test).colwise().mean().cwiseAbs().minCoeff(), 0.1);
}

TEST(Normalizer, ConstantDimensionRejected) {
  MatrixD x = MatrixD::Ones(10, 2);
  x.col(0).setLinSpaced(10, 0, 1);
  EXPECT_THROW(fit_normalizer({&x}), FitError);
}

// ------------------------------------------------------------- fusion ----

FeatureSequence seq_of(Eigen::Index t, Eigen::Index f, Modality m, Rng& rng) {
  MatrixD x(t, f);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return {x, 0.01, m, "utt"};
}

TEST(Concat, DimensionsAndOrder) {
  Rng rng(RngSeed{11});
  const auto art7 = seq_of(10, 7, Modality::kArticulatory, rng);
  const auto art6 = seq_of(10, 6, Modality::kArticulatory, rng);
  const auto ac = seq_of(10, 40, Modality::kAcoustic, rng);
  const auto fused = concat_modalities(art7, ac);
  EXPECT_EQ(fused.dim(), 47);
  EXPECT_EQ(fused.length(), 10);
  EXPECT_EQ(fused.modality, Modality::kFused);
  EXPECT_EQ(concat_modalities(art6, ac).dim(), 46);
  const auto [a, b] = split_modalities(fused, 7);
  EXPECT_TRUE(a.frames == art7.frames);
  EXPECT_TRUE(b.frames == ac.frames);
}

TEST(Concat, TruncatesSmallMismatchRejectsLarge) {
  Rng rng(RngSeed{12});
  const auto art = seq_of(12, 6, Modality::kArticulatory, rng);
  const auto ac = seq_of(10, 40, Modality::kAcoustic, rng);
  EXPECT_EQ(concat_modalities(art, ac).length(), 10);
  const auto longer = seq_of(13, 6, Modality::kArticulatory, rng);
  EXPECT_THROW(concat_modalities(longer, ac), AlignmentError);
  auto other = ac;
  other.utterance_id = "different";
  EXPECT_THROW(concat_modalities(art, other), AlignmentError);
}

TEST(FeatureFile, RoundTripIsExact) {
  Rng rng(RngSeed{13});
  auto seq = seq_of(5, 3, Modality::kArticulatoryInferred, rng);
  const fs::path dir = fs::temp_directory_path() / "artvq_features_test";
  fs::remove_all(dir);
  write_feature_file(dir / "utt.csv", seq);
  const auto back = read_feature_file(dir / "utt.csv");
  EXPECT_TRUE(back.frames == seq.frames);
  EXPECT_EQ(back.modality, seq.modality);
  EXPECT_EQ(back.utterance_id, "utt");
  fs::remove_all(dir);
}

}  // namespace
}  // namespace artvq::features
