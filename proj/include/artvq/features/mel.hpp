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

// Log mel spectrogram.
//
// Recipe: frames of `window` seconds every `hop` seconds with no edge
// padding; periodic Hann window; zero padding to `fft_size`; power spectrum;
// triangular filters on the Slaney mel scale (linear below 1 kHz, logarithmic
// above) spanning 0 Hz to Nyquist, each scaled to unit area 2/(f_hi - f_lo);
// natural log with a power floor. This matches librosa's melspectrogram with
// htk=False, norm="slaney", power=2 applied to the same windowed frames.

#pragma once

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "artvq/features/sequence.hpp"
#include "artvq/features/wav.hpp"

namespace artvq::features {

struct MelConfig {
  int sample_rate = 16000;
  double window = 0.025;
  double hop = 0.010;
  int n_mels = 40;
  int fft_size = 512;
  double floor = 1e-10;

  int window_samples() const { return static_cast<int>(std::lround(window * sample_rate)); }
  int hop_samples() const { return static_cast<int>(std::lround(hop * sample_rate)); }

  void validate() const {
    if (n_mels < 1) throw ParameterError("n_mels must be >= 1");
    if (hop > window) throw ParameterError("hop must not exceed the window");
    if (hop_samples() < 1) throw ParameterError("hop shorter than one sample");
    if (fft_size < window_samples()) throw ParameterError("fft_size shorter than the window");
    if (!(floor > 0)) throw ParameterError("log floor must be positive");
  }
};

inline double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz >= min_log_hz) return min_log_mel + std::log(hz / min_log_hz) / logstep;
  return hz / f_sp;
}

inline double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel >= min_log_mel) return min_log_hz * std::exp(logstep * (mel - min_log_mel));
  return f_sp * mel;
}

// n_mels + 2 band edges, equally spaced in mel between 0 Hz and Nyquist.
inline std::vector<double> mel_band_edges(const MelConfig& cfg) {
  const double lo = hz_to_mel(0.0);
  const double hi = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / (edges.size() - 1));
  }
  return edges;
}

// [n_mels x (fft_size/2 + 1)] triangular weights.
inline MatrixD mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const int bins = cfg.fft_size / 2 + 1;
  const auto edges = mel_band_edges(cfg);
  MatrixD w = MatrixD::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    const double norm = 2.0 / (right - left);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.fft_size;
      const double rising = (f - left) / (center - left);
      const double falling = (right - f) / (right - center);
      w(m, k) = std::max(0.0, std::min(rising, falling)) * norm;
    }
  }
  return w;
}

inline std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / length);
  }
  return w;
}

inline Eigen::Index mel_frame_count(std::size_t samples, const MelConfig& cfg) {
  const auto win = static_cast<std::size_t>(cfg.window_samples());
  if (samples < win) return 0;
  return 1 + static_cast<Eigen::Index>((samples - win) / static_cast<std::size_t>(cfg.hop_samples()));
}

namespace detail {

// FFTW planning is not thread-safe; executing an existing plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

template <typename T>
struct FftwFree {
  void operator()(T* p) const { fftw_free(p); }
};

}  // namespace detail

// Power spectra of every frame, [T x (fft_size/2 + 1)].
inline MatrixD power_spectrogram(const std::vector<double>& samples, const MelConfig& cfg) {
  cfg.validate();
  const int win = cfg.window_samples();
  const int hop = cfg.hop_samples();
  const int n = cfg.fft_size;
  const int bins = n / 2 + 1;
  const Eigen::Index frames = mel_frame_count(samples.size(), cfg);

  std::unique_ptr<double, detail::FftwFree<double>> in(fftw_alloc_real(n));
  std::unique_ptr<fftw_complex, detail::FftwFree<fftw_complex>> out(fftw_alloc_complex(bins));
  std::unique_ptr<fftw_plan_s, detail::FftwPlanDeleter> plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(n, in.get(), out.get(), FFTW_ESTIMATE));
  }
  const auto window = hann_window(win);
  MatrixD power(frames, bins);
  for (Eigen::Index t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < win; ++i) in.get()[i] = samples[start + i] * window[i];
    for (int i = win; i < n; ++i) in.get()[i] = 0.0;
    fftw_execute(plan.get());
    for (int k = 0; k < bins; ++k) {
      const double re = out.get()[k][0];
      const double im = out.get()[k][1];
      power(t, k) = re * re + im * im;
    }
  }
  return power;
}

inline FeatureSequence compute_mel(const Waveform& wav, const MelConfig& cfg,
                                   const std::string& utterance_id = {}) {
  cfg.validate();
  if (wav.sample_rate != cfg.sample_rate) {
    throw IngestionError("utterance '" + utterance_id + "': sample rate " +
                         std::to_string(wav.sample_rate) + " Hz, expected " +
                         std::to_string(cfg.sample_rate) + " Hz");
  }
  if (mel_frame_count(wav.samples.size(), cfg) < 1) {
    throw IngestionError("utterance '" + utterance_id + "' is shorter than one analysis window");
  }
  const MatrixD power = power_spectrogram(wav.samples, cfg);
  const MatrixD bank = mel_filterbank(cfg);
  FeatureSequence seq;
  seq.frames = (power * bank.transpose()).array().max(cfg.floor).log().matrix();
  seq.frame_period = cfg.hop;
  seq.modality = Modality::kAcoustic;
  seq.utterance_id = utterance_id;
  return seq;
}

}  // namespace artvq::features
