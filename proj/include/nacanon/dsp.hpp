// Copyright 2026 nacanon authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NACANON_DSP_HPP
#define NACANON_DSP_HPP

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "nacanon/matrix.hpp"

namespace nacanon::dsp {

// Log-energy floor used throughout feature extraction.
inline constexpr double kLogFloor = 1e-10;

struct Waveform {
  std::vector<double> samples;  // amplitudes in [-1, 1]
  int sample_rate_hz = 16000;
};

enum class Window { kHann, kRect };

struct FrameSpec {
  int frame_len = 400;
  int hop = 320;
  Window window = Window::kHann;

  // T = 1 + floor((n - frame_len) / hop); 0 if the signal is too short.
  std::size_t num_frames(std::size_t num_samples) const {
    if (num_samples < static_cast<std::size_t>(frame_len)) return 0;
    return 1 + (num_samples - frame_len) / hop;
  }
};

struct FeatureMatrix {
  Matrix frames;  // T x D
  FrameSpec frame_spec;
};

struct F0Frame {
  bool voiced = false;
  double f0_hz = 0.0;
};

struct F0Curve {
  std::vector<F0Frame> frames;
  FrameSpec frame_spec;
};

// 16-bit mono PCM RIFF/WAVE only.
Waveform read_wav(const std::string& path);
void write_wav(const Waveform& w, const std::string& path);

// n_mels log triangular-filterbank energies plus one log-F0 channel
// (log f0 for voiced frames, 0 for unvoiced).
FeatureMatrix frame_features(const Waveform& w, const FrameSpec& spec,
                             int n_mels);

// Normalized-autocorrelation pitch tracker. A frame is voiced when the
// peak over lags [sr/500, sr/50] reaches 0.5 and the frame RMS is at
// least 1e-4; the winning lag is refined by parabolic interpolation.
F0Curve estimate_f0(const Waveform& w, const FrameSpec& spec);

// In-place radix-2 FFT; n must be a power of two.
void fft(std::vector<std::complex<double>>& x, bool inverse);
std::size_t next_pow2(std::size_t n);

std::vector<double> hann_window(int n);

// Triangular mel filterbank, n_mels x (n_fft/2 + 1).
Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz);

}  // namespace nacanon::dsp

#endif  // NACANON_DSP_HPP
