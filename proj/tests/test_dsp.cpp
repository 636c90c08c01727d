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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "nacanon/common.hpp"
#include "nacanon/dsp.hpp"

using namespace nacanon;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

dsp::Waveform sine(double freq, double seconds, int sr = 16000,
                   double amp = 0.5) {
  dsp::Waveform w;
  w.sample_rate_hz = sr;
  const std::size_t n = static_cast<std::size_t>(seconds * sr);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / sr);
  return w;
}

}  // namespace

TEST_CASE("wav round trip of a random waveform") {
  Rng rng(1);
  dsp::Waveform w;
  w.samples.resize(16000);
  for (auto& s : w.samples) s = rng.uniform(-1.0, 1.0);
  const std::string path = temp_path("nac_test_rt.wav");
  dsp::write_wav(w, path);
  const dsp::Waveform r = dsp::read_wav(path);
  REQUIRE(r.samples.size() == w.samples.size());
  CHECK(r.sample_rate_hz == 16000);
  double max_err = 0.0;
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    max_err = std::max(max_err, std::abs(w.samples[i] - r.samples[i]));
  CHECK(max_err <= 1.0 / 32768.0);
  std::remove(path.c_str());
}

TEST_CASE("wav saturation and zero payload") {
  dsp::Waveform w;
  w.samples = {2.0, -2.0, 0.0};
  const std::string path = temp_path("nac_test_sat.wav");
  dsp::write_wav(w, path);
  const dsp::Waveform r = dsp::read_wav(path);
  CHECK(r.samples[0] == doctest::Approx(32767.0 / 32768.0));
  CHECK(r.samples[1] == doctest::Approx(-1.0));
  CHECK(r.samples[2] == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("empty waveform writes a valid zero-length file") {
  const std::string path = temp_path("nac_test_empty.wav");
  dsp::write_wav(dsp::Waveform{}, path);
  const dsp::Waveform r = dsp::read_wav(path);
  CHECK(r.samples.empty());
  std::remove(path.c_str());
}

TEST_CASE("non-RIFF file is a format error") {
  const std::string path = temp_path("nac_test_bad.wav");
  std::ofstream(path) << "NOT A WAVE FILE AT ALL PADDING PADDING PADDING";
  CHECK_THROWS_AS(dsp::read_wav(path), FormatError);
  std::remove(path.c_str());
}

TEST_CASE("missing file is an io error") {
  CHECK_THROWS_AS(dsp::read_wav(temp_path("nac_no_such_file.wav")), IoError);
}

TEST_CASE("frame count arithmetic") {
  dsp::FrameSpec spec{400, 320, dsp::Window::kHann};
  CHECK(spec.num_frames(16000) == 49);
  CHECK(spec.num_frames(399) == 0);
  CHECK(spec.num_frames(400) == 1);
  dsp::FrameSpec ac{640, 320, dsp::Window::kHann};
  CHECK(ac.num_frames(16000) == 49);
}

TEST_CASE("frame features on silence hit the log floor") {
  dsp::Waveform w;
  w.samples.assign(16000, 0.0);
  const auto f =
      dsp::frame_features(w, {400, 320, dsp::Window::kHann}, 10);
  REQUIRE(f.frames.rows() == 49);
  REQUIRE(f.frames.cols() == 11);
  for (std::size_t t = 0; t < f.frames.rows(); ++t) {
    for (int m = 0; m < 10; ++m)
      CHECK(f.frames[t][m] == doctest::Approx(std::log(dsp::kLogFloor)));
    CHECK(f.frames[t][10] == 0.0);  // unvoiced
  }
}

TEST_CASE("frame features on a 220 Hz sine carry log f0") {
  const auto f = dsp::frame_features(sine(220.0, 1.0),
                                     {400, 320, dsp::Window::kHann}, 10);
  std::size_t voiced = 0;
  for (std::size_t t = 1; t + 1 < f.frames.rows(); ++t) {
    if (f.frames[t][10] != 0.0) {
      ++voiced;
      CHECK(f.frames[t][10] == doctest::Approx(std::log(220.0)).epsilon(0.02));
    }
  }
  CHECK(voiced >= f.frames.rows() - 4);
}

TEST_CASE("f0 estimate on sines is within 3 Hz") {
  for (double freq : {120.0, 220.0, 333.0, 450.0}) {
    const auto curve =
        dsp::estimate_f0(sine(freq, 1.0), {400, 320, dsp::Window::kHann});
    std::vector<double> voiced;
    for (const auto& fr : curve.frames)
      if (fr.voiced) voiced.push_back(fr.f0_hz);
    REQUIRE(voiced.size() >= 10);
    std::sort(voiced.begin(), voiced.end());
    const double median = voiced[voiced.size() / 2];
    CHECK(std::abs(median - freq) <= 3.0);
  }
}

TEST_CASE("digital silence is entirely unvoiced") {
  dsp::Waveform w;
  w.samples.assign(16000, 0.0);
  const auto curve = dsp::estimate_f0(w, {400, 320, dsp::Window::kHann});
  for (const auto& fr : curve.frames) CHECK_FALSE(fr.voiced);
}

TEST_CASE("white noise is mostly unvoiced") {
  Rng rng(7);
  dsp::Waveform w;
  w.samples.resize(16000);
  for (auto& s : w.samples) s = rng.uniform(-0.5, 0.5);
  const auto curve = dsp::estimate_f0(w, {400, 320, dsp::Window::kHann});
  std::size_t unvoiced = 0;
  for (const auto& fr : curve.frames)
    if (!fr.voiced) ++unvoiced;
  CHECK(unvoiced >= curve.frames.size() * 9 / 10);
}

TEST_CASE("fft matches a naive dft") {
  Rng rng(3);
  const std::size_t n = 64;
  std::vector<std::complex<double>> x(n);
  for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  const auto orig = x;
  dsp::fft(x, false);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * k * t / n;
      acc += orig[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    CHECK(std::abs(x[k] - acc) < 1e-9);
  }
  // inverse recovers the input
  dsp::fft(x, true);
  for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(x[t] - orig[t]) < 1e-9);
}

TEST_CASE("next_pow2") {
  CHECK(dsp::next_pow2(1) == 1);
  CHECK(dsp::next_pow2(2) == 2);
  CHECK(dsp::next_pow2(3) == 4);
  CHECK(dsp::next_pow2(640) == 1024);
}

TEST_CASE("mel filterbank shape and coverage") {
  const Matrix fb = dsp::mel_filterbank(10, 1024, 16000);
  REQUIRE(fb.rows() == 10);
  REQUIRE(fb.cols() == 513);
  for (std::size_t m = 0; m < fb.rows(); ++m) {
    double sum = 0.0;
    for (std::size_t b = 0; b < fb.cols(); ++b) {
      CHECK(fb[m][b] >= 0.0);
      sum += fb[m][b];
    }
    CHECK(sum > 0.0);
  }
}

TEST_CASE("hann window is periodic") {
  const auto w = dsp::hann_window(8);
  CHECK(w[0] == doctest::Approx(0.0));
  CHECK(w[4] == doctest::Approx(1.0));
  // periodic form: w[i] = 0.5 - 0.5 cos(2 pi i / n)
  CHECK(w[1] == doctest::Approx(0.5 - 0.5 * std::cos(std::numbers::pi / 4)));
}
