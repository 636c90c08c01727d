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

#include "nacanon/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "nacanon/common.hpp"

namespace nacanon::dsp {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (p[1] << 8) | (p[2] << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put_u32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file: " + path);
  }

  Waveform w;
  bool have_fmt = false, have_data = false;
  std::size_t off = 12;
  while (off + 8 <= bytes.size()) {
    const char* id = bytes.data() + off;
    const std::uint32_t sz = read_u32(p + off + 4);
    const std::size_t body = off + 8;
    if (body + sz > bytes.size())
      throw FormatError("truncated wav chunk: " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (sz < 16) throw FormatError("short fmt chunk: " + path);
      const std::uint16_t tag = read_u16(p + body);
      const std::uint16_t channels = read_u16(p + body + 2);
      const std::uint32_t rate = read_u32(p + body + 4);
      const std::uint16_t bits = read_u16(p + body + 14);
      if (tag != 1 || bits != 16)
        throw FormatError("unsupported wav format (need 16-bit PCM): " + path);
      if (channels != 1)
        throw FormatError("unsupported wav format (need mono): " + path);
      if (rate == 0) throw FormatError("zero sample rate: " + path);
      w.sample_rate_hz = static_cast<int>(rate);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("data chunk before fmt: " + path);
      const std::size_t n = sz / 2;
      w.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t v = static_cast<std::int16_t>(
            read_u16(p + body + 2 * i));
        w.samples[i] = v / 32768.0;
      }
      have_data = true;
    }
    off = body + sz + (sz & 1);  // chunks are word-aligned
  }
  if (!have_fmt || !have_data)
    throw FormatError("missing fmt or data chunk: " + path);
  return w;
}

void write_wav(const Waveform& w, const std::string& path) {
  std::string out;
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(w.samples.size() * 2);
  out.append("RIFF");
  put_u32(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, data_bytes);
  for (double x : w.samples) {
    double v = std::lround(x * 32768.0);
    v = std::clamp(v, -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write: " + path);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& x, bool inverse) {
  const std::size_t n = x.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw DataError("fft size must be a power of two");
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = x[i + k];
        const auto v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& c : x) c /= static_cast<double>(n);
  }
}

std::vector<double> hann_window(int n) {
  // Periodic Hann: at 50% overlap consecutive windows sum to 1.
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate_hz) {
  const int n_bins = n_fft / 2 + 1;
  auto hz_to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  auto mel_to_hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double lo = hz_to_mel(0.0);
  const double hi = hz_to_mel(sample_rate_hz / 2.0);
  std::vector<double> centers(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    centers[i] = mel_to_hz(lo + (hi - lo) * i / (n_mels + 1));
  Matrix fb(n_mels, n_bins, 0.0);
  const double bin_hz = static_cast<double>(sample_rate_hz) / n_fft;
  for (int m = 0; m < n_mels; ++m) {
    const double l = centers[m], c = centers[m + 1], r = centers[m + 2];
    for (int b = 0; b < n_bins; ++b) {
      const double f = b * bin_hz;
      double v = 0.0;
      if (f > l && f < c)
        v = (f - l) / (c - l);
      else if (f >= c && f < r)
        v = (r - f) / (r - c);
      fb[m][b] = v;
    }
  }
  return fb;
}

namespace {

// Peak lag of the normalized autocorrelation of one frame, with
// parabolic refinement. Returns (peak value, refined lag).
struct AcfPeak {
  double value = 0.0;
  double lag = 0.0;
};

AcfPeak acf_peak(const double* x, int n, int lag_min, int lag_max) {
  AcfPeak best;
  int best_lag = 0;
  std::vector<double> score(lag_max + 1, 0.0);
  for (int lag = lag_min; lag <= lag_max; ++lag) {
    double num = 0.0, e0 = 0.0, e1 = 0.0;
    const int m = n - lag;
    for (int t = 0; t < m; ++t) {
      num += x[t] * x[t + lag];
      e0 += x[t] * x[t];
      e1 += x[t + lag] * x[t + lag];
    }
    const double den = std::sqrt(e0 * e1);
    score[lag] = den > 0.0 ? num / den : 0.0;
    if (score[lag] > best.value) {
      best.value = score[lag];
      best_lag = lag;
    }
  }
  // Period multiples score near-ties with the true period, so the raw
  // argmax is biased toward subharmonics. Take the smallest lag within
  // 2% of the global maximum.
  for (int lag = lag_min; lag < best_lag; ++lag) {
    if (score[lag] >= 0.98 * best.value) {
      // The threshold can trigger on the rising shoulder of a peak;
      // climb to the local maximum before parabolic refinement.
      while (lag < lag_max && score[lag + 1] > score[lag]) ++lag;
      best_lag = lag;
      best.value = score[lag];
      break;
    }
  }
  best.lag = best_lag;
  if (best_lag > lag_min && best_lag < lag_max) {
    const double a = score[best_lag - 1];
    const double b = score[best_lag];
    const double c = score[best_lag + 1];
    const double den = a - 2.0 * b + c;
    if (std::abs(den) > 1e-12) {
      const double shift = 0.5 * (a - c) / den;
      if (std::abs(shift) <= 1.0) best.lag = best_lag + shift;
    }
  }
  return best;
}

}  // namespace

F0Curve estimate_f0(const Waveform& w, const FrameSpec& spec) {
  const std::size_t t_frames = spec.num_frames(w.samples.size());
  if (t_frames == 0)
    throw DataError("waveform shorter than one frame");
  const int sr = w.sample_rate_hz;
  const int lag_min = std::max(2, sr / 500);
  const int lag_max = std::min(spec.frame_len - 1, sr / 50);
  F0Curve curve;
  curve.frame_spec = spec;
  curve.frames.resize(t_frames);
  for (std::size_t f = 0; f < t_frames; ++f) {
    const double* x = w.samples.data() + f * spec.hop;
    double energy = 0.0;
    for (int i = 0; i < spec.frame_len; ++i) energy += x[i] * x[i];
    const double rms = std::sqrt(energy / spec.frame_len);
    if (rms < 1e-4 || lag_min > lag_max) continue;
    const AcfPeak peak = acf_peak(x, spec.frame_len, lag_min, lag_max);
    if (peak.value >= 0.5) {
      double f0 = sr / peak.lag;
      f0 = std::clamp(f0, 50.0, 500.0);
      curve.frames[f] = {true, f0};
    }
  }
  return curve;
}

FeatureMatrix frame_features(const Waveform& w, const FrameSpec& spec,
                             int n_mels) {
  const std::size_t t_frames = spec.num_frames(w.samples.size());
  if (t_frames == 0)
    throw DataError("waveform shorter than one frame");
  const std::size_t n_fft = next_pow2(spec.frame_len);
  const Matrix fb = mel_filterbank(n_mels, static_cast<int>(n_fft),
                                   w.sample_rate_hz);
  const auto win = hann_window(spec.frame_len);
  const F0Curve f0 = estimate_f0(w, spec);

  FeatureMatrix out;
  out.frame_spec = spec;
  out.frames = Matrix(t_frames, n_mels + 1);
  std::vector<std::complex<double>> buf(n_fft);
  const std::size_t n_bins = n_fft / 2 + 1;
  std::vector<double> power(n_bins);
  for (std::size_t f = 0; f < t_frames; ++f) {
    const double* x = w.samples.data() + f * spec.hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < spec.frame_len; ++i)
      buf[i] = (spec.window == Window::kHann ? win[i] : 1.0) * x[i];
    fft(buf, false);
    for (std::size_t b = 0; b < n_bins; ++b) power[b] = std::norm(buf[b]);
    double* row = out.frames[f];
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (std::size_t b = 0; b < n_bins; ++b) e += fb[m][b] * power[b];
      row[m] = std::log(std::max(e, kLogFloor));
    }
    row[n_mels] = f0.frames[f].voiced ? std::log(f0.frames[f].f0_hz) : 0.0;
  }
  return out;
}

}  // namespace nacanon::dsp
