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

#include "nacanon/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nacanon/common.hpp"
#include "nacanon/kmeans.hpp"
#include "nacanon/model_io.hpp"

namespace nacanon::codec {

namespace {

// Voiced/unvoiced decision on the reconstructed log-F0 channel: voiced
// frames carry log(f0) in [log 50, log 500], unvoiced frames carry 0.
constexpr double kVoicedLogF0Threshold = 2.0;

}  // namespace

TokenGrid TokenGrid::top_rows(std::size_t q) const {
  q = std::min(q, rows_);
  TokenGrid out(q, cols_);
  for (std::size_t r = 0; r < q; ++r)
    for (std::size_t t = 0; t < cols_; ++t) out.at(r, t) = at(r, t);
  return out;
}

TokenGrid TokenGrid::left_cols(std::size_t t_keep) const {
  t_keep = std::min(t_keep, cols_);
  TokenGrid out(rows_, t_keep);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t t = 0; t < t_keep; ++t) out.at(r, t) = at(r, t);
  return out;
}

dsp::FeatureMatrix acoustic_frame_vectors(const dsp::Waveform& w,
                                          const dsp::FrameSpec& spec,
                                          int n_cepstra) {
  const std::size_t t_frames = spec.num_frames(w.samples.size());
  if (t_frames == 0)
    throw DataError("waveform shorter than one acoustic frame");
  const std::size_t n_fft = dsp::next_pow2(spec.frame_len);
  const auto win = dsp::hann_window(spec.frame_len);
  const dsp::F0Curve f0 = dsp::estimate_f0(w, spec);

  dsp::FeatureMatrix out;
  out.frame_spec = spec;
  out.frames = Matrix(t_frames, 2 + n_cepstra);
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t f = 0; f < t_frames; ++f) {
    const double* x = w.samples.data() + f * spec.hop;
    double energy = 0.0;
    for (int i = 0; i < spec.frame_len; ++i) energy += x[i] * x[i];
    const double rms = std::sqrt(energy / spec.frame_len);
    double* row = out.frames[f];
    row[0] = std::log(std::max(rms, dsp::kLogFloor));
    row[1] = f0.frames[f].voiced ? std::log(f0.frames[f].f0_hz) : 0.0;

    // Real cepstrum of the windowed frame; c_1..c_L describe the
    // spectral envelope (c_0, pure gain, is redundant with log-RMS).
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < spec.frame_len; ++i) buf[i] = win[i] * x[i];
    dsp::fft(buf, false);
    for (auto& c : buf)
      c = std::log(std::max(std::abs(c), dsp::kLogFloor));
    dsp::fft(buf, true);
    for (int k = 0; k < n_cepstra; ++k) row[2 + k] = buf[k + 1].real();
  }
  return out;
}

std::pair<std::size_t, std::vector<double>> quantize_residual(
    std::span<const double> v, const Matrix& codebook) {
  if (v.size() != codebook.cols())
    throw DataError("quantize_residual: dimension mismatch");
  const std::size_t idx = nearest_centroid(v, codebook);
  std::vector<double> residual(v.size());
  for (std::size_t j = 0; j < v.size(); ++j)
    residual[j] = v[j] - codebook[idx][j];
  return {idx, std::move(residual)};
}

RvqStack train_rvq(const Matrix& features, int q, int n_q,
                   std::uint64_t seed) {
  if (features.rows() < static_cast<std::size_t>(n_q))
    throw DataError("train_rvq: fewer training frames than codewords");
  RvqStack rvq;
  Matrix residuals = features;
  for (int stage = 0; stage < q; ++stage) {
    const Matrix cb =
        kmeans(residuals, static_cast<std::size_t>(n_q),
               stable_hash(seed, "rvq", std::to_string(stage)));
    for (std::size_t i = 0; i < residuals.rows(); ++i) {
      auto [idx, rem] = quantize_residual(residuals.row(i), cb);
      std::copy(rem.begin(), rem.end(), residuals[i]);
    }
    rvq.codebooks.push_back(cb);
  }
  return rvq;
}

TokenGrid encode(const dsp::Waveform& w, const RvqStack& rvq) {
  if (rvq.codebooks.empty()) throw DataError("encode: untrained RVQ stack");
  const dsp::FeatureMatrix feats =
      acoustic_frame_vectors(w, rvq.frame_spec, rvq.n_cepstra);
  if (feats.frames.cols() != rvq.dim())
    throw DataError("encode: feature dimension incompatible with model");
  const std::size_t t_a = feats.frames.rows();
  TokenGrid grid(rvq.num_stages(), t_a);
  std::vector<double> residual(rvq.dim());
  for (std::size_t t = 0; t < t_a; ++t) {
    auto row = feats.frames.row(t);
    residual.assign(row.begin(), row.end());
    for (std::size_t q = 0; q < rvq.num_stages(); ++q) {
      auto [idx, rem] = quantize_residual(residual, rvq.codebooks[q]);
      grid.at(q, t) = static_cast<int>(idx);
      residual = std::move(rem);
    }
  }
  return grid;
}

Matrix reconstruct_features(const TokenGrid& tokens, const RvqStack& rvq,
                            std::size_t stages) {
  if (stages == 0) stages = tokens.rows();
  if (stages > rvq.num_stages() || tokens.rows() > rvq.num_stages())
    throw DataError("reconstruct_features: more rows than codebooks");
  Matrix out(tokens.cols(), rvq.dim());
  for (std::size_t t = 0; t < tokens.cols(); ++t) {
    for (std::size_t q = 0; q < stages && q < tokens.rows(); ++q) {
      const int id = tokens.at(q, t);
      if (id < 0 || static_cast<std::size_t>(id) >= rvq.codebook_size())
        throw DataError("reconstruct_features: token out of range");
      for (std::size_t j = 0; j < rvq.dim(); ++j)
        out[t][j] += rvq.codebooks[q][id][j];
    }
  }
  return out;
}

dsp::Waveform decode(const TokenGrid& tokens, const RvqStack& rvq,
                     int sample_rate_hz) {
  if (tokens.rows() != rvq.num_stages())
    throw DataError("decode: token rows do not match codebook count");
  if (tokens.cols() == 0) throw DataError("decode: empty token grid");
  const Matrix feats = reconstruct_features(tokens, rvq);
  const int frame_len = rvq.frame_spec.frame_len;
  const int hop = rvq.frame_spec.hop;
  const std::size_t t_a = tokens.cols();
  const std::size_t out_len = (t_a - 1) * hop + frame_len;

  // Source signal: band-limited sawtooth with continuous phase when
  // voiced, white noise when unvoiced. A fixed seed keeps decode a pure
  // function of the tokens.
  std::vector<double> excitation(out_len);
  Rng noise(0x6e6163616e6f6eull);
  double phase = 0.0;
  for (std::size_t n = 0; n < out_len; ++n) {
    const std::size_t f = std::min(n / hop, t_a - 1);
    const double f0_ch = feats[f][1];
    if (f0_ch > kVoicedLogF0Threshold) {
      const double f0 = std::clamp(std::exp(f0_ch), 50.0, 500.0);
      phase += 2.0 * M_PI * f0 / sample_rate_hz;
      if (phase > 2.0 * M_PI) phase -= 2.0 * M_PI;
      const int harmonics =
          static_cast<int>(std::floor(0.5 * sample_rate_hz / f0));
      double v = 0.0;
      for (int k = 1; k <= harmonics; ++k) v += std::sin(k * phase) / k;
      excitation[n] = v;
    } else {
      excitation[n] = noise.normal() * 0.5;
    }
  }

  const std::size_t n_fft = dsp::next_pow2(frame_len);
  const auto win = dsp::hann_window(frame_len);
  // Log-magnitude envelope per FFT bin from the truncated cepstrum.
  std::vector<std::vector<double>> cos_table(rvq.n_cepstra,
                                             std::vector<double>(n_fft));
  for (int k = 0; k < rvq.n_cepstra; ++k)
    for (std::size_t b = 0; b < n_fft; ++b)
      cos_table[k][b] = 2.0 * std::cos(2.0 * M_PI * (k + 1) * b / n_fft);

  dsp::Waveform out;
  out.sample_rate_hz = sample_rate_hz;
  out.samples.assign(out_len, 0.0);
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t f = 0; f < t_a; ++f) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int i = 0; i < frame_len; ++i) buf[i] = excitation[f * hop + i];
    dsp::fft(buf, false);
    for (std::size_t b = 0; b < n_fft; ++b) {
      double log_h = 0.0;
      for (int k = 0; k < rvq.n_cepstra; ++k)
        log_h += feats[f][2 + k] * cos_table[k][b];
      buf[b] *= std::exp(std::clamp(log_h, -20.0, 20.0));
    }
    dsp::fft(buf, true);

    double energy = 0.0;
    for (int i = 0; i < frame_len; ++i) energy += std::norm(buf[i].real());
    const double cur_rms = std::sqrt(energy / frame_len);
    const double target_rms = std::exp(feats[f][0]);
    const double gain = target_rms / std::max(cur_rms, 1e-12);
    for (int i = 0; i < frame_len; ++i)
      out.samples[f * hop + i] += gain * buf[i].real() * win[i];
  }
  for (auto& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

void save_rvq(const RvqStack& rvq, const std::string& path) {
  TensorMap t;
  t["meta"] = {{5},
               {static_cast<double>(rvq.q_coarse),
                static_cast<double>(rvq.frame_spec.frame_len),
                static_cast<double>(rvq.frame_spec.hop),
                static_cast<double>(rvq.n_cepstra),
                static_cast<double>(rvq.num_stages())}};
  for (std::size_t q = 0; q < rvq.num_stages(); ++q) {
    const Matrix& cb = rvq.codebooks[q];
    char name[32];
    std::snprintf(name, sizeof(name), "codebook.%02zu", q);
    t[name] = {{static_cast<std::uint32_t>(cb.rows()),
                static_cast<std::uint32_t>(cb.cols())},
               cb.data()};
  }
  save_container(path, "NACQ", t);
}

RvqStack load_rvq(const std::string& path) {
  const TensorMap t = load_container(path, "NACQ");
  const auto meta_it = t.find("meta");
  if (meta_it == t.end() || meta_it->second.values.size() != 5)
    throw FormatError("rvq container missing meta: " + path);
  const auto& m = meta_it->second.values;
  RvqStack rvq;
  rvq.q_coarse = static_cast<int>(m[0]);
  rvq.frame_spec.frame_len = static_cast<int>(m[1]);
  rvq.frame_spec.hop = static_cast<int>(m[2]);
  rvq.n_cepstra = static_cast<int>(m[3]);
  const auto stages = static_cast<std::size_t>(m[4]);
  for (std::size_t q = 0; q < stages; ++q) {
    char name[32];
    std::snprintf(name, sizeof(name), "codebook.%02zu", q);
    const auto it = t.find(name);
    if (it == t.end() || it->second.dims.size() != 2)
      throw FormatError("rvq container missing codebook: " + path);
    Matrix cb(it->second.dims[0], it->second.dims[1]);
    cb.data() = it->second.values;
    rvq.codebooks.push_back(std::move(cb));
  }
  return rvq;
}

}  // namespace nacanon::codec
