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

#ifndef NACANON_CODEC_HPP
#define NACANON_CODEC_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nacanon/dsp.hpp"
#include "nacanon/matrix.hpp"

namespace nacanon::codec {

// Q x T_A grid of codeword indices in [0, n_q).
class TokenGrid {
 public:
  TokenGrid() = default;
  TokenGrid(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), ids_(rows * cols, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int& at(std::size_t q, std::size_t t) { return ids_[q * cols_ + t]; }
  int at(std::size_t q, std::size_t t) const { return ids_[q * cols_ + t]; }

  // First `q` rows, all frames.
  TokenGrid top_rows(std::size_t q) const;
  TokenGrid left_cols(std::size_t t) const;

  bool operator==(const TokenGrid&) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<int> ids_;
};

// Residual-vector-quantization stack over per-frame acoustic vectors.
// Stage 1 quantizes raw frame vectors, stage q the residual of stages < q.
struct RvqStack {
  std::vector<Matrix> codebooks;  // each n_q x dim
  int q_coarse = 2;
  dsp::FrameSpec frame_spec{640, 320, dsp::Window::kHann};
  int n_cepstra = 14;

  std::size_t num_stages() const { return codebooks.size(); }
  std::size_t codebook_size() const {
    return codebooks.empty() ? 0 : codebooks.front().rows();
  }
  std::size_t dim() const {
    return codebooks.empty() ? 0 : codebooks.front().cols();
  }
};

// Per-frame analysis vector: [log-RMS, log-F0 channel, n_cepstra low-order
// real cepstral coefficients]. D = 2 + n_cepstra.
dsp::FeatureMatrix acoustic_frame_vectors(const dsp::Waveform& w,
                                          const dsp::FrameSpec& spec,
                                          int n_cepstra);

// index = argmin L2 (ties -> lowest index); residual = v - centroid[index].
std::pair<std::size_t, std::vector<double>> quantize_residual(
    std::span<const double> v, const Matrix& codebook);

RvqStack train_rvq(const Matrix& features, int q, int n_q, std::uint64_t seed);

TokenGrid encode(const dsp::Waveform& w, const RvqStack& rvq);

// Sum of the first `stages` codebook centroids per frame (stages==0 means
// all). Feature-domain reconstruction used by monotonicity checks.
Matrix reconstruct_features(const TokenGrid& tokens, const RvqStack& rvq,
                            std::size_t stages = 0);

// Harmonic/noise source driven by the reconstructed F0 and energy
// channels, shaped by the cepstral envelope, overlap-added at 50%.
dsp::Waveform decode(const TokenGrid& tokens, const RvqStack& rvq,
                     int sample_rate_hz = 16000);

void save_rvq(const RvqStack& rvq, const std::string& path);
RvqStack load_rvq(const std::string& path);

}  // namespace nacanon::codec

#endif  // NACANON_CODEC_HPP
