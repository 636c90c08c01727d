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

#include "nacanon/semantic.hpp"

#include <algorithm>
#include <cmath>

#include "nacanon/common.hpp"
#include "nacanon/kmeans.hpp"
#include "nacanon/model_io.hpp"

namespace nacanon::semantic {

Matrix features(const dsp::Waveform& w, const dsp::FrameSpec& spec,
                int n_mels) {
  Matrix f = dsp::frame_features(w, spec, n_mels).frames;
  const std::size_t t_len = f.rows();
  if (t_len == 0) return f;
  for (int j = 0; j < n_mels; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) mean += f[t][j];
    mean /= static_cast<double>(t_len);
    for (std::size_t t = 0; t < t_len; ++t) f[t][j] -= mean;
  }
  // Voiced frames carry log-F0 in the last channel, unvoiced frames 0.
  const std::size_t jf = static_cast<std::size_t>(n_mels);
  double f0_sum = 0.0;
  std::size_t voiced = 0;
  for (std::size_t t = 0; t < t_len; ++t)
    if (f[t][jf] != 0.0) {
      f0_sum += f[t][jf];
      ++voiced;
    }
  if (voiced > 0) {
    const double f0_mean = f0_sum / static_cast<double>(voiced);
    double var = 0.0;
    for (std::size_t t = 0; t < t_len; ++t)
      if (f[t][jf] != 0.0) {
        f[t][jf] -= f0_mean;
        var += f[t][jf] * f[t][jf];
      }
    // Speakers differ in pitch-range as well as level; keep only the
    // contour shape. The floor guards near-flat contours.
    const double sd =
        std::max(std::sqrt(var / static_cast<double>(voiced)), 1e-2);
    for (std::size_t t = 0; t < t_len; ++t)
      if (f[t][jf] != 0.0) f[t][jf] /= sd;
  }
  return f;
}

SemanticCodebook train_semantic(const Matrix& features, int n_s,
                                std::uint64_t seed) {
  if (features.rows() < static_cast<std::size_t>(n_s))
    throw DataError("train_semantic: fewer frames than codewords");
  SemanticCodebook cb;
  cb.centroids = kmeans(features, static_cast<std::size_t>(n_s), seed);
  return cb;
}

SemanticTokens tokenize_features(const Matrix& features,
                                 const SemanticCodebook& cb) {
  if (cb.centroids.empty()) throw DataError("tokenize: untrained codebook");
  if (features.cols() != cb.centroids.cols())
    throw DataError("tokenize: feature dimension mismatch");
  SemanticTokens tokens(features.rows());
  for (std::size_t t = 0; t < features.rows(); ++t)
    tokens[t] = static_cast<int>(nearest_centroid(features.row(t),
                                                  cb.centroids));
  return tokens;
}

SemanticTokens tokenize(const dsp::Waveform& w, const SemanticCodebook& cb) {
  return tokenize_features(features(w, cb.frame_spec, cb.n_mels), cb);
}

void save_semantic(const SemanticCodebook& cb, const std::string& path) {
  TensorMap t;
  t["meta"] = {{3},
               {static_cast<double>(cb.frame_spec.frame_len),
                static_cast<double>(cb.frame_spec.hop),
                static_cast<double>(cb.n_mels)}};
  t["centroids"] = {{static_cast<std::uint32_t>(cb.centroids.rows()),
                     static_cast<std::uint32_t>(cb.centroids.cols())},
                    cb.centroids.data()};
  save_container(path, "SEMQ", t);
}

SemanticCodebook load_semantic(const std::string& path) {
  const TensorMap t = load_container(path, "SEMQ");
  const auto meta = t.find("meta");
  const auto cent = t.find("centroids");
  if (meta == t.end() || cent == t.end() || meta->second.values.size() != 3 ||
      cent->second.dims.size() != 2)
    throw FormatError("malformed semantic container: " + path);
  SemanticCodebook cb;
  cb.frame_spec.frame_len = static_cast<int>(meta->second.values[0]);
  cb.frame_spec.hop = static_cast<int>(meta->second.values[1]);
  cb.n_mels = static_cast<int>(meta->second.values[2]);
  cb.centroids = Matrix(cent->second.dims[0], cent->second.dims[1]);
  cb.centroids.data() = cent->second.values;
  return cb;
}

}  // namespace nacanon::semantic
