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

#ifndef NACANON_SEMANTIC_HPP
#define NACANON_SEMANTIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nacanon/dsp.hpp"
#include "nacanon/matrix.hpp"

namespace nacanon::semantic {

// Single quantization codebook over the semantic frame features
// (log mel filterbank + log-F0 channel).
struct SemanticCodebook {
  Matrix centroids;  // n_s x dim
  dsp::FrameSpec frame_spec{400, 320, dsp::Window::kHann};
  int n_mels = 10;

  std::size_t size() const { return centroids.rows(); }
};

using SemanticTokens = std::vector<int>;

// Per-utterance normalized semantic frame features. Mel channels lose
// their utterance mean (multiplicative speaker coloration is a constant
// log offset), and the log-F0 channel loses its voiced-frame mean
// (pitch level), keeping the contour. This keeps the token stream a
// content bottleneck rather than a speaker fingerprint.
Matrix features(const dsp::Waveform& w, const dsp::FrameSpec& spec,
                int n_mels);

SemanticCodebook train_semantic(const Matrix& features, int n_s,
                                std::uint64_t seed);

// Nearest-centroid index per frame (ties -> lowest index).
SemanticTokens tokenize(const dsp::Waveform& w, const SemanticCodebook& cb);
SemanticTokens tokenize_features(const Matrix& features,
                                 const SemanticCodebook& cb);

void save_semantic(const SemanticCodebook& cb, const std::string& path);
SemanticCodebook load_semantic(const std::string& path);

}  // namespace nacanon::semantic

#endif  // NACANON_SEMANTIC_HPP
