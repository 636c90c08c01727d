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

#ifndef NACANON_LM_HPP
#define NACANON_LM_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nacanon/codec.hpp"
#include "nacanon/matrix.hpp"
#include "nacanon/semantic.hpp"

namespace nacanon::lm {

// ---------------------------------------------------------------------
// Flattened coarse sequence
// ---------------------------------------------------------------------

enum class Segment : std::uint8_t { kSemantic, kPromptCoarse, kTargetCoarse };

// Unified-vocabulary sequence: semantic ids first, then per-codebook
// blocks of size n_q (codebook q at offset n_s + q * n_q), acoustic
// frames interleaved frame-major.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<Segment> segments;

  bool operator==(const TokenSequence&) const = default;
};

TokenSequence flatten_coarse(const semantic::SemanticTokens& s,
                             const codec::TokenGrid& prompt,
                             const codec::TokenGrid& target, int q_coarse,
                             int n_s, int n_q);

struct Unflattened {
  semantic::SemanticTokens s;
  codec::TokenGrid prompt;
  codec::TokenGrid target;
};

Unflattened unflatten_coarse(const TokenSequence& seq, int q_coarse, int n_s,
                             int n_q);

// ---------------------------------------------------------------------
// Tiny decoder-style attention network with hand-written backprop
// ---------------------------------------------------------------------

struct LmHyperParams {
  int vocab = 0;       // input embedding table size
  int out_vocab = 0;   // output projection size
  int width = 64;
  int blocks = 2;
  int heads = 4;
  int max_positions = 512;
  bool causal = true;
  bool use_positions = true;
  int segment_kinds = 0;  // 0 disables the segment embedding
};

// One training/inference item. Each position embeds the sum of its token
// ids (the coarse model has one id per position, the fine model several).
// targets[i] is the out-vocab label predicted *at* position i, or -1 when
// position i is context only. target_lo/hi, when non-empty, restrict the
// softmax at predicted positions to [lo, hi).
// positions[i], when given, selects the learned position embedding for
// position i (several positions may share one index). Empty means the
// absolute index 0..L-1. The coarse/fine builders use the frame index
// within each segment so that semantic frame t, prompt frame t and
// target frame t share an embedding; that makes the framewise alignment
// between segments directly attendable.
struct LmInput {
  std::vector<std::vector<int>> tokens;
  std::vector<int> segments;  // empty unless segment_kinds > 0
  std::vector<int> positions;  // optional
  std::vector<int> targets;
  std::vector<std::pair<int, int>> target_ranges;  // optional
};

struct TrainOptions {
  double learning_rate = 0.3;
  double momentum = 0.9;
  double clip_norm = 1.0;
  int steps = 200;
  int batch_size = 8;
};

class TransformerLm {
 public:
  TransformerLm() = default;
  TransformerLm(const LmHyperParams& hp, std::uint64_t param_seed);

  const LmHyperParams& hyperparams() const { return hp_; }

  // Per-position output distributions (rows sum to 1). Throws on
  // sequences longer than max_positions.
  Matrix forward_probs(const LmInput& input) const;

  // Mean cross-entropy over predicted positions; fills parameter grads
  // (accumulating). Returns (loss, number of predicted positions).
  std::pair<double, std::size_t> forward_backward(const LmInput& input);

  void zero_grad();
  double loss(const LmInput& input) const;

  // Momentum-SGD training with global gradient-norm clipping. Batches
  // cycle through `data` in order. Returns the per-step loss trace;
  // throws DivergenceError on NaN loss.
  std::vector<double> train(const std::vector<LmInput>& data,
                            const TrainOptions& opts);

  // Named parameter tensors (and matching grads), for the optimizer,
  // serialization, and finite-difference checks.
  std::map<std::string, Matrix>& params() { return params_; }
  const std::map<std::string, Matrix>& params() const { return params_; }
  std::map<std::string, Matrix>& grads() { return grads_; }

  // Incremental decoding state (per-block key/value cache).
  struct DecodeState;
  struct DecodeStateDeleter {
    void operator()(DecodeState* s) const;
  };
  std::unique_ptr<DecodeState, DecodeStateDeleter> make_decode_state() const;
  // Appends one position and returns its output logits. position < 0
  // means the running absolute index.
  std::vector<double> decode_step(DecodeState& state,
                                  const std::vector<int>& tokens,
                                  int segment = -1, int position = -1) const;

 private:
  struct Cache;
  Matrix forward_impl(const LmInput& input, Cache* cache) const;

  LmHyperParams hp_;
  std::map<std::string, Matrix> params_;
  std::map<std::string, Matrix> grads_;
};

// ---------------------------------------------------------------------
// Coarse and fine models
// ---------------------------------------------------------------------

struct CoarseLm {
  TransformerLm net;
  int n_s = 0, n_q = 0, q_coarse = 0;

  static CoarseLm create(int n_s, int n_q, int q_coarse,
                         const LmHyperParams& shape, std::uint64_t seed);
};

LmInput coarse_training_input(const CoarseLm& lm, const TokenSequence& seq);

// Autoregressive sampling of q_coarse * t_a target tokens in flattened
// order; temperature 0 means argmax. Deterministic given seed.
codec::TokenGrid sample_coarse(const CoarseLm& lm,
                               const semantic::SemanticTokens& s,
                               const codec::TokenGrid& prompt_coarse, int t_a,
                               double temperature, std::uint64_t seed);

// One non-autoregressive conditional per fine level q in [q_coarse, Q).
// Level q's network sees the full prompt grid and target rows < q; it
// never sees semantic tokens.
struct FineLm {
  std::vector<TransformerLm> levels;  // levels[i] predicts row q_coarse + i
  int n_q = 0, q_total = 0, q_coarse = 0;

  static FineLm create(int n_q, int q_total, int q_coarse,
                       const LmHyperParams& shape, std::uint64_t seed);
};

LmInput fine_training_input(const FineLm& lm, std::size_t level_index,
                            const codec::TokenGrid& prompt,
                            const codec::TokenGrid& target);

// Extends `coarse` (q_coarse rows) to the full Q-row grid, sampling each
// fine level in ascending order. The first q_coarse rows are returned
// unchanged.
codec::TokenGrid sample_fine(const FineLm& lm, const codec::TokenGrid& prompt,
                             const codec::TokenGrid& coarse,
                             double temperature, std::uint64_t seed);

void save_coarse(const CoarseLm& lm, const std::string& path);
CoarseLm load_coarse(const std::string& path);
void save_fine(const FineLm& lm, const std::string& path);
FineLm load_fine(const std::string& path);

}  // namespace nacanon::lm

#endif  // NACANON_LM_HPP
