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

#ifndef NACANON_ANON_HPP
#define NACANON_ANON_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nacanon/codec.hpp"
#include "nacanon/lm.hpp"
#include "nacanon/semantic.hpp"

namespace nacanon::anon {

struct PromptEntry {
  std::string prompt_id;
  codec::TokenGrid tokens;
  std::string label;  // source speaker, informational
};

struct PromptPool {
  std::vector<PromptEntry> entries;
  std::string source;
};

enum class Level { kSpeaker, kUtterance };

struct AnonPolicy {
  Level level = Level::kSpeaker;
  std::uint64_t master_seed = 0;
};

struct SamplerSettings {
  double temperature = 0.7;
};

// The full anonymization system of four trained models plus the pool.
struct AnonSystem {
  semantic::SemanticCodebook semantic_cb;
  codec::RvqStack rvq;
  lm::CoarseLm coarse;
  lm::FineLm fine;
  PromptPool pool;
  SamplerSettings sampler;

  void validate() const;  // throws DataError on dimension mismatches
};

// Encodes each utterance and truncates to at most max_frames columns.
PromptPool build_prompt_pool(const std::vector<dsp::Waveform>& utterances,
                             const std::vector<std::string>& labels,
                             const codec::RvqStack& rvq,
                             std::size_t max_frames = 75);

// SPEAKER level: stable_hash(seed, speaker_id) mod pool size.
// UTTERANCE level: stable_hash(seed, speaker_id, utterance_id) mod size.
std::size_t select_pseudo_speaker(const PromptPool& pool,
                                  const AnonPolicy& policy,
                                  const std::string& speaker_id,
                                  const std::string& utterance_id);

// Full pipeline: semantic tokens -> coarse sampling conditioned on the
// pseudo-speaker prompt -> fine completion -> decode. Deterministic given
// the policy's master seed.
dsp::Waveform anonymize(const AnonSystem& system, const AnonPolicy& policy,
                        const dsp::Waveform& w, const std::string& speaker_id,
                        const std::string& utterance_id);

void save_pool(const PromptPool& pool, const std::string& path);
PromptPool load_pool(const std::string& path);

// System bundle = directory with the four model containers + pool file.
inline constexpr const char* kSemanticFile = "semantic.bin";
inline constexpr const char* kCodecFile = "codec.bin";
inline constexpr const char* kCoarseFile = "coarse.bin";
inline constexpr const char* kFineFile = "fine.bin";
inline constexpr const char* kPoolFile = "pool.bin";

void save_system(const AnonSystem& system, const std::string& dir);
AnonSystem load_system(const std::string& dir);

}  // namespace nacanon::anon

#endif  // NACANON_ANON_HPP
