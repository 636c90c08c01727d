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

#ifndef NACANON_CORPUS_HPP
#define NACANON_CORPUS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nacanon/dsp.hpp"

namespace nacanon::corpus {

// Synthetic speaker: a harmonic voice with its own pitch, pitch range,
// spectral tilt and one speaker-specific resonance.
struct SpeakerParams {
  std::string speaker_id;
  double base_f0_hz = 0.0;   // [90, 300]
  double f0_range = 0.0;     // relative contour depth
  double tilt = 0.0;          // pre-emphasis coefficient, speaker timbre
  double resonance_hz = 0.0;  // speaker formant above the unit band
  double resonance2_hz = 0.0; // mild in-band coloration; a constant
                              // cepstral offset, so content-neutral
  double gain = 0.0;
};

struct ContentUnit {
  int unit_id = 0;
  int duration_frames = 0;  // >= 3
};
using ContentScript = std::vector<ContentUnit>;

struct CorpusShape {
  int speakers = 20;
  int utterances_per_speaker = 10;
  int content_units = 12;        // alphabet size U
  int units_per_utterance = 12;  // <= content_units: drawn w/o replacement
  int min_unit_frames = 6;
  int max_unit_frames = 8;
  int sample_rate_hz = 16000;
  int frame_len = 640;
  int hop = 320;
};

SpeakerParams generate_speaker(std::uint64_t corpus_seed, int index);

ContentScript generate_script(std::uint64_t corpus_seed, int speaker_index,
                              int utterance_index, const CorpusShape& shape);

// Returns the waveform and per-frame content-unit labels. The label
// sequence length equals the frame count of the (frame_len, hop) framing,
// waveform length = (total_frames - 1) * hop + frame_len.
std::pair<dsp::Waveform, std::vector<int>> synthesize_utterance(
    const SpeakerParams& speaker, const ContentScript& script,
    std::uint64_t seed, const CorpusShape& shape);

struct ManifestEntry {
  std::string utt_id;
  std::string speaker_id;
  std::string wav_path;
  std::string label_path;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::string& path);

std::vector<int> read_labels(const std::string& path);
void write_labels(const std::vector<int>& labels, const std::string& path);

// Collapses per-frame labels to the unit-id sequence (run-length).
std::vector<int> labels_to_units(const std::vector<int>& labels);

}  // namespace nacanon::corpus

#endif  // NACANON_CORPUS_HPP
