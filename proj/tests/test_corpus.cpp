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
#include <cstdio>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "nacanon/common.hpp"
#include "nacanon/corpus.hpp"
#include "nacanon/dsp.hpp"

using namespace nacanon;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("speaker generation: determinism, ids, ranges") {
  std::set<std::string> ids;
  for (int i = 0; i < 20; ++i) {
    const auto a = corpus::generate_speaker(1, i);
    const auto b = corpus::generate_speaker(1, i);
    CHECK(a.speaker_id == b.speaker_id);
    CHECK(a.base_f0_hz == b.base_f0_hz);
    CHECK(a.tilt == b.tilt);
    CHECK(a.base_f0_hz >= 80.0);
    CHECK(a.base_f0_hz <= 260.0);
    ids.insert(a.speaker_id);
  }
  CHECK(ids.size() == 20);
}

TEST_CASE("script generation respects the shape") {
  corpus::CorpusShape shape;
  const auto script = corpus::generate_script(7, 3, 4, shape);
  CHECK(script.size() == static_cast<std::size_t>(shape.units_per_utterance));
  for (const auto& unit : script) {
    CHECK(unit.unit_id >= 0);
    CHECK(unit.unit_id < shape.content_units);
    CHECK(unit.duration_frames >= shape.min_unit_frames);
    CHECK(unit.duration_frames <= shape.max_unit_frames);
  }
}

TEST_CASE("utterance length formula and label alignment") {
  corpus::CorpusShape shape;
  const auto speaker = corpus::generate_speaker(7, 0);
  const auto script = corpus::generate_script(7, 0, 0, shape);
  const auto [wav, labels] =
      corpus::synthesize_utterance(speaker, script, 5, shape);
  std::size_t total_frames = 0;
  for (const auto& unit : script) total_frames += unit.duration_frames;
  CHECK(labels.size() == total_frames);
  CHECK(wav.samples.size() == (total_frames - 1) * shape.hop + shape.frame_len);
  // 49 frames at hop 320, frame 640 -> 16000 samples
  corpus::ContentScript fixed = {{0, 25}, {1, 24}};
  const auto [w2, l2] = corpus::synthesize_utterance(speaker, fixed, 5, shape);
  CHECK(l2.size() == 49);
  CHECK(w2.samples.size() == 16000);
}

TEST_CASE("synthesis is deterministic and bounded") {
  corpus::CorpusShape shape;
  const auto speaker = corpus::generate_speaker(3, 1);
  const auto script = corpus::generate_script(3, 1, 2, shape);
  const auto a = corpus::synthesize_utterance(speaker, script, 9, shape);
  const auto b = corpus::synthesize_utterance(speaker, script, 9, shape);
  CHECK(a.first.samples == b.first.samples);
  CHECK(a.second == b.second);
  for (double s : a.first.samples) {
    CHECK(s <= 1.0);
    CHECK(s >= -1.0);
  }
}

TEST_CASE("median f0 lands near the speaker base f0") {
  corpus::CorpusShape shape;
  for (int s : {0, 5, 11}) {
    const auto speaker = corpus::generate_speaker(7, s);
    const auto script = corpus::generate_script(7, s, 0, shape);
    const auto wav =
        corpus::synthesize_utterance(speaker, script, 13, shape).first;
    const auto curve =
        dsp::estimate_f0(wav, {640, 320, dsp::Window::kHann});
    std::vector<double> voiced;
    for (const auto& fr : curve.frames)
      if (fr.voiced) voiced.push_back(fr.f0_hz);
    REQUIRE(!voiced.empty());
    std::sort(voiced.begin(), voiced.end());
    const double median = voiced[voiced.size() / 2];
    CHECK(std::abs(median - speaker.base_f0_hz) <= 0.10 * speaker.base_f0_hz);
  }
}

TEST_CASE("manifest and label round trip") {
  std::vector<corpus::ManifestEntry> entries = {
      {"spk000_u000", "spk000", "/tmp/a.wav", "/tmp/a.labels"},
      {"spk001_u003", "spk001", "/tmp/b.wav", "/tmp/b.labels"},
  };
  const std::string mpath = temp_path("nac_manifest.tsv");
  corpus::write_manifest(entries, mpath);
  const auto loaded = corpus::read_manifest(mpath);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[1].utt_id == "spk001_u003");
  CHECK(loaded[1].speaker_id == "spk001");
  CHECK(loaded[1].wav_path == "/tmp/b.wav");
  CHECK(loaded[1].label_path == "/tmp/b.labels");
  std::remove(mpath.c_str());

  const std::vector<int> labels = {3, 3, 3, 7, 7, 0};
  const std::string lpath = temp_path("nac_labels.txt");
  corpus::write_labels(labels, lpath);
  CHECK(corpus::read_labels(lpath) == labels);
  std::remove(lpath.c_str());
}

TEST_CASE("labels collapse to unit runs") {
  CHECK(corpus::labels_to_units({3, 3, 3, 7, 7, 0}) ==
        std::vector<int>{3, 7, 0});
  CHECK(corpus::labels_to_units({}) == std::vector<int>{});
  CHECK(corpus::labels_to_units({5}) == std::vector<int>{5});
  CHECK(corpus::labels_to_units({1, 1, 2, 1}) == std::vector<int>{1, 2, 1});
}

TEST_CASE("degenerate scripts are rejected") {
  corpus::CorpusShape shape;
  const auto speaker = corpus::generate_speaker(1, 0);
  CHECK_THROWS_AS(corpus::synthesize_utterance(speaker, {}, 1, shape),
                  DataError);
  CHECK_THROWS_AS(
      corpus::synthesize_utterance(speaker, {{0, 1}}, 1, shape), DataError);
}
