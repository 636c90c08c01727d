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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "nacanon/anon.hpp"
#include "nacanon/common.hpp"
#include "nacanon/corpus.hpp"
#include "nacanon/dsp.hpp"

namespace fs = std::filesystem;
using namespace nacanon;

namespace {

corpus::CorpusShape tiny_shape() {
  corpus::CorpusShape shape;
  shape.speakers = 4;
  shape.utterances_per_speaker = 2;
  shape.content_units = 6;
  shape.units_per_utterance = 4;
  shape.min_unit_frames = 4;
  shape.max_unit_frames = 6;
  return shape;
}

dsp::Waveform tiny_utterance(int speaker, int utt) {
  const auto shape = tiny_shape();
  const auto spk = corpus::generate_speaker(11, speaker);
  const auto script = corpus::generate_script(11, speaker, utt, shape);
  return corpus::synthesize_utterance(spk, script,
                                      stable_hash(11, "utt",
                                                  std::to_string(speaker) +
                                                      "." +
                                                      std::to_string(utt)),
                                      shape)
      .first;
}

// A small but dimensionally consistent system. The LMs are randomly
// initialized; the tests here exercise plumbing, not model quality.
anon::AnonSystem tiny_system() {
  const int n_s = 16, n_q = 8, q = 4, q_coarse = 2;
  std::vector<dsp::Waveform> wavs;
  std::vector<std::string> labels;
  for (int s = 0; s < 4; ++s)
    for (int u = 0; u < 2; ++u) {
      wavs.push_back(tiny_utterance(s, u));
      labels.push_back("spk" + std::to_string(s));
    }

  anon::AnonSystem system;
  Matrix sem_feats, ac_feats;
  for (const auto& w : wavs) {
    const Matrix sf =
        semantic::features(w, {400, 320, dsp::Window::kHann}, 10);
    const auto af =
        codec::acoustic_frame_vectors(w, {640, 320, dsp::Window::kHann}, 14);
    for (std::size_t t = 0; t < sf.rows(); ++t) sem_feats.append_row(sf.row(t));
    for (std::size_t t = 0; t < af.frames.rows(); ++t)
      ac_feats.append_row(af.frames.row(t));
  }
  system.semantic_cb = semantic::train_semantic(sem_feats, n_s, 5);
  system.rvq = codec::train_rvq(ac_feats, q, n_q, 6);
  system.rvq.q_coarse = q_coarse;

  lm::LmHyperParams shape;
  shape.width = 16;
  shape.blocks = 1;
  shape.heads = 2;
  shape.max_positions = 256;
  system.coarse = lm::CoarseLm::create(n_s, n_q, q_coarse, shape, 7);
  system.fine = lm::FineLm::create(n_q, q, q_coarse, shape, 8);
  system.pool = anon::build_prompt_pool({wavs[0], wavs[2], wavs[4]},
                                        {"spk0", "spk1", "spk2"}, system.rvq,
                                        20);
  system.sampler.temperature = 0.7;
  system.validate();
  return system;
}

}  // namespace

TEST_CASE("prompt pool size matches the input count") {
  std::vector<dsp::Waveform> wavs;
  std::vector<std::string> labels;
  for (int i = 0; i < 5; ++i) {
    wavs.push_back(tiny_utterance(i % 4, i % 2));
    labels.push_back("s" + std::to_string(i));
  }
  codec::RvqStack rvq;
  Matrix feats;
  for (const auto& w : wavs) {
    const auto f =
        codec::acoustic_frame_vectors(w, rvq.frame_spec, rvq.n_cepstra);
    for (std::size_t t = 0; t < f.frames.rows(); ++t)
      feats.append_row(f.frames.row(t));
  }
  rvq = codec::train_rvq(feats, 4, 8, 3);
  const auto pool = anon::build_prompt_pool(wavs, labels, rvq, 10);
  CHECK(pool.entries.size() == 5);
  for (const auto& e : pool.entries) {
    CHECK(e.tokens.rows() == 4);  // Q rows
    CHECK(e.tokens.cols() <= 10);
  }
  CHECK(pool.entries[1].label == "s1");
}

TEST_CASE("short utterance keeps its full length in the pool") {
  const auto w = tiny_utterance(0, 0);
  codec::RvqStack rvq;
  const auto feats =
      codec::acoustic_frame_vectors(w, rvq.frame_spec, rvq.n_cepstra);
  rvq = codec::train_rvq(feats.frames, 2, 4, 3);
  const std::size_t t = feats.frames.rows();
  const auto pool = anon::build_prompt_pool({w}, {"s"}, rvq, t + 1000);
  CHECK(pool.entries.at(0).tokens.cols() == t);
}

TEST_CASE("empty prompt pool input is an error") {
  codec::RvqStack rvq;
  CHECK_THROWS_AS(anon::build_prompt_pool({}, {}, rvq, 10), DataError);
}

TEST_CASE("speaker-level selection ignores the utterance id") {
  anon::PromptPool pool;
  pool.entries.resize(7);
  anon::AnonPolicy policy{anon::Level::kSpeaker, 1234};
  const auto a = anon::select_pseudo_speaker(pool, policy, "alice", "u1");
  const auto b = anon::select_pseudo_speaker(pool, policy, "alice", "u2");
  CHECK(a == b);
  // Oracle: the declared hash formula.
  CHECK(a == stable_hash(1234, "alice") % 7);
}

TEST_CASE("utterance-level selection uses the declared hash") {
  anon::PromptPool pool;
  pool.entries.resize(7);
  anon::AnonPolicy policy{anon::Level::kUtterance, 99};
  const auto a = anon::select_pseudo_speaker(pool, policy, "bob", "u1");
  CHECK(a == stable_hash(99, "bob", "u1") % 7);
  CHECK(a == anon::select_pseudo_speaker(pool, policy, "bob", "u1"));
}

TEST_CASE("pool of size one always selects prompt 0") {
  anon::PromptPool pool;
  pool.entries.resize(1);
  for (const auto level : {anon::Level::kSpeaker, anon::Level::kUtterance}) {
    anon::AnonPolicy policy{level, 7777};
    for (int i = 0; i < 10; ++i)
      CHECK(anon::select_pseudo_speaker(pool, policy, "s" + std::to_string(i),
                                        "u") == 0);
  }
}

TEST_CASE("utterance-level selection varies over 20 utterances") {
  anon::PromptPool pool;
  pool.entries.resize(5);
  anon::AnonPolicy policy{anon::Level::kUtterance, 321};
  std::set<std::size_t> seen;
  for (int i = 0; i < 20; ++i)
    seen.insert(anon::select_pseudo_speaker(pool, policy, "carol",
                                            "u" + std::to_string(i)));
  CHECK(seen.size() > 1);
}

TEST_CASE("empty pool is an error") {
  anon::PromptPool pool;
  anon::AnonPolicy policy{anon::Level::kSpeaker, 1};
  CHECK_THROWS_AS(anon::select_pseudo_speaker(pool, policy, "s", "u"),
                  DataError);
}

TEST_CASE("anonymize is deterministic and length-preserving") {
  const auto system = tiny_system();
  const auto w = tiny_utterance(3, 1);
  anon::AnonPolicy policy{anon::Level::kSpeaker, 424242};
  const auto out1 = anon::anonymize(system, policy, w, "spk3", "u1");
  const auto out2 = anon::anonymize(system, policy, w, "spk3", "u1");
  CHECK(out1.samples == out2.samples);  // bit-identical

  const std::size_t t_s =
      system.semantic_cb.frame_spec.num_frames(w.samples.size());
  const auto& spec = system.rvq.frame_spec;
  CHECK(out1.samples.size() == (t_s - 1) * spec.hop + spec.frame_len);
}

TEST_CASE("different master seeds can pick different prompts") {
  const auto system = tiny_system();
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    anon::AnonPolicy policy{anon::Level::kSpeaker, seed};
    seen.insert(anon::select_pseudo_speaker(system.pool, policy, "spk3", "u"));
  }
  CHECK(seen.size() > 1);
}

TEST_CASE("system validation rejects mismatched dimensions") {
  auto system = tiny_system();
  system.coarse.n_s = 999;
  CHECK_THROWS_AS(system.validate(), DataError);
}

TEST_CASE("pool file round trip") {
  const auto system = tiny_system();
  const auto path = (fs::temp_directory_path() / "nac_pool_rt.bin").string();
  anon::save_pool(system.pool, path);
  const auto loaded = anon::load_pool(path);
  REQUIRE(loaded.entries.size() == system.pool.entries.size());
  for (std::size_t i = 0; i < loaded.entries.size(); ++i) {
    CHECK(loaded.entries[i].tokens == system.pool.entries[i].tokens);
    CHECK(loaded.entries[i].label == system.pool.entries[i].label);
  }
  fs::remove(path);
}

TEST_CASE("system bundle save/load/save is byte-exact") {
  // Files hold f32 tensors, so the contract is byte-exact at the file
  // level: re-saving a loaded bundle reproduces every file.
  const auto system = tiny_system();
  const auto dir1 = (fs::temp_directory_path() / "nac_sys_rt1").string();
  const auto dir2 = (fs::temp_directory_path() / "nac_sys_rt2").string();
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  anon::save_system(system, dir1);
  const auto loaded = anon::load_system(dir1);
  loaded.validate();
  anon::save_system(loaded, dir2);
  for (const char* name : {anon::kSemanticFile, anon::kCodecFile,
                           anon::kCoarseFile, anon::kFineFile,
                           anon::kPoolFile}) {
    std::ifstream f1(fs::path(dir1) / name, std::ios::binary);
    std::ifstream f2(fs::path(dir2) / name, std::ios::binary);
    REQUIRE(f1.good());
    REQUIRE(f2.good());
    const std::string b1((std::istreambuf_iterator<char>(f1)), {});
    const std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    CHECK(!b1.empty());
  }

  // And the loaded system behaves deterministically.
  const auto w = tiny_utterance(2, 0);
  anon::AnonPolicy policy{anon::Level::kUtterance, 5};
  const auto a = anon::anonymize(loaded, policy, w, "spk2", "u0");
  const auto b = anon::anonymize(loaded, policy, w, "spk2", "u0");
  CHECK(a.samples == b.samples);
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}
