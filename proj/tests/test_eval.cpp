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
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "nacanon/common.hpp"
#include "nacanon/corpus.hpp"
#include "nacanon/eval.hpp"

namespace fs = std::filesystem;
using namespace nacanon;

namespace {

// Independent EER oracle: try every candidate threshold and report
// (miss + fa) / 2 at the minimum |miss - fa|, ties toward the lower
// threshold.
double eer_oracle(std::vector<double> tgt, std::vector<double> non) {
  std::vector<double> thresholds = tgt;
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  double best_gap = 1e9, best = 0.0;
  for (const double t : thresholds) {
    double miss = 0.0, fa = 0.0;
    for (const double s : tgt)
      if (s < t) miss += 1.0;
    for (const double s : non)
      if (s >= t) fa += 1.0;
    miss /= static_cast<double>(tgt.size());
    fa /= static_cast<double>(non.size());
    const double gap = std::abs(miss - fa);
    if (gap < best_gap) {  // strict: ties keep the lower threshold
      best_gap = gap;
      best = (miss + fa) / 2.0;
    }
  }
  return best;
}

corpus::CorpusShape small_shape() {
  corpus::CorpusShape shape;
  shape.speakers = 3;
  shape.utterances_per_speaker = 3;
  shape.content_units = 6;
  shape.units_per_utterance = 6;
  shape.min_unit_frames = 6;
  shape.max_unit_frames = 8;
  return shape;
}

std::pair<dsp::Waveform, std::vector<int>> small_utt(int speaker, int utt) {
  const auto shape = small_shape();
  return corpus::synthesize_utterance(
      corpus::generate_speaker(3, speaker),
      corpus::generate_script(3, speaker, utt, shape),
      stable_hash(3, "u", std::to_string(speaker) + "." + std::to_string(utt)),
      shape);
}

}  // namespace

TEST_CASE("speaker embedding is the frame mean and std, concatenated") {
  const auto [w, labels] = small_utt(0, 0);
  codec::RvqStack rvq;
  const auto emb = eval::speaker_embedding(w, rvq);
  const auto feats =
      codec::acoustic_frame_vectors(w, rvq.frame_spec, rvq.n_cepstra);
  const std::size_t t = feats.frames.rows(), d = feats.frames.cols();
  REQUIRE(emb.size() == 2 * d);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < t; ++i) mean += feats.frames[i][j];
    mean /= static_cast<double>(t);
    for (std::size_t i = 0; i < t; ++i) {
      const double dd = feats.frames[i][j] - mean;
      var += dd * dd;
    }
    var /= static_cast<double>(t);
    CHECK(emb[j] == doctest::Approx(mean).epsilon(1e-12));
    CHECK(emb[d + j] == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
  }
}

TEST_CASE("EER of perfectly separated scores is 0") {
  CHECK(eval::compute_eer({0.9, 0.8}, {0.1, 0.2}) == 0.0);
}

TEST_CASE("EER of inverted scores is 1") {
  CHECK(eval::compute_eer({0.1, 0.2}, {0.9, 0.8}) == 1.0);
}

TEST_CASE("EER of interleaved scores is 0.5") {
  CHECK(eval::compute_eer({0.7, 0.3}, {0.5, 0.1}) == doctest::Approx(0.5));
}

TEST_CASE("EER matches a brute-force oracle on random score sets") {
  Rng rng(2024);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t nt = 1 + rng.uniform_int(200);
    const std::size_t nn = 1 + rng.uniform_int(200);
    std::vector<double> tgt(nt), non(nn);
    for (auto& v : tgt) v = rng.uniform(-1.0, 1.0) + 0.3;
    for (auto& v : non) v = rng.uniform(-1.0, 1.0);
    // occasionally force ties across the two sets
    if (rep % 3 == 0 && !non.empty()) tgt[0] = non[0];
    CHECK(eval::compute_eer(tgt, non) == eer_oracle(tgt, non));
  }
}

TEST_CASE("EER rejects empty score sets") {
  CHECK_THROWS_AS(eval::compute_eer({}, {0.5}), DataError);
  CHECK_THROWS_AS(eval::compute_eer({0.5}, {}), DataError);
}

TEST_CASE("pitch correlation of an utterance with itself is 1") {
  const auto [w, labels] = small_utt(1, 0);
  const dsp::FrameSpec spec{640, 320, dsp::Window::kHann};
  const auto rho = eval::pitch_correlation(w, w, spec);
  REQUIRE(rho.has_value());
  CHECK(*rho == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pitch correlation is affine invariant and symmetric") {
  // Two frequency-modulated sines whose instantaneous F0 curves are
  // affine images of each other: f(t) and 2 f(t) + 10 Hz. Pearson over
  // the voiced frames must stay (near) 1.
  const int sr = 16000;
  auto fm_sine = [&](double base, double scale, double offset) {
    dsp::Waveform w;
    w.sample_rate_hz = sr;
    w.samples.resize(2 * sr);
    double phase = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      const double t = static_cast<double>(i) / sr;
      const double f0 =
          scale * (base + 25.0 * std::sin(2.0 * M_PI * t / 0.7)) + offset;
      phase += 2.0 * M_PI * f0 / sr;
      w.samples[i] = 0.4 * std::sin(phase);
    }
    return w;
  };
  const auto a = fm_sine(120.0, 1.0, 0.0);
  const auto b = fm_sine(120.0, 2.0, 10.0);
  const dsp::FrameSpec spec{640, 320, dsp::Window::kHann};
  const auto rho_ab = eval::pitch_correlation(a, b, spec);
  const auto rho_ba = eval::pitch_correlation(b, a, spec);
  REQUIRE(rho_ab.has_value());
  REQUIRE(rho_ba.has_value());
  CHECK(*rho_ab == doctest::Approx(*rho_ba).epsilon(1e-12));  // symmetric
  CHECK(*rho_ab > 0.99);
}

TEST_CASE("pitch correlation of silence is UNDEFINED") {
  dsp::Waveform silence;
  silence.samples.assign(16000, 0.0);
  const dsp::FrameSpec spec{640, 320, dsp::Window::kHann};
  CHECK(!eval::pitch_correlation(silence, silence, spec).has_value());
}

TEST_CASE("voice distinctiveness gain examples") {
  Matrix orig(3, 3), anon(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      orig[i][j] = i == j ? 0.9 : 0.1;  // DD = 0.8
      anon[i][j] = i == j ? 0.5 : 0.1;  // DD = 0.4
    }
  CHECK(eval::voice_distinctiveness_gain(orig, orig) == doctest::Approx(0.0));
  CHECK(eval::voice_distinctiveness_gain(orig, anon) ==
        doctest::Approx(10.0 * std::log10(0.5)));  // about -3.0103 dB

  Matrix flat(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) flat[i][j] = 0.3;  // DD = 0 -> floor
  CHECK(eval::voice_distinctiveness_gain(orig, flat) ==
        doctest::Approx(10.0 * std::log10(1e-6 / 0.8)));
}

TEST_CASE("voice distinctiveness gain needs at least 2 speakers") {
  Matrix one(1, 1);
  one[0][0] = 1.0;
  CHECK_THROWS_AS(eval::voice_distinctiveness_gain(one, one), DataError);
}

TEST_CASE("similarity matrix on hand-computed embeddings") {
  // Speaker 0: two identical unit vectors along x. Speaker 1: one along y.
  std::vector<std::vector<std::vector<double>>> sets = {
      {{1.0, 0.0}, {1.0, 0.0}},
      {{0.0, 1.0}, {0.0, 1.0}},
  };
  const Matrix m = eval::similarity_matrix(sets);
  REQUIRE(m.rows() == 2);
  CHECK(m[0][0] == doctest::Approx(1.0));  // the one non-self pair
  CHECK(m[1][1] == doctest::Approx(1.0));
  CHECK(m[0][1] == doctest::Approx(0.0));
  CHECK(m[1][0] == doctest::Approx(0.0));
}

TEST_CASE("levenshtein distance basics") {
  CHECK(eval::levenshtein({1, 2, 3}, {1, 2, 3}) == 0);
  CHECK(eval::levenshtein({1, 2, 3}, {1, 3}) == 1);       // deletion
  CHECK(eval::levenshtein({1, 2, 3}, {1, 4, 3}) == 1);    // substitution
  CHECK(eval::levenshtein({}, {1, 2}) == 2);              // insertions
  CHECK(eval::levenshtein({5, 6, 7, 8}, {}) == 4);
}

TEST_CASE("content error rate examples") {
  CHECK(eval::content_error_rate({{1, 2, 3}}, {{1, 2, 3}}) == 0.0);
  CHECK(eval::content_error_rate({{1, 2, 3, 4}}, {{}}) == 1.0);
  // capped at 1 even when the hypothesis is longer than the reference
  CHECK(eval::content_error_rate({{1}}, {{2, 3, 4, 5}}) == 1.0);
  CHECK_THROWS_AS(eval::content_error_rate({{1}}, {}), DataError);
}

TEST_CASE("content classifier decodes its own training utterances") {
  const auto shape = small_shape();
  std::vector<dsp::Waveform> wavs;
  std::vector<std::vector<int>> labels;
  std::vector<std::vector<int>> refs;
  for (int s = 0; s < shape.speakers; ++s)
    for (int u = 0; u < shape.utterances_per_speaker; ++u) {
      auto [w, l] = small_utt(s, u);
      refs.push_back(corpus::labels_to_units(l));
      wavs.push_back(std::move(w));
      labels.push_back(std::move(l));
    }
  codec::RvqStack rvq;
  const Matrix centroids = eval::train_content_classifier(
      wavs, labels, rvq, shape.content_units);
  std::vector<std::vector<int>> hyps;
  for (const auto& w : wavs)
    hyps.push_back(eval::decode_content_units(w, centroids, rvq));
  CHECK(eval::content_error_rate(refs, hyps) < 0.05);
}

TEST_CASE("content classifier requires ground truth") {
  codec::RvqStack rvq;
  CHECK_THROWS_AS(eval::train_content_classifier({}, {}, rvq, 4), DataError);
}

TEST_CASE("attack preconditions") {
  anon::AnonSystem system;  // untouched when the preconditions fail
  const auto [w, l] = small_utt(0, 0);
  const eval::LabeledUtterance u0{"u0", "s0", w};
  const eval::LabeledUtterance u1{"u1", "s1", w};
  CHECK_THROWS_AS(
      eval::semi_informed_attack(system, {}, {u0}, {u0, u1}, 1, false),
      DataError);
  CHECK_THROWS_AS(  // zero trial utterances
      eval::semi_informed_attack(system, {u0}, {}, {u0, u1}, 1, false),
      DataError);
  CHECK_THROWS_AS(
      eval::semi_informed_attack(system, {u0}, {u1}, {}, 1, false), DataError);
  CHECK_THROWS_AS(  // external set covers only one speaker
      eval::semi_informed_attack(system, {u0}, {u1}, {u0, u0}, 1, false),
      DataError);
}

TEST_CASE("original-data attack separates distinct synthetic voices") {
  // protect=false never touches the models, only the embeddings.
  anon::AnonSystem system;
  std::vector<eval::LabeledUtterance> enroll, trial, external;
  for (int s = 0; s < 2; ++s) {
    const auto id = "s" + std::to_string(s);
    enroll.push_back({id + "_e", id, small_utt(s, 0).first});
    trial.push_back({id + "_t", id, small_utt(s, 1).first});
  }
  // The whitening needs a reasonable external sample, not two utterances.
  for (int s = 0; s < 3; ++s)
    for (int u = 0; u < 3; ++u)
      external.push_back({"x" + std::to_string(s) + std::to_string(u),
                          "s" + std::to_string(s), small_utt(s, u).first});
  const auto trials =
      eval::semi_informed_attack(system, enroll, trial, external, 77, false);
  CHECK(trials.size() == 4);  // full cross product
  std::size_t targets = 0;
  for (const auto& t : trials)
    if (t.is_target) ++targets;
  CHECK(targets == 2);
  const auto tgt = eval::trial_scores(trials, true);
  const auto non = eval::trial_scores(trials, false);
  CHECK(*std::min_element(tgt.begin(), tgt.end()) >
        *std::max_element(non.begin(), non.end()));
}

TEST_CASE("trial score selection splits targets and non-targets") {
  std::vector<eval::Trial> trials = {
      {"e1", "t1", true, 0.9},
      {"e1", "t2", false, 0.2},
      {"e2", "t1", false, 0.1},
      {"e2", "t2", true, 0.8},
  };
  CHECK(eval::trial_scores(trials, true) == std::vector<double>{0.9, 0.8});
  CHECK(eval::trial_scores(trials, false) == std::vector<double>{0.2, 0.1});
}

TEST_CASE("score files are written with one trial per line") {
  std::vector<eval::Trial> trials = {{"e", "t", true, 0.5}};
  const auto path = (fs::temp_directory_path() / "nac_scores.txt").string();
  eval::write_scores(trials, path);
  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line.find("e") != std::string::npos);
  CHECK(line.find("target") != std::string::npos);
  fs::remove(path);
}
