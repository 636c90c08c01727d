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

// Full-pipeline acceptance gate. Runs every release criterion and
// prints exactly one PASS/FAIL line per criterion; exit code 0 only
// when all of them hold. Criteria 1-4 and 9 come from two complete
// end-to-end runs (corpus -> train -> evaluate) with the default
// configuration; 5-8 are standalone property checks.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nacanon/anon.hpp"
#include "nacanon/codec.hpp"
#include "nacanon/common.hpp"
#include "nacanon/config.hpp"
#include "nacanon/corpus.hpp"
#include "nacanon/dsp.hpp"
#include "nacanon/eval.hpp"
#include "nacanon/lm.hpp"
#include "nacanon/pipeline.hpp"

namespace fs = std::filesystem;
using namespace nacanon;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

// ------------------------------------------------------------------
// Criterion 5a: independent brute-force EER oracle.
double eer_oracle(const std::vector<double>& tgt,
                  const std::vector<double>& non) {
  std::vector<double> thresholds = tgt;
  thresholds.insert(thresholds.end(), non.begin(), non.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());
  double best_gap = 1e300, best = 0.0;
  for (const double t : thresholds) {
    double miss = 0.0, fa = 0.0;
    for (const double s : tgt)
      if (s < t) miss += 1.0;
    for (const double s : non)
      if (s >= t) fa += 1.0;
    miss /= static_cast<double>(tgt.size());
    fa /= static_cast<double>(non.size());
    if (std::abs(miss - fa) < best_gap) {
      best_gap = std::abs(miss - fa);
      best = (miss + fa) / 2.0;
    }
  }
  return best;
}

Result criterion_oracles() {
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> tgt(1 + rng.uniform_int(40));
    std::vector<double> non(1 + rng.uniform_int(40));
    // Quantized scores force threshold ties.
    for (auto& v : tgt) v = std::floor(rng.uniform() * 8.0) / 8.0;
    for (auto& v : non) v = std::floor(rng.uniform() * 8.0) / 8.0;
    const double got = eval::compute_eer(tgt, non);
    const double want = eer_oracle(tgt, non);
    if (got != want)
      return {false, "eer mismatch on set " + std::to_string(i)};
  }
  const int n_s = 16, n_q = 8, q_c = 2;
  for (int i = 0; i < 1000; ++i) {
    semantic::SemanticTokens s(1 + rng.uniform_int(20));
    for (auto& id : s) id = static_cast<int>(rng.uniform_int(n_s));
    codec::TokenGrid prompt(q_c, 1 + rng.uniform_int(10));
    codec::TokenGrid target(q_c, rng.uniform_int(12));
    for (std::size_t q = 0; q < prompt.rows(); ++q)
      for (std::size_t t = 0; t < prompt.cols(); ++t)
        prompt.at(q, t) = static_cast<int>(rng.uniform_int(n_q));
    for (std::size_t q = 0; q < target.rows(); ++q)
      for (std::size_t t = 0; t < target.cols(); ++t)
        target.at(q, t) = static_cast<int>(rng.uniform_int(n_q));
    const auto seq = lm::flatten_coarse(s, prompt, target, q_c, n_s, n_q);
    const auto back = lm::unflatten_coarse(seq, q_c, n_s, n_q);
    if (back.s != s || !(back.prompt == prompt) || !(back.target == target))
      return {false, "flatten round trip failed on case " + std::to_string(i)};
  }
  return {true, "1000 EER sets and 1000 flatten round trips exact"};
}

// ------------------------------------------------------------------
// Criterion 6: finite-difference gradient check + single-batch overfit.
Result criterion_gradients() {
  lm::LmHyperParams hp;
  hp.vocab = 14;
  hp.out_vocab = 10;
  hp.width = 16;
  hp.blocks = 2;
  hp.heads = 2;
  hp.max_positions = 24;
  hp.segment_kinds = 3;
  lm::TransformerLm net(hp, 77);

  Rng rng(31);
  lm::LmInput input;
  const std::size_t t_len = 9;
  input.tokens.resize(t_len);
  input.segments.resize(t_len);
  input.positions.resize(t_len);
  input.targets.assign(t_len, -1);
  input.target_ranges.assign(t_len, {0, hp.out_vocab});
  for (std::size_t t = 0; t < t_len; ++t) {
    input.tokens[t] = {static_cast<int>(rng.uniform_int(hp.vocab))};
    input.segments[t] = static_cast<int>(rng.uniform_int(hp.segment_kinds));
    input.positions[t] = static_cast<int>(t);
    if (t % 2 == 1)
      input.targets[t] = static_cast<int>(rng.uniform_int(hp.out_vocab));
  }
  input.target_ranges[3] = {2, 8};
  if (input.targets[3] >= 0) input.targets[3] = 2 + input.targets[3] % 6;

  std::size_t n_pred = 0;
  for (int t : input.targets)
    if (t >= 0) ++n_pred;

  net.zero_grad();
  net.forward_backward(input);
  const double eps = 1e-4;
  double max_rel = 0.0;
  for (auto& [name, p] : net.params()) {
    Rng pick(stable_hash(9, name));
    const std::size_t n = p.data().size();
    std::vector<std::size_t> idx = {0, n - 1};
    for (int k = 0; k < 6; ++k) idx.push_back(pick.uniform_int(n));
    for (const std::size_t i : idx) {
      const double orig = p.data()[i];
      p.data()[i] = orig + eps;
      const double up = net.loss(input) * static_cast<double>(n_pred);
      p.data()[i] = orig - eps;
      const double down = net.loss(input) * static_cast<double>(n_pred);
      p.data()[i] = orig;
      const double fd = (up - down) / (2.0 * eps);
      const double an = net.grads()[name].data()[i];
      const double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
      max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
  }
  if (max_rel >= 1e-3)
    return {false, "max gradient relative error " + std::to_string(max_rel)};

  lm::TransformerLm over(hp, 5);
  std::vector<lm::LmInput> data = {input};
  lm::TrainOptions opts;
  opts.steps = 200;
  opts.batch_size = 1;
  const auto trace = over.train(data, opts);
  if (!(trace.back() < 0.1 * trace.front()))
    return {false, "overfit " + std::to_string(trace.front()) + " -> " +
                       std::to_string(trace.back())};
  std::ostringstream d;
  d << "max grad rel err " << max_rel << "; overfit " << trace.front()
    << " -> " << trace.back();
  return {true, d.str()};
}

// ------------------------------------------------------------------
// Criterion 7: codec MSE monotone in stages, 50 held-out utterances.
Result criterion_codec_monotone(const codec::RvqStack& rvq) {
  corpus::CorpusShape shape;  // defaults
  const std::uint64_t held_out_seed = 990007;
  int checked = 0;
  for (int i = 0; i < 50; ++i) {
    const auto spk = corpus::generate_speaker(held_out_seed, i);
    const auto script = corpus::generate_script(held_out_seed, i, 0, shape);
    const auto wav =
        corpus::synthesize_utterance(spk, script,
                                     stable_hash(held_out_seed, "utt",
                                                 std::to_string(i)),
                                     shape)
            .first;
    const auto tokens = codec::encode(wav, rvq);
    const auto target =
        codec::acoustic_frame_vectors(wav, rvq.frame_spec, rvq.n_cepstra);
    double prev = 1e300;
    for (std::size_t k = 1; k <= rvq.num_stages(); ++k) {
      const Matrix rec = codec::reconstruct_features(tokens, rvq, k);
      double mse = 0.0;
      for (std::size_t t = 0; t < rec.rows(); ++t)
        for (std::size_t j = 0; j < rec.cols(); ++j) {
          const double d = rec[t][j] - target.frames[t][j];
          mse += d * d;
        }
      if (mse > prev + 1e-9)
        return {false, "MSE increased at stage " + std::to_string(k) +
                           " on held-out utterance " + std::to_string(i)};
      prev = mse;
    }
    ++checked;
  }
  return {true, std::to_string(checked) +
                    " held-out utterances monotone for k = 1..Q"};
}

// ------------------------------------------------------------------
// Criterion 8: fine stage never sees semantic tokens.
Result criterion_fine_scope() {
  Rng rng(404);
  for (int i = 0; i < 100; ++i) {
    const int n_s = 12, n_q = 6, q_c = 2, q_total = 4;
    lm::LmHyperParams hp;
    hp.width = 16;
    hp.blocks = 1;
    hp.heads = 2;
    hp.max_positions = 64;
    const lm::FineLm fine =
        lm::FineLm::create(n_q, q_total, q_c, hp, 1000 + i);

    semantic::SemanticTokens s(5 + rng.uniform_int(6));
    for (auto& id : s) id = static_cast<int>(rng.uniform_int(n_s));
    codec::TokenGrid prompt(q_total, 4), coarse(q_c, s.size());
    for (std::size_t q = 0; q < prompt.rows(); ++q)
      for (std::size_t t = 0; t < prompt.cols(); ++t)
        prompt.at(q, t) = static_cast<int>(rng.uniform_int(n_q));
    for (std::size_t q = 0; q < coarse.rows(); ++q)
      for (std::size_t t = 0; t < coarse.cols(); ++t)
        coarse.at(q, t) = static_cast<int>(rng.uniform_int(n_q));

    // Mutate one semantic token, carry both versions through the
    // flattened coarse sequence, and confirm the acoustic grids (the
    // only thing the fine stage consumes) are untouched, giving
    // bit-identical fine outputs.
    semantic::SemanticTokens s2 = s;
    s2[rng.uniform_int(s2.size())] =
        static_cast<int>(rng.uniform_int(n_s));
    const auto seq1 = lm::flatten_coarse(s, prompt.top_rows(q_c), coarse,
                                         q_c, n_s, n_q);
    const auto seq2 = lm::flatten_coarse(s2, prompt.top_rows(q_c), coarse,
                                         q_c, n_s, n_q);
    const auto u1 = lm::unflatten_coarse(seq1, q_c, n_s, n_q);
    const auto u2 = lm::unflatten_coarse(seq2, q_c, n_s, n_q);
    if (!(u1.target == u2.target))
      return {false, "semantic mutation leaked into acoustic tokens"};
    const auto g1 = lm::sample_fine(fine, prompt, u1.target, 0.7, 99 + i);
    const auto g2 = lm::sample_fine(fine, prompt, u2.target, 0.7, 99 + i);
    if (!(g1 == g2))
      return {false, "fine output changed on case " + std::to_string(i)};
  }
  return {true, "100 random semantic mutations, fine outputs bit-identical"};
}

// ------------------------------------------------------------------
// End-to-end run shared by criteria 1-4 and 9.
struct RunArtifacts {
  fs::path dir;
  eval::MetricsReport report;
};

RunArtifacts full_run(const Config& cfg, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string manifest =
      pipeline::generate_corpus(cfg, (dir / "corpus").string(), false);
  pipeline::train(cfg, manifest, (dir / "bundle").string());
  const anon::AnonSystem system =
      pipeline::load_bundle((dir / "bundle").string());
  const pipeline::EvalArtifacts art =
      pipeline::evaluate(cfg, system, manifest);
  fs::create_directories(dir / "report");
  eval::write_report(art.report, (dir / "report" / "report.txt").string());
  eval::write_scores(art.original_trials,
                     (dir / "report" / "scores_original.txt").string());
  eval::write_scores(art.anonymized_trials,
                     (dir / "report" / "scores_anonymized.txt").string());

  // A few anonymized WAVs for the byte-identity criterion.
  const pipeline::EvalSplit split = pipeline::split_corpus(cfg, manifest);
  fs::create_directories(dir / "wavs");
  const anon::AnonPolicy policy{anon::Level::kSpeaker,
                                cfg.get_u64("master_seed")};
  for (std::size_t i = 0; i < 3 && i < split.trial.size(); ++i) {
    const auto& u = split.trial[i];
    dsp::write_wav(anon::anonymize(system, policy, u.wav, u.speaker_id,
                                   u.utt_id),
                   (dir / "wavs" / (u.utt_id + ".wav")).string());
  }
  return {dir, art.report};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

Result criterion_determinism(const fs::path& run1, const fs::path& run2) {
  std::size_t files = 0;
  for (const char* sub : {"bundle", "report", "wavs"}) {
    for (const auto& entry :
         fs::recursive_directory_iterator(run1 / sub)) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), run1);
      const std::string a = read_bytes(entry.path());
      const std::string b = read_bytes(run2 / rel);
      if (a.empty() || a != b)
        return {false, "byte mismatch: " + rel.string()};
      ++files;
    }
  }
  return {true, std::to_string(files) + " artifact files byte-identical"};
}

}  // namespace

int main() {
  std::map<int, Result> results;
  std::map<int, std::string> names = {
      {1, "directional privacy (EER gap >= 0.15, original < 0.10)"},
      {2, "prosody preservation (mean pitch correlation > 0.3)"},
      {3, "bounded utility loss (content error delta <= 0.25)"},
      {4, "voice distinctiveness (G_VD finite, > -10 dB)"},
      {5, "oracle equivalence (EER brute force, flatten round trip)"},
      {6, "gradient checks and single-batch overfit"},
      {7, "codec reconstruction MSE monotone in codebooks"},
      {8, "fine stage independent of semantic tokens"},
      {9, "end-to-end determinism (byte-identical artifacts)"},
  };

  results[5] = criterion_oracles();
  results[6] = criterion_gradients();
  results[8] = criterion_fine_scope();

  const fs::path work = fs::temp_directory_path() / "nac_acceptance";
  const Config cfg;  // defaults throughout
  try {
    const RunArtifacts run1 = full_run(cfg, work / "run1");
    const RunArtifacts run2 = full_run(cfg, work / "run2");
    const eval::MetricsReport& r = run1.report;

    {
      std::ostringstream d;
      d << "original EER " << r.original_eer << ", anonymized EER " << r.eer;
      results[1] = {r.original_eer < 0.10 &&
                        r.eer >= r.original_eer + 0.15,
                    d.str()};
    }
    {
      std::ostringstream d;
      d << "mean rho_F0 " << r.rho_f0 << " over " << r.rho_defined
        << " defined trials";
      results[2] = {r.rho_defined > 0 && r.rho_f0 > 0.3, d.str()};
    }
    {
      std::ostringstream d;
      d << "content error " << r.original_content_error << " -> "
        << r.content_error;
      results[3] = {r.content_error <= r.original_content_error + 0.25,
                    d.str()};
    }
    {
      std::ostringstream d;
      d << "G_VD " << r.g_vd_db << " dB over " << r.g_vd_speakers
        << " speakers";
      results[4] = {std::isfinite(r.g_vd_db) && r.g_vd_db > -10.0, d.str()};
    }
    {
      const anon::AnonSystem system =
          pipeline::load_bundle((run1.dir / "bundle").string());
      results[7] = criterion_codec_monotone(system.rvq);
    }
    results[9] = criterion_determinism(run1.dir, run2.dir);
  } catch (const std::exception& e) {
    for (int id : {1, 2, 3, 4, 7, 9})
      if (!results.count(id))
        results[id] = {false, std::string("pipeline failed: ") + e.what()};
  }

  bool all = true;
  for (const auto& [id, name] : names) {
    const Result& res = results[id];
    std::printf("%s  criterion %d: %s (%s)\n", res.pass ? "PASS" : "FAIL",
                id, name.c_str(), res.detail.c_str());
    all = all && res.pass;
  }
  return all ? 0 : 1;
}
