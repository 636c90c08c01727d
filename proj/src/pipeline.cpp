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

#include "nacanon/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "nacanon/common.hpp"
#include "nacanon/lm.hpp"

namespace fs = std::filesystem;

namespace nacanon::pipeline {

corpus::CorpusShape corpus_shape(const Config& cfg) {
  corpus::CorpusShape shape;
  shape.speakers = cfg.get_int("corpus_speakers");
  shape.utterances_per_speaker = cfg.get_int("corpus_utts_per_speaker");
  shape.content_units = cfg.get_int("corpus_units");
  shape.units_per_utterance = cfg.get_int("corpus_units_per_utt");
  shape.min_unit_frames = cfg.get_int("corpus_min_unit_frames");
  shape.max_unit_frames = cfg.get_int("corpus_max_unit_frames");
  shape.sample_rate_hz = cfg.get_int("sample_rate");
  shape.frame_len = cfg.get_int("ac_frame_len");
  shape.hop = cfg.get_int("ac_hop");
  return shape;
}

std::string generate_corpus(const Config& cfg, const std::string& out_dir,
                            bool force) {
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force)
    throw ConfigError("output directory exists and is not empty (use force): " +
                      out_dir);
  fs::create_directories(out_dir);
  const corpus::CorpusShape shape = corpus_shape(cfg);
  const std::uint64_t seed = cfg.get_u64("corpus_seed");

  std::vector<corpus::ManifestEntry> entries;
  for (int s = 0; s < shape.speakers; ++s) {
    const corpus::SpeakerParams speaker = corpus::generate_speaker(seed, s);
    for (int u = 0; u < shape.utterances_per_speaker; ++u) {
      const corpus::ContentScript script =
          corpus::generate_script(seed, s, u, shape);
      const auto [wav, labels] = corpus::synthesize_utterance(
          speaker, script,
          stable_hash(seed, "utt",
                      std::to_string(s) + "." + std::to_string(u)),
          shape);
      char utt_id[32];
      std::snprintf(utt_id, sizeof(utt_id), "%s_u%03d",
                    speaker.speaker_id.c_str(), u);
      corpus::ManifestEntry e;
      e.utt_id = utt_id;
      e.speaker_id = speaker.speaker_id;
      e.wav_path = (fs::path(out_dir) / (std::string(utt_id) + ".wav")).string();
      e.label_path =
          (fs::path(out_dir) / (std::string(utt_id) + ".labels")).string();
      dsp::write_wav(wav, e.wav_path);
      corpus::write_labels(labels, e.label_path);
      entries.push_back(std::move(e));
    }
  }
  const std::string manifest = (fs::path(out_dir) / "manifest.tsv").string();
  corpus::write_manifest(entries, manifest);
  return manifest;
}

namespace {

struct LoadedUtterance {
  corpus::ManifestEntry entry;
  dsp::Waveform wav;
};

std::vector<LoadedUtterance> load_corpus(const std::string& manifest_path) {
  std::vector<LoadedUtterance> utts;
  for (const auto& e : corpus::read_manifest(manifest_path))
    utts.push_back({e, dsp::read_wav(e.wav_path)});
  if (utts.empty()) throw DataError("manifest lists no utterances");
  return utts;
}

lm::LmHyperParams lm_shape(const Config& cfg) {
  lm::LmHyperParams hp;
  hp.width = cfg.get_int("lm_width");
  hp.blocks = cfg.get_int("lm_blocks");
  hp.heads = cfg.get_int("lm_heads");
  hp.max_positions = cfg.get_int("lm_max_positions");
  return hp;
}

lm::TrainOptions train_options(const Config& cfg, int steps) {
  lm::TrainOptions opts;
  opts.learning_rate = cfg.get_double("lm_learning_rate");
  opts.momentum = cfg.get_double("lm_momentum");
  opts.clip_norm = cfg.get_double("lm_clip_norm");
  opts.batch_size = cfg.get_int("lm_batch_size");
  opts.steps = steps;
  return opts;
}

}  // namespace

TrainSummary train(const Config& cfg, const std::string& manifest_path,
                   const std::string& out_dir) {
  const auto utts = load_corpus(manifest_path);
  const std::uint64_t train_seed = cfg.get_u64("train_seed");

  dsp::FrameSpec sem_spec{cfg.get_int("sem_frame_len"), cfg.get_int("sem_hop"),
                          dsp::Window::kHann};
  dsp::FrameSpec ac_spec{cfg.get_int("ac_frame_len"), cfg.get_int("ac_hop"),
                         dsp::Window::kHann};
  const int n_mels = cfg.get_int("sem_n_mels");
  const int n_cepstra = cfg.get_int("n_cepstra");

  Matrix sem_feats, ac_feats;
  for (const auto& u : utts) {
    const Matrix sf = semantic::features(u.wav, sem_spec, n_mels);
    for (std::size_t t = 0; t < sf.rows(); ++t)
      sem_feats.append_row(sf.row(t));
    const auto af = codec::acoustic_frame_vectors(u.wav, ac_spec, n_cepstra);
    for (std::size_t t = 0; t < af.frames.rows(); ++t)
      ac_feats.append_row(af.frames.row(t));
  }

  semantic::SemanticCodebook sem_cb = semantic::train_semantic(
      sem_feats, cfg.get_int("n_s"), stable_hash(train_seed, "semantic"));
  sem_cb.frame_spec = sem_spec;
  sem_cb.n_mels = n_mels;

  codec::RvqStack rvq = codec::train_rvq(ac_feats, cfg.get_int("q"),
                                         cfg.get_int("n_q"),
                                         stable_hash(train_seed, "rvq"));
  rvq.q_coarse = cfg.get_int("q_coarse");
  rvq.frame_spec = ac_spec;
  rvq.n_cepstra = n_cepstra;

  // Pool: every utterance of the reserved pseudo-speaker block.
  std::set<std::string> speakers;
  for (const auto& u : utts) speakers.insert(u.entry.speaker_id);
  const int pool_speakers = cfg.get_int("pool_speakers");
  if (pool_speakers <= 0 ||
      pool_speakers >= static_cast<int>(speakers.size()))
    throw ConfigError("pool_speakers must be in [1, corpus speakers)");
  std::set<std::string> pool_set(
      std::prev(speakers.end(), pool_speakers), speakers.end());
  std::vector<dsp::Waveform> pool_wavs;
  std::vector<std::string> pool_labels;
  for (const auto& u : utts) {
    if (pool_set.count(u.entry.speaker_id)) {
      pool_wavs.push_back(u.wav);
      pool_labels.push_back(u.entry.speaker_id);
    }
  }
  const std::size_t prompt_max = cfg.get_u64("prompt_max_frames");
  anon::PromptPool pool =
      anon::build_prompt_pool(pool_wavs, pool_labels, rvq, prompt_max);
  pool.source = "corpus pseudo-speakers";

  // LM training pairs: target utterance + a same-speaker prompt.
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < utts.size(); ++i)
    by_speaker[utts[i].entry.speaker_id].push_back(i);

  std::vector<semantic::SemanticTokens> sem_tokens(utts.size());
  std::vector<codec::TokenGrid> grids(utts.size());
  for (std::size_t i = 0; i < utts.size(); ++i) {
    sem_tokens[i] = semantic::tokenize(utts[i].wav, sem_cb);
    grids[i] = codec::encode(utts[i].wav, rvq);
  }

  const int q_coarse = rvq.q_coarse;
  lm::CoarseLm coarse = lm::CoarseLm::create(
      cfg.get_int("n_s"), cfg.get_int("n_q"), q_coarse, lm_shape(cfg),
      stable_hash(train_seed, "coarse-init"));
  lm::FineLm fine = lm::FineLm::create(
      cfg.get_int("n_q"), cfg.get_int("q"), q_coarse, lm_shape(cfg),
      stable_hash(train_seed, "fine-init"));

  std::vector<lm::LmInput> coarse_inputs;
  std::vector<std::vector<lm::LmInput>> fine_inputs(fine.levels.size());
  for (const auto& [spk, idx] : by_speaker) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t i = idx[k];
      const std::size_t j = idx[(k + 1) % idx.size()];  // same-speaker prompt
      codec::TokenGrid prompt = grids[j];
      if (prompt.cols() > prompt_max) prompt = prompt.left_cols(prompt_max);
      const lm::TokenSequence seq =
          lm::flatten_coarse(sem_tokens[i], prompt.top_rows(q_coarse),
                             grids[i].top_rows(q_coarse), q_coarse,
                             coarse.n_s, coarse.n_q);
      coarse_inputs.push_back(lm::coarse_training_input(coarse, seq));
      for (std::size_t l = 0; l < fine.levels.size(); ++l)
        fine_inputs[l].push_back(
            lm::fine_training_input(fine, l, prompt, grids[i]));
    }
  }

  TrainSummary summary;
  const auto coarse_trace =
      coarse.net.train(coarse_inputs,
                       train_options(cfg, cfg.get_int("coarse_steps")));
  summary.coarse_initial_loss = coarse_trace.front();
  summary.coarse_final_loss = coarse_trace.back();
  for (std::size_t l = 0; l < fine.levels.size(); ++l) {
    const auto trace = fine.levels[l].train(
        fine_inputs[l], train_options(cfg, cfg.get_int("fine_steps")));
    summary.fine_final_losses.push_back(trace.back());
  }

  anon::AnonSystem system;
  system.semantic_cb = std::move(sem_cb);
  system.rvq = std::move(rvq);
  system.coarse = std::move(coarse);
  system.fine = std::move(fine);
  system.pool = std::move(pool);
  system.sampler.temperature = cfg.get_double("temperature");
  system.validate();
  anon::save_system(system, out_dir);
  cfg.save((fs::path(out_dir) / "config.txt").string());
  return summary;
}

anon::AnonSystem load_bundle(const std::string& dir) {
  anon::AnonSystem system = anon::load_system(dir);
  const std::string cfg_path = (fs::path(dir) / "config.txt").string();
  if (fs::exists(cfg_path)) {
    const Config cfg = Config::load(cfg_path);
    system.sampler.temperature = cfg.get_double("temperature");
  }
  return system;
}

EvalSplit split_corpus(const Config& cfg, const std::string& manifest_path) {
  const auto utts = load_corpus(manifest_path);
  std::set<std::string> speakers;
  for (const auto& u : utts) speakers.insert(u.entry.speaker_id);
  const int pool_speakers = cfg.get_int("pool_speakers");
  if (pool_speakers <= 0 || pool_speakers >= static_cast<int>(speakers.size()))
    throw ConfigError("pool_speakers must be in [1, corpus speakers)");
  const std::set<std::string> external_set(
      std::prev(speakers.end(), pool_speakers), speakers.end());
  const std::size_t enroll_utts = cfg.get_u64("enroll_utts");

  EvalSplit split;
  std::map<std::string, std::size_t> seen;
  for (const auto& u : utts) {
    eval::LabeledUtterance lu{u.entry.utt_id, u.entry.speaker_id, u.wav};
    if (external_set.count(u.entry.speaker_id)) {
      split.external.push_back(std::move(lu));
      split.external_labels.push_back(corpus::read_labels(u.entry.label_path));
    } else if (seen[u.entry.speaker_id]++ < enroll_utts) {
      split.enroll.push_back(std::move(lu));
    } else {
      split.trial.push_back(std::move(lu));
      split.trial_labels.push_back(corpus::read_labels(u.entry.label_path));
    }
  }
  if (split.trial.empty() || split.enroll.empty())
    throw DataError("corpus split produced empty enroll or trial set");
  return split;
}

EvalArtifacts evaluate(const Config& cfg, const anon::AnonSystem& system,
                       const std::string& manifest_path) {
  const EvalSplit split = split_corpus(cfg, manifest_path);
  const std::uint64_t master_seed = cfg.get_u64("master_seed");
  const std::uint64_t attacker_seed = cfg.get_u64("attacker_seed");
  if (master_seed == attacker_seed)
    std::cerr << "warning: attacker seed equals defender seed; the attack "
                 "is unrealistically strong\n";

  // Defender anonymizes the trial side at speaker level.
  const anon::AnonPolicy defender{anon::Level::kSpeaker, master_seed};
  std::vector<eval::LabeledUtterance> anon_trials;
  anon_trials.reserve(split.trial.size());
  for (const auto& u : split.trial) {
    eval::LabeledUtterance a{u.utt_id, u.speaker_id,
                             anon::anonymize(system, defender, u.wav,
                                             u.speaker_id, u.utt_id)};
    anon_trials.push_back(std::move(a));
  }

  EvalArtifacts art;
  art.original_trials =
      eval::semi_informed_attack(system, split.enroll, split.trial,
                                 split.external, attacker_seed, false);
  art.anonymized_trials =
      eval::semi_informed_attack(system, split.enroll, anon_trials,
                                 split.external, attacker_seed, true);

  eval::MetricsReport& r = art.report;
  r.original_eer =
      eval::compute_eer(eval::trial_scores(art.original_trials, true),
                        eval::trial_scores(art.original_trials, false));
  const auto tgt = eval::trial_scores(art.anonymized_trials, true);
  const auto non = eval::trial_scores(art.anonymized_trials, false);
  r.eer = eval::compute_eer(tgt, non);
  r.eer_target_trials = tgt.size();
  r.eer_nontarget_trials = non.size();

  // Prosody preservation.
  double rho_sum = 0.0;
  for (std::size_t i = 0; i < split.trial.size(); ++i) {
    const auto rho = eval::pitch_correlation(
        split.trial[i].wav, anon_trials[i].wav, system.rvq.frame_spec);
    if (rho) {
      rho_sum += *rho;
      ++r.rho_defined;
    } else {
      ++r.rho_undefined;
    }
  }
  r.rho_f0 = r.rho_defined > 0 ? rho_sum / r.rho_defined : 0.0;

  // Voice distinctiveness over the evaluated speakers.
  std::map<std::string, std::vector<std::vector<double>>> orig_sets,
      anon_sets;
  for (const auto& u : split.trial)
    orig_sets[u.speaker_id].push_back(
        eval::speaker_embedding(u.wav, system.rvq));
  for (const auto& u : anon_trials)
    anon_sets[u.speaker_id].push_back(
        eval::speaker_embedding(u.wav, system.rvq));
  std::vector<std::vector<std::vector<double>>> orig_list, anon_list;
  for (auto& [spk, v] : orig_sets) {
    orig_list.push_back(std::move(v));
    anon_list.push_back(std::move(anon_sets[spk]));
  }
  r.g_vd_speakers = orig_list.size();
  r.g_vd_db =
      eval::voice_distinctiveness_gain(eval::similarity_matrix(orig_list),
                                       eval::similarity_matrix(anon_list));

  // Content error rate: the evaluator retrains its frame classifier on
  // utterance-level anonymized external data, like the attacker's ASR.
  std::vector<std::vector<int>> refs;
  for (const auto& labels : split.trial_labels)
    refs.push_back(corpus::labels_to_units(labels));
  const int n_units = cfg.get_int("corpus_units");
  {
    std::vector<dsp::Waveform> ext_wavs;
    for (const auto& u : split.external) ext_wavs.push_back(u.wav);
    const Matrix orig_classifier = eval::train_content_classifier(
        ext_wavs, split.external_labels, system.rvq, n_units);
    std::vector<std::vector<int>> hyps;
    for (const auto& u : split.trial)
      hyps.push_back(
          eval::decode_content_units(u.wav, orig_classifier, system.rvq));
    r.original_content_error = eval::content_error_rate(refs, hyps);
  }
  {
    const anon::AnonPolicy eval_policy{anon::Level::kUtterance, attacker_seed};
    std::vector<dsp::Waveform> ext_anon;
    for (const auto& u : split.external)
      ext_anon.push_back(anon::anonymize(system, eval_policy, u.wav,
                                         u.speaker_id, u.utt_id));
    const Matrix anon_classifier = eval::train_content_classifier(
        ext_anon, split.external_labels, system.rvq, n_units);
    std::vector<std::vector<int>> hyps;
    for (const auto& u : anon_trials)
      hyps.push_back(
          eval::decode_content_units(u.wav, anon_classifier, system.rvq));
    r.content_error = eval::content_error_rate(refs, hyps);
    r.content_trials = refs.size();
  }
  return art;
}

}  // namespace nacanon::pipeline
