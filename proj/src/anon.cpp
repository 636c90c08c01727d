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

#include "nacanon/anon.hpp"

#include <filesystem>

#include "nacanon/common.hpp"
#include "nacanon/model_io.hpp"

namespace nacanon::anon {

void AnonSystem::validate() const {
  if (semantic_cb.centroids.empty()) throw DataError("system: no semantic codebook");
  if (rvq.codebooks.empty()) throw DataError("system: no RVQ stack");
  const int n_q = static_cast<int>(rvq.codebook_size());
  if (coarse.n_s != static_cast<int>(semantic_cb.size()))
    throw DataError("system: coarse LM N_S does not match semantic codebook");
  if (coarse.n_q != n_q || fine.n_q != n_q)
    throw DataError("system: LM N_Q does not match RVQ codebook size");
  if (coarse.q_coarse != rvq.q_coarse || fine.q_coarse != rvq.q_coarse)
    throw DataError("system: Q_C mismatch");
  if (fine.q_total != static_cast<int>(rvq.num_stages()))
    throw DataError("system: fine LM Q does not match RVQ stages");
  if (semantic_cb.frame_spec.hop != rvq.frame_spec.hop)
    throw DataError("system: semantic and acoustic hops differ");
  for (const auto& e : pool.entries)
    if (e.tokens.rows() != rvq.num_stages())
      throw DataError("system: pool entry rows != Q");
}

PromptPool build_prompt_pool(const std::vector<dsp::Waveform>& utterances,
                             const std::vector<std::string>& labels,
                             const codec::RvqStack& rvq,
                             std::size_t max_frames) {
  if (utterances.empty()) throw DataError("build_prompt_pool: empty input");
  PromptPool pool;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    PromptEntry e;
    e.prompt_id = "prompt" + std::to_string(i);
    e.label = i < labels.size() ? labels[i] : "";
    e.tokens = codec::encode(utterances[i], rvq);
    if (e.tokens.cols() > max_frames)
      e.tokens = e.tokens.left_cols(max_frames);
    pool.entries.push_back(std::move(e));
  }
  return pool;
}

std::size_t select_pseudo_speaker(const PromptPool& pool,
                                  const AnonPolicy& policy,
                                  const std::string& speaker_id,
                                  const std::string& utterance_id) {
  if (pool.entries.empty()) throw DataError("select_pseudo_speaker: empty pool");
  std::uint64_t h;
  if (policy.level == Level::kSpeaker)
    h = stable_hash({std::to_string(policy.master_seed), speaker_id});
  else
    h = stable_hash(
        {std::to_string(policy.master_seed), speaker_id, utterance_id});
  return h % pool.entries.size();
}

dsp::Waveform anonymize(const AnonSystem& system, const AnonPolicy& policy,
                        const dsp::Waveform& w, const std::string& speaker_id,
                        const std::string& utterance_id) {
  system.validate();
  const semantic::SemanticTokens s = semantic::tokenize(w, system.semantic_cb);
  const std::size_t pick =
      select_pseudo_speaker(system.pool, policy, speaker_id, utterance_id);
  const codec::TokenGrid& prompt = system.pool.entries[pick].tokens;

  const auto t_a = static_cast<int>(s.size());
  const std::uint64_t coarse_seed =
      stable_hash(policy.master_seed, "coarse", utterance_id);
  const std::uint64_t fine_seed =
      stable_hash(policy.master_seed, "fine", utterance_id);
  const codec::TokenGrid coarse_tokens =
      lm::sample_coarse(system.coarse, s, prompt.top_rows(system.rvq.q_coarse),
                        t_a, system.sampler.temperature, coarse_seed);
  const codec::TokenGrid full = lm::sample_fine(
      system.fine, prompt, coarse_tokens, system.sampler.temperature,
      fine_seed);
  return codec::decode(full, system.rvq, w.sample_rate_hz);
}

void save_pool(const PromptPool& pool, const std::string& path) {
  TensorMap t;
  t["meta"] = {{1}, {static_cast<double>(pool.entries.size())}};
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    const auto& e = pool.entries[i];
    char name[32];
    std::snprintf(name, sizeof(name), "entry.%04zu", i);
    NamedTensor grid;
    grid.dims = {static_cast<std::uint32_t>(e.tokens.rows()),
                 static_cast<std::uint32_t>(e.tokens.cols())};
    grid.values.reserve(e.tokens.rows() * e.tokens.cols());
    for (std::size_t q = 0; q < e.tokens.rows(); ++q)
      for (std::size_t c = 0; c < e.tokens.cols(); ++c)
        grid.values.push_back(static_cast<double>(e.tokens.at(q, c)));
    t[name] = std::move(grid);
    std::snprintf(name, sizeof(name), "label.%04zu", i);
    NamedTensor label;
    label.dims = {static_cast<std::uint32_t>(e.label.size())};
    for (char c : e.label)
      label.values.push_back(static_cast<double>(
          static_cast<unsigned char>(c)));
    t[name] = std::move(label);
  }
  save_container(path, "POOL", t);
}

PromptPool load_pool(const std::string& path) {
  const TensorMap t = load_container(path, "POOL");
  const auto meta = t.find("meta");
  if (meta == t.end() || meta->second.values.size() != 1)
    throw FormatError("pool container missing meta: " + path);
  PromptPool pool;
  const auto count = static_cast<std::size_t>(meta->second.values[0]);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "entry.%04zu", i);
    const auto it = t.find(name);
    if (it == t.end() || it->second.dims.size() != 2)
      throw FormatError("pool container missing entry: " + path);
    PromptEntry e;
    e.prompt_id = "prompt" + std::to_string(i);
    e.tokens = codec::TokenGrid(it->second.dims[0], it->second.dims[1]);
    std::size_t k = 0;
    for (std::size_t q = 0; q < e.tokens.rows(); ++q)
      for (std::size_t c = 0; c < e.tokens.cols(); ++c)
        e.tokens.at(q, c) = static_cast<int>(it->second.values[k++]);
    std::snprintf(name, sizeof(name), "label.%04zu", i);
    if (const auto lt = t.find(name); lt != t.end())
      for (double v : lt->second.values)
        e.label.push_back(static_cast<char>(static_cast<int>(v)));
    pool.entries.push_back(std::move(e));
  }
  return pool;
}

void save_system(const AnonSystem& system, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  semantic::save_semantic(system.semantic_cb,
                          (fs::path(dir) / kSemanticFile).string());
  codec::save_rvq(system.rvq, (fs::path(dir) / kCodecFile).string());
  lm::save_coarse(system.coarse, (fs::path(dir) / kCoarseFile).string());
  lm::save_fine(system.fine, (fs::path(dir) / kFineFile).string());
  save_pool(system.pool, (fs::path(dir) / kPoolFile).string());
}

AnonSystem load_system(const std::string& dir) {
  namespace fs = std::filesystem;
  AnonSystem system;
  system.semantic_cb =
      semantic::load_semantic((fs::path(dir) / kSemanticFile).string());
  system.rvq = codec::load_rvq((fs::path(dir) / kCodecFile).string());
  system.coarse = lm::load_coarse((fs::path(dir) / kCoarseFile).string());
  system.fine = lm::load_fine((fs::path(dir) / kFineFile).string());
  system.pool = load_pool((fs::path(dir) / kPoolFile).string());
  system.validate();
  return system;
}

}  // namespace nacanon::anon
