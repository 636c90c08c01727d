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

#include "nacanon/config.hpp"

#include <fstream>
#include <sstream>

#include "nacanon/common.hpp"

namespace nacanon {

const std::vector<Config::KeyDoc>& Config::key_docs() {
  static const std::vector<KeyDoc> docs = {
      {"sample_rate", "16000", "audio sample rate in Hz"},
      {"sem_frame_len", "400", "semantic analysis frame length (samples)"},
      {"sem_hop", "320", "semantic hop; kept equal to ac_hop so T_S == T_A"},
      {"sem_n_mels", "10", "mel filterbank channels in semantic features"},
      {"n_s", "64", "semantic codebook size N_S"},
      {"ac_frame_len", "640", "acoustic analysis frame length (samples)"},
      {"ac_hop", "320", "acoustic hop (samples)"},
      {"n_cepstra", "14", "cepstral coefficients per acoustic frame"},
      {"q", "8", "number of RVQ codebooks Q"},
      {"q_coarse", "2", "coarse codebooks Q_C"},
      {"n_q", "64", "codewords per RVQ codebook N_Q"},
      {"lm_width", "64", "transformer width"},
      {"lm_blocks", "2", "transformer blocks"},
      {"lm_heads", "4", "attention heads"},
      {"lm_max_positions", "512", "position capacity P"},
      {"lm_learning_rate", "0.3", "momentum-SGD learning rate"},
      {"lm_momentum", "0.9", "momentum coefficient"},
      {"lm_clip_norm", "1.0", "global gradient-norm clip"},
      {"lm_batch_size", "4", "sequences per optimizer step"},
      {"coarse_steps", "300", "coarse LM training steps"},
      {"fine_steps", "120", "training steps per fine level"},
      {"temperature", "0.7", "sampling temperature"},
      {"master_seed", "1234", "defender master seed"},
      {"attacker_seed", "999", "attacker master seed"},
      {"train_seed", "42", "model training / init seed"},
      {"corpus_seed", "7", "synthetic corpus seed"},
      {"corpus_speakers", "20", "number of synthetic speakers"},
      {"corpus_utts_per_speaker", "10", "utterances per speaker"},
      {"corpus_units", "12", "content-unit alphabet size U"},
      {"corpus_units_per_utt", "12", "content units per utterance"},
      {"corpus_min_unit_frames", "3", "minimum unit duration (frames)"},
      {"corpus_max_unit_frames", "4", "maximum unit duration (frames)"},
      {"prompt_max_frames", "24", "acoustic prompt truncation length"},
      {"pool_speakers", "6", "corpus speakers reserved as pseudo-speakers"},
      {"enroll_utts", "5", "enrollment utterances per evaluated speaker"},
  };
  return docs;
}

Config::Config() {
  for (const auto& d : key_docs()) values_[d.key] = d.default_value;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  Config cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key=value: " + line);
    auto trim = [](std::string s) {
      const auto b2 = s.find_first_not_of(" \t");
      if (b2 == std::string::npos) return std::string();
      const auto e2 = s.find_last_not_of(" \t");
      return s.substr(b2, e2 - b2 + 1);
    };
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void Config::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config: " + path);
  for (const auto& [k, v] : values_) out << k << '=' << v << '\n';
}

void Config::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  it->second = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

int Config::get_int(const std::string& key) const {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(get(key), &pos);
    if (pos != get(key).size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "' is not an integer: " +
                      get(key));
  }
}

double Config::get_double(const std::string& key) const {
  try {
    std::size_t pos = 0;
    const double v = std::stod(get(key), &pos);
    if (pos != get(key).size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "' is not a number: " + get(key));
  }
}

std::uint64_t Config::get_u64(const std::string& key) const {
  try {
    std::size_t pos = 0;
    // stoull silently wraps negative input, so reject it here.
    if (get(key).find('-') != std::string::npos)
      throw std::invalid_argument(key);
    const std::uint64_t v = std::stoull(get(key), &pos);
    if (pos != get(key).size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "' is not an unsigned integer: " +
                      get(key));
  }
}

}  // namespace nacanon
