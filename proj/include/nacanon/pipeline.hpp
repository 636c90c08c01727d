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

#ifndef NACANON_PIPELINE_HPP
#define NACANON_PIPELINE_HPP

#include <string>
#include <vector>

#include "nacanon/anon.hpp"
#include "nacanon/config.hpp"
#include "nacanon/corpus.hpp"
#include "nacanon/eval.hpp"

namespace nacanon::pipeline {

corpus::CorpusShape corpus_shape(const Config& cfg);

// Writes WAVs, label files and the manifest; returns the manifest path.
// Refuses a non-empty existing directory unless force is set.
std::string generate_corpus(const Config& cfg, const std::string& out_dir,
                            bool force);

struct TrainSummary {
  double coarse_initial_loss = 0.0;
  double coarse_final_loss = 0.0;
  std::vector<double> fine_final_losses;
};

// Trains all four models plus the prompt pool and writes the system
// bundle (model containers, pool, config.txt) into out_dir.
TrainSummary train(const Config& cfg, const std::string& manifest_path,
                   const std::string& out_dir);

// Loads a bundle and applies the bundled config's sampler settings.
anon::AnonSystem load_bundle(const std::string& dir);

// Corpus split used by the evaluation protocol: the last `pool_speakers`
// speakers are the external/pseudo-speaker set, the rest are evaluated
// (first `enroll_utts` utterances enroll, the rest trial).
struct EvalSplit {
  std::vector<eval::LabeledUtterance> enroll;
  std::vector<eval::LabeledUtterance> trial;
  std::vector<eval::LabeledUtterance> external;
  std::vector<std::vector<int>> trial_labels;     // per trial utterance
  std::vector<std::vector<int>> external_labels;  // per external utterance
};

EvalSplit split_corpus(const Config& cfg, const std::string& manifest_path);

struct EvalArtifacts {
  eval::MetricsReport report;
  std::vector<eval::Trial> original_trials;
  std::vector<eval::Trial> anonymized_trials;
};

EvalArtifacts evaluate(const Config& cfg, const anon::AnonSystem& system,
                       const std::string& manifest_path);

}  // namespace nacanon::pipeline

#endif  // NACANON_PIPELINE_HPP
