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

#ifndef NACANON_EVAL_HPP
#define NACANON_EVAL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nacanon/anon.hpp"
#include "nacanon/dsp.hpp"
#include "nacanon/matrix.hpp"

namespace nacanon::eval {

// Utterance-level speaker embedding: mean and standard deviation of the
// acoustic frame vectors, concatenated (D_e = 2 * D).
std::vector<double> speaker_embedding(const dsp::Waveform& w,
                                      const codec::RvqStack& rvq);

struct Trial {
  std::string enroll_id;
  std::string test_id;
  bool is_target = false;
  double score = 0.0;
};

// Threshold sweep over all distinct scores; miss(t) = fraction of targets
// below t, fa(t) = fraction of non-targets at or above t. EER is
// (miss + fa) / 2 at the threshold minimizing |miss - fa| (ties -> lower
// threshold).
double compute_eer(const std::vector<double>& target_scores,
                   const std::vector<double>& nontarget_scores);

// Pearson correlation of the two F0 curves over jointly voiced frames;
// nullopt (UNDEFINED) when fewer than 10 such frames exist.
std::optional<double> pitch_correlation(const dsp::Waveform& original,
                                        const dsp::Waveform& anonymized,
                                        const dsp::FrameSpec& spec);

// G_VD = 10 log10(DD(anon) / DD(orig)), DD = |mean(diag) - mean(offdiag)|
// floored at 1e-6. Matrices are K x K mean cosine similarities.
double voice_distinctiveness_gain(const Matrix& orig_sim,
                                  const Matrix& anon_sim);

// sets[k] = embeddings of speaker k's utterances. M[a][b] = mean cosine
// over pairs from sets a and b (self-pairs excluded on the diagonal).
Matrix similarity_matrix(const std::vector<std::vector<std::vector<double>>>& sets);

struct LabeledUtterance {
  std::string utt_id;
  std::string speaker_id;
  dsp::Waveform wav;
};

// Semi-informed attack. The attacker re-anonymizes with its own master
// seed: external data at utterance level (to fit an embedding whitening
// transform), enrollment at speaker level. Trial utterances are scored
// as given, i.e. already anonymized by the defender (or original for the
// unprotected baseline). With protect=false no anonymization happens
// anywhere -- the original-data attack.
std::vector<Trial> semi_informed_attack(
    const anon::AnonSystem& system,
    const std::vector<LabeledUtterance>& enroll,
    const std::vector<LabeledUtterance>& trial,
    const std::vector<LabeledUtterance>& external,
    std::uint64_t attacker_seed, bool protect = true);

std::vector<double> trial_scores(const std::vector<Trial>& trials,
                                 bool targets);

// Per-content-unit centroid classifier over acoustic frame vectors.
Matrix train_content_classifier(
    const std::vector<dsp::Waveform>& wavs,
    const std::vector<std::vector<int>>& frame_labels,
    const codec::RvqStack& rvq, int n_units);

// Majority-smoothed frame decoding collapsed to a unit sequence.
std::vector<int> decode_content_units(const dsp::Waveform& w,
                                      const Matrix& unit_centroids,
                                      const codec::RvqStack& rvq);

std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b);

// Total edit distance over all trials divided by total reference length,
// capped at 1.
double content_error_rate(const std::vector<std::vector<int>>& references,
                          const std::vector<std::vector<int>>& hypotheses);

struct MetricsReport {
  double eer = 0.0;
  std::size_t eer_target_trials = 0;
  std::size_t eer_nontarget_trials = 0;
  double original_eer = 0.0;
  double rho_f0 = 0.0;
  std::size_t rho_defined = 0;
  std::size_t rho_undefined = 0;
  double g_vd_db = 0.0;
  std::size_t g_vd_speakers = 0;
  double content_error = 0.0;
  double original_content_error = 0.0;
  std::size_t content_trials = 0;
};

void write_scores(const std::vector<Trial>& trials, const std::string& path);
void write_report(const MetricsReport& report, const std::string& path);

}  // namespace nacanon::eval

#endif  // NACANON_EVAL_HPP
