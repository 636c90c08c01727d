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

#include "nacanon/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "nacanon/common.hpp"
#include "nacanon/kmeans.hpp"

namespace nacanon::eval {

std::vector<double> speaker_embedding(const dsp::Waveform& w,
                                      const codec::RvqStack& rvq) {
  const auto feats =
      codec::acoustic_frame_vectors(w, rvq.frame_spec, rvq.n_cepstra);
  const std::size_t t_len = feats.frames.rows();
  const std::size_t d = feats.frames.cols();
  std::vector<double> emb(2 * d, 0.0);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < d; ++j) emb[j] += feats.frames[t][j];
  for (std::size_t j = 0; j < d; ++j) emb[j] /= static_cast<double>(t_len);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = feats.frames[t][j] - emb[j];
      emb[d + j] += dv * dv;
    }
  for (std::size_t j = 0; j < d; ++j)
    emb[d + j] = std::sqrt(emb[d + j] / static_cast<double>(t_len));
  return emb;
}

double compute_eer(const std::vector<double>& target_scores,
                   const std::vector<double>& nontarget_scores) {
  if (target_scores.empty() || nontarget_scores.empty())
    throw DataError("compute_eer: empty score list");
  std::set<double> thresholds(target_scores.begin(), target_scores.end());
  thresholds.insert(nontarget_scores.begin(), nontarget_scores.end());
  double best_gap = std::numeric_limits<double>::infinity();
  double best_eer = 0.0;
  for (double t : thresholds) {  // ascending: ties keep the lower threshold
    std::size_t misses = 0, fas = 0;
    for (double s : target_scores)
      if (s < t) ++misses;
    for (double s : nontarget_scores)
      if (s >= t) ++fas;
    const double miss = static_cast<double>(misses) / target_scores.size();
    const double fa = static_cast<double>(fas) / nontarget_scores.size();
    const double gap = std::abs(miss - fa);
    if (gap < best_gap) {
      best_gap = gap;
      best_eer = 0.5 * (miss + fa);
    }
  }
  return best_eer;
}

std::optional<double> pitch_correlation(const dsp::Waveform& original,
                                        const dsp::Waveform& anonymized,
                                        const dsp::FrameSpec& spec) {
  std::vector<double> a, b;
  try {
    const auto fa = dsp::estimate_f0(original, spec);
    const auto fb = dsp::estimate_f0(anonymized, spec);
    const std::size_t n = std::min(fa.frames.size(), fb.frames.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (fa.frames[i].voiced && fb.frames[i].voiced) {
        a.push_back(fa.frames[i].f0_hz);
        b.push_back(fb.frames[i].f0_hz);
      }
    }
  } catch (const DataError&) {
    return std::nullopt;  // too short for even one frame
  }
  if (a.size() < 10) return std::nullopt;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  if (va <= 0.0 || vb <= 0.0) return std::nullopt;
  return cov / std::sqrt(va * vb);
}

namespace {

double diagonal_dominance(const Matrix& m) {
  const std::size_t k = m.rows();
  double diag = 0.0, off = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      (i == j ? diag : off) += m[i][j];
  diag /= static_cast<double>(k);
  off /= static_cast<double>(k * (k - 1));
  return std::abs(diag - off);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double den = std::sqrt(na * nb);
  return den > 0.0 ? dot / den : 0.0;
}

}  // namespace

double voice_distinctiveness_gain(const Matrix& orig_sim,
                                  const Matrix& anon_sim) {
  if (orig_sim.rows() < 2 || orig_sim.rows() != orig_sim.cols() ||
      anon_sim.rows() != orig_sim.rows() ||
      anon_sim.cols() != orig_sim.cols())
    throw DataError("voice_distinctiveness_gain: need equal square K>=2");
  const double dd_orig = std::max(diagonal_dominance(orig_sim), 1e-6);
  const double dd_anon = std::max(diagonal_dominance(anon_sim), 1e-6);
  return 10.0 * std::log10(dd_anon / dd_orig);
}

Matrix similarity_matrix(
    const std::vector<std::vector<std::vector<double>>>& sets) {
  const std::size_t k = sets.size();
  Matrix m(k, k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      double total = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < sets[a].size(); ++i) {
        for (std::size_t j = 0; j < sets[b].size(); ++j) {
          if (a == b && i == j) continue;
          total += cosine(sets[a][i], sets[b][j]);
          ++count;
        }
      }
      m[a][b] = count > 0 ? total / static_cast<double>(count) : 0.0;
    }
  }
  return m;
}

namespace {

struct Whitening {
  std::vector<double> mean, scale;

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = (x[i] - mean[i]) * scale[i];
    return y;
  }
};

Whitening fit_whitening(const std::vector<std::vector<double>>& embeddings) {
  const std::size_t d = embeddings.front().size();
  const double n = static_cast<double>(embeddings.size());
  Whitening w;
  w.mean.assign(d, 0.0);
  w.scale.assign(d, 0.0);
  for (const auto& e : embeddings)
    for (std::size_t i = 0; i < d; ++i) w.mean[i] += e[i];
  for (std::size_t i = 0; i < d; ++i) w.mean[i] /= n;
  for (const auto& e : embeddings)
    for (std::size_t i = 0; i < d; ++i) {
      const double dv = e[i] - w.mean[i];
      w.scale[i] += dv * dv;
    }
  for (std::size_t i = 0; i < d; ++i)
    w.scale[i] = 1.0 / std::max(std::sqrt(w.scale[i] / n), 1e-9);
  return w;
}

}  // namespace

std::vector<Trial> semi_informed_attack(
    const anon::AnonSystem& system,
    const std::vector<LabeledUtterance>& enroll,
    const std::vector<LabeledUtterance>& trial,
    const std::vector<LabeledUtterance>& external,
    std::uint64_t attacker_seed, bool protect) {
  if (enroll.empty()) throw DataError("semi_informed_attack: empty enroll set");
  if (trial.empty()) throw DataError("semi_informed_attack: empty trial set");
  if (external.empty())
    throw DataError("semi_informed_attack: empty external set");
  {
    std::set<std::string> speakers;
    for (const auto& u : external) speakers.insert(u.speaker_id);
    if (speakers.size() < 2)
      throw DataError("semi_informed_attack: external set needs >= 2 speakers");
  }
  const codec::RvqStack& rvq = system.rvq;

  // The attacker adapts to anonymized data: external utterances are
  // re-anonymized at utterance level under the attacker's own seed.
  anon::AnonPolicy utt_policy{anon::Level::kUtterance, attacker_seed};
  anon::AnonPolicy spk_policy{anon::Level::kSpeaker, attacker_seed};

  std::vector<std::vector<double>> ext_embeddings;
  for (const auto& u : external) {
    const dsp::Waveform w =
        protect ? anon::anonymize(system, utt_policy, u.wav, u.speaker_id,
                                  u.utt_id)
                : u.wav;
    ext_embeddings.push_back(speaker_embedding(w, rvq));
  }
  const Whitening whitening = fit_whitening(ext_embeddings);

  std::vector<std::vector<double>> enroll_emb;
  for (const auto& u : enroll) {
    const dsp::Waveform w =
        protect ? anon::anonymize(system, spk_policy, u.wav, u.speaker_id,
                                  u.utt_id)
                : u.wav;
    enroll_emb.push_back(whitening.apply(speaker_embedding(w, rvq)));
  }
  std::vector<std::vector<double>> trial_emb;
  for (const auto& u : trial)
    trial_emb.push_back(whitening.apply(speaker_embedding(u.wav, rvq)));

  std::vector<Trial> trials;
  trials.reserve(enroll.size() * trial.size());
  for (std::size_t e = 0; e < enroll.size(); ++e) {
    for (std::size_t t = 0; t < trial.size(); ++t) {
      Trial tr;
      tr.enroll_id = enroll[e].utt_id;
      tr.test_id = trial[t].utt_id;
      tr.is_target = enroll[e].speaker_id == trial[t].speaker_id;
      tr.score = cosine(enroll_emb[e], trial_emb[t]);
      trials.push_back(std::move(tr));
    }
  }
  return trials;
}

std::vector<double> trial_scores(const std::vector<Trial>& trials,
                                 bool targets) {
  std::vector<double> out;
  for (const auto& t : trials)
    if (t.is_target == targets) out.push_back(t.score);
  return out;
}

namespace {

// Frame vectors with the per-utterance mean removed. Speaker coloration is
// (near-)constant over an utterance, so mean subtraction leaves the
// content-unit contrasts and drops the speaker offset.
Matrix content_frames(const dsp::Waveform& w, const codec::RvqStack& rvq) {
  const auto feats =
      codec::acoustic_frame_vectors(w, rvq.frame_spec, rvq.n_cepstra);
  Matrix out = feats.frames;
  const std::size_t rows = out.rows(), cols = out.cols();
  if (rows == 0) return out;
  std::vector<double> mean(cols, 0.0);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t j = 0; j < cols; ++j) mean[j] += out[t][j];
  for (std::size_t j = 0; j < cols; ++j)
    mean[j] /= static_cast<double>(rows);
  for (std::size_t t = 0; t < rows; ++t)
    for (std::size_t j = 0; j < cols; ++j) out[t][j] -= mean[j];
  return out;
}

}  // namespace

Matrix train_content_classifier(
    const std::vector<dsp::Waveform>& wavs,
    const std::vector<std::vector<int>>& frame_labels,
    const codec::RvqStack& rvq, int n_units) {
  if (wavs.empty() || wavs.size() != frame_labels.size())
    throw DataError("train_content_classifier: missing ground truth");
  const std::size_t d = 2 + rvq.n_cepstra;
  Matrix centroids(n_units, d);
  std::vector<std::size_t> counts(n_units, 0);
  std::vector<double> global_mean(d, 0.0);
  std::size_t global_count = 0;
  for (std::size_t u = 0; u < wavs.size(); ++u) {
    const Matrix frames = content_frames(wavs[u], rvq);
    const std::size_t n =
        std::min<std::size_t>(frames.rows(), frame_labels[u].size());
    for (std::size_t t = 0; t < n; ++t) {
      const int label = frame_labels[u][t];
      if (label < 0 || label >= n_units)
        throw DataError("train_content_classifier: label out of range");
      for (std::size_t j = 0; j < d; ++j) {
        centroids[label][j] += frames[t][j];
        global_mean[j] += frames[t][j];
      }
      ++counts[label];
      ++global_count;
    }
  }
  if (global_count == 0)
    throw DataError("train_content_classifier: no labeled frames");
  for (std::size_t j = 0; j < d; ++j)
    global_mean[j] /= static_cast<double>(global_count);
  for (int c = 0; c < n_units; ++c) {
    // Units absent from the training data fall back to the global mean;
    // they are never the nearest centroid for well-separated units.
    if (counts[c] == 0) {
      for (std::size_t j = 0; j < d; ++j) centroids[c][j] = global_mean[j];
      continue;
    }
    for (std::size_t j = 0; j < d; ++j)
      centroids[c][j] /= static_cast<double>(counts[c]);
  }
  return centroids;
}

std::vector<int> decode_content_units(const dsp::Waveform& w,
                                      const Matrix& unit_centroids,
                                      const codec::RvqStack& rvq) {
  const Matrix frames = content_frames(w, rvq);
  const std::size_t t_len = frames.rows();
  std::vector<int> raw(t_len);
  for (std::size_t t = 0; t < t_len; ++t)
    raw[t] = static_cast<int>(nearest_centroid(frames.row(t), unit_centroids));

  // Majority smoothing over a small window, then run-length collapse
  // dropping runs shorter than the minimum unit duration.
  constexpr int kHalfWindow = 2;
  constexpr std::size_t kMinRun = 4;
  std::vector<int> smoothed(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    std::map<int, int> votes;
    const std::size_t lo = t >= kHalfWindow ? t - kHalfWindow : 0;
    const std::size_t hi = std::min(t_len - 1, t + kHalfWindow);
    for (std::size_t i = lo; i <= hi; ++i) ++votes[raw[i]];
    int best = raw[t], best_votes = 0;
    for (const auto& [unit, v] : votes) {
      if (v > best_votes) {
        best_votes = v;
        best = unit;
      }
    }
    smoothed[t] = best;
  }
  std::vector<int> units;
  std::size_t run = 0;
  for (std::size_t t = 0; t <= t_len; ++t) {
    if (t < t_len && run > 0 && smoothed[t] == smoothed[t - 1]) {
      ++run;
      continue;
    }
    if (run >= kMinRun) {
      if (units.empty() || units.back() != smoothed[t - 1])
        units.push_back(smoothed[t - 1]);
    }
    run = 1;
  }
  return units;
}

std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double content_error_rate(const std::vector<std::vector<int>>& references,
                          const std::vector<std::vector<int>>& hypotheses) {
  if (references.empty() || references.size() != hypotheses.size())
    throw DataError("content_error_rate: reference/hypothesis mismatch");
  std::size_t edits = 0, total = 0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    edits += levenshtein(references[i], hypotheses[i]);
    total += references[i].size();
  }
  if (total == 0) throw DataError("content_error_rate: empty references");
  return std::min(1.0, static_cast<double>(edits) / static_cast<double>(total));
}

void write_scores(const std::vector<Trial>& trials, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write score file: " + path);
  for (const auto& t : trials)
    out << t.enroll_id << '\t' << t.test_id << '\t' << t.score << '\t'
        << (t.is_target ? "target" : "nontarget") << '\n';
}

void write_report(const MetricsReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + path);
  out << "eer\t" << r.eer << "\n"
      << "eer_target_trials\t" << r.eer_target_trials << "\n"
      << "eer_nontarget_trials\t" << r.eer_nontarget_trials << "\n"
      << "original_eer\t" << r.original_eer << "\n"
      << "rho_f0\t" << r.rho_f0 << "\n"
      << "rho_f0_defined\t" << r.rho_defined << "\n"
      << "rho_f0_undefined\t" << r.rho_undefined << "\n"
      << "g_vd_db\t" << r.g_vd_db << "\n"
      << "g_vd_speakers\t" << r.g_vd_speakers << "\n"
      << "content_error_rate\t" << r.content_error << "\n"
      << "original_content_error_rate\t" << r.original_content_error << "\n"
      << "content_trials\t" << r.content_trials << "\n";
}

}  // namespace nacanon::eval
