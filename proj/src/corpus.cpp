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

#include "nacanon/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nacanon/common.hpp"

namespace nacanon::corpus {

namespace {

// Content-unit alphabet. Units are corpus-independent, like a fixed phone
// set: two formants, a pitch contour shape, and a loudness level.
struct UnitParams {
  double f1_hz, f2_hz;
  double contour_sin, contour_ramp;  // pitch modulation shape
  double level;
};

UnitParams unit_params(int unit_id) {
  Rng rng(stable_hash({"unit", std::to_string(unit_id)}));
  UnitParams u;
  // Formants sit on a widely spaced grid (3 F1 x 4 F2 lattice repeating
  // for ids >= 12) so no two units are spectrally close.
  u.f1_hz = 350.0 + 300.0 * (unit_id % 3);
  u.f2_hz = 1300.0 + 500.0 * ((unit_id / 3) % 4);
  u.contour_sin = rng.uniform(-1.0, 1.0);
  u.contour_ramp = rng.uniform(-1.0, 1.0);
  u.level = rng.uniform(0.5, 1.0);
  return u;
}

// Two-pole resonator applied in place.
void resonate(std::vector<double>& x, double freq_hz, double r, int sr) {
  const double w = 2.0 * M_PI * freq_hz / sr;
  const double a1 = 2.0 * r * std::cos(w);
  const double a2 = -r * r;
  double y1 = 0.0, y2 = 0.0;
  const double norm = 1.0 - r;  // rough gain compensation
  for (auto& v : x) {
    const double y = norm * v + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

}  // namespace

SpeakerParams generate_speaker(std::uint64_t corpus_seed, int index) {
  Rng rng(stable_hash(corpus_seed, "speaker", std::to_string(index)));
  SpeakerParams p;
  char id[16];
  std::snprintf(id, sizeof(id), "spk%03d", index);
  p.speaker_id = id;
  // Capped below 260 Hz so even the lowest unit formant keeps a few
  // harmonics under it for every speaker.
  p.base_f0_hz = rng.uniform(80.0, 260.0);
  p.f0_range = rng.uniform(0.02, 0.20);
  // Tilt above ~0.8 starves the low band enough to destabilize frame
  // analysis on high-pitched voices, so the draw is capped below that.
  p.tilt = rng.uniform(0.0, 0.75);
  p.resonance_hz = rng.uniform(3000.0, 5600.0);
  p.resonance2_hz = rng.uniform(600.0, 2600.0);
  p.gain = rng.uniform(0.6, 1.0);
  return p;
}

ContentScript generate_script(std::uint64_t corpus_seed, int speaker_index,
                              int utterance_index, const CorpusShape& shape) {
  Rng rng(stable_hash(corpus_seed, "script",
                      std::to_string(speaker_index) + "." +
                          std::to_string(utterance_index)));
  // Draw units without replacement when the alphabet allows it. Balanced
  // content keeps the per-utterance feature mean a speaker property, so
  // utterances differ in unit order, not unit composition.
  std::vector<int> ids(shape.content_units);
  for (int i = 0; i < shape.content_units; ++i) ids[i] = i;
  for (int i = shape.content_units - 1; i > 0; --i)
    std::swap(ids[i], ids[rng.uniform_int(i + 1)]);

  ContentScript script;
  for (int i = 0; i < shape.units_per_utterance; ++i) {
    ContentUnit u;
    u.unit_id = i < shape.content_units
                    ? ids[i]
                    : static_cast<int>(rng.uniform_int(shape.content_units));
    u.duration_frames =
        shape.min_unit_frames +
        static_cast<int>(rng.uniform_int(
            shape.max_unit_frames - shape.min_unit_frames + 1));
    script.push_back(u);
  }
  return script;
}

std::pair<dsp::Waveform, std::vector<int>> synthesize_utterance(
    const SpeakerParams& speaker, const ContentScript& script,
    std::uint64_t seed, const CorpusShape& shape) {
  if (script.empty()) throw DataError("synthesize_utterance: empty script");
  const int sr = shape.sample_rate_hz;
  const int hop = shape.hop;
  std::size_t total_frames = 0;
  for (const auto& u : script) {
    if (u.duration_frames < 3)
      throw DataError("synthesize_utterance: unit shorter than 3 frames");
    total_frames += u.duration_frames;
  }
  const std::size_t n = (total_frames - 1) * hop + shape.frame_len;

  std::vector<int> labels(total_frames);
  std::vector<double> f0_per_frame(total_frames);
  std::vector<double> level_per_frame(total_frames);
  std::size_t f = 0;
  for (const auto& u : script) {
    const UnitParams up = unit_params(u.unit_id);
    for (int i = 0; i < u.duration_frames; ++i, ++f) {
      labels[f] = u.unit_id;
      const double pos = (i + 0.5) / u.duration_frames;  // (0,1)
      const double contour = up.contour_sin * std::sin(M_PI * pos) +
                             up.contour_ramp * (pos - 0.5);
      f0_per_frame[f] = speaker.base_f0_hz *
                        (1.0 + speaker.f0_range * contour);
      level_per_frame[f] = up.level;
    }
  }

  Rng rng(seed);
  std::vector<double> x(n);
  double phase = 0.0;
  std::size_t unit_start = 0;
  std::size_t unit_idx = 0;
  std::size_t unit_end = script[0].duration_frames;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t frame = std::min(i / hop, total_frames - 1);
    while (frame >= unit_end && unit_idx + 1 < script.size()) {
      ++unit_idx;
      unit_start = unit_end;
      unit_end += script[unit_idx].duration_frames;
    }
    const double f0 = f0_per_frame[frame];
    phase += 2.0 * M_PI * f0 / sr;
    if (phase > 2.0 * M_PI) phase -= 2.0 * M_PI;
    const int harmonics = static_cast<int>(std::floor(0.5 * sr / f0));
    double v = 0.0;
    for (int k = 1; k <= harmonics; ++k) v += std::sin(k * phase) / k;
    x[i] = level_per_frame[frame] * v + 0.01 * rng.normal();
  }

  // Unit formants change at unit boundaries; the resonators are run per
  // unit span to keep each unit's spectrum well defined.
  std::vector<double> shaped(n, 0.0);
  std::size_t start_frame = 0;
  for (const auto& u : script) {
    const UnitParams up = unit_params(u.unit_id);
    const std::size_t s0 = start_frame * hop;
    const std::size_t s1 = std::min(
        n, (start_frame + u.duration_frames) * static_cast<std::size_t>(hop));
    std::vector<double> seg(x.begin() + s0,
                            x.begin() + (u.duration_frames + start_frame ==
                                                 total_frames
                                             ? n
                                             : s1));
    resonate(seg, up.f1_hz, 0.96, sr);
    resonate(seg, up.f2_hz, 0.94, sr);
    for (std::size_t i = 0; i < seg.size(); ++i) shaped[s0 + i] = seg[i];
    start_frame += u.duration_frames;
  }

  // Speaker coloration: one resonance above the unit formant band, one
  // mild in-band resonance and spectral tilt. All three multiply the
  // spectrum, i.e. add a speaker-constant offset in the cepstral domain.
  resonate(shaped, speaker.resonance_hz, 0.95, sr);
  resonate(shaped, speaker.resonance2_hz, 0.80, sr);
  std::vector<double> out(n);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = shaped[i] - speaker.tilt * prev;
    prev = shaped[i];
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  const double gain = peak > 0.0 ? 0.5 * speaker.gain / peak : 0.0;
  for (auto& v : out) v *= gain;

  dsp::Waveform w;
  w.sample_rate_hz = sr;
  w.samples = std::move(out);
  return {std::move(w), std::move(labels)};
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    ManifestEntry e;
    if (!std::getline(ss, e.utt_id, '\t') ||
        !std::getline(ss, e.speaker_id, '\t') ||
        !std::getline(ss, e.wav_path, '\t') ||
        !std::getline(ss, e.label_path))
      throw FormatError("malformed manifest line: " + line);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::vector<ManifestEntry>& entries,
                    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  for (const auto& e : entries)
    out << e.utt_id << '\t' << e.speaker_id << '\t' << e.wav_path << '\t'
        << e.label_path << '\n';
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open label file: " + path);
  std::vector<int> labels;
  int v;
  while (in >> v) labels.push_back(v);
  return labels;
}

void write_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write label file: " + path);
  for (int v : labels) out << v << '\n';
}

std::vector<int> labels_to_units(const std::vector<int>& labels) {
  std::vector<int> units;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (i == 0 || labels[i] != labels[i - 1]) units.push_back(labels[i]);
  return units;
}

}  // namespace nacanon::corpus
