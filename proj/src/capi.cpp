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

#include "nacanon.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <sstream>
#include <string>

#include "nacanon/anon.hpp"
#include "nacanon/common.hpp"
#include "nacanon/config.hpp"
#include "nacanon/eval.hpp"
#include "nacanon/pipeline.hpp"

namespace fs = std::filesystem;
using namespace nacanon;

struct nac_config {
  Config cfg;
};
struct nac_system {
  anon::AnonSystem system;
};

namespace {

thread_local std::string g_last_error = "ok";

void copy_out(const std::string& s, char* buf, size_t buflen) {
  if (!buf || buflen == 0) return;
  const size_t n = std::min(s.size(), buflen - 1);
  std::memcpy(buf, s.data(), n);
  buf[n] = '\0';
}

nac_status fail(nac_status code, const std::string& what) {
  g_last_error = what;
  return code;
}

// Runs fn, translating exceptions to status codes.
template <typename Fn>
nac_status guarded(Fn&& fn) {
  try {
    fn();
    return NAC_OK;
  } catch (const IoError& e) {
    return fail(NAC_ERR_IO, e.what());
  } catch (const FormatError& e) {
    return fail(NAC_ERR_FORMAT, e.what());
  } catch (const ConfigError& e) {
    return fail(NAC_ERR_CONFIG, e.what());
  } catch (const DivergenceError& e) {
    return fail(NAC_ERR_DIVERGED, std::string(e.what()) + " (step " +
                                      std::to_string(e.step) + ")");
  } catch (const DataError& e) {
    return fail(NAC_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(NAC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(NAC_ERR_INTERNAL, "unknown error");
  }
}

nac_status require(bool ok, const char* what) {
  return ok ? NAC_OK : fail(NAC_ERR_CONFIG, what);
}

}  // namespace

extern "C" {

const char* nac_last_error(void) { return g_last_error.c_str(); }

nac_config* nac_config_create(void) { return new (std::nothrow) nac_config; }

nac_status nac_config_load(const char* path, nac_config** out) {
  if (require(path && out, "null argument") != NAC_OK) return NAC_ERR_CONFIG;
  *out = nullptr;
  return guarded([&] { *out = new nac_config{Config::load(path)}; });
}

nac_status nac_config_save(const nac_config* cfg, const char* path) {
  if (require(cfg && path, "null argument") != NAC_OK) return NAC_ERR_CONFIG;
  return guarded([&] { cfg->cfg.save(path); });
}

nac_status nac_config_set(nac_config* cfg, const char* key,
                          const char* value) {
  if (require(cfg && key && value, "null argument") != NAC_OK)
    return NAC_ERR_CONFIG;
  return guarded([&] { cfg->cfg.set(key, value); });
}

nac_status nac_config_get(const nac_config* cfg, const char* key, char* buf,
                          size_t buflen) {
  if (require(cfg && key, "null argument") != NAC_OK) return NAC_ERR_CONFIG;
  return guarded([&] { copy_out(cfg->cfg.get(key), buf, buflen); });
}

void nac_config_free(nac_config* cfg) { delete cfg; }

size_t nac_config_key_count(void) { return Config::key_docs().size(); }

nac_status nac_config_key_info(size_t index, const char** key,
                               const char** default_value, const char** doc) {
  const auto& docs = Config::key_docs();
  if (require(index < docs.size(), "config key index out of range") != NAC_OK)
    return NAC_ERR_CONFIG;
  if (key) *key = docs[index].key;
  if (default_value) *default_value = docs[index].default_value;
  if (doc) *doc = docs[index].doc;
  return NAC_OK;
}

nac_status nac_generate_corpus(const nac_config* cfg, const char* out_dir,
                               int force, char* manifest_buf, size_t buflen) {
  if (require(cfg && out_dir, "null argument") != NAC_OK)
    return NAC_ERR_CONFIG;
  return guarded([&] {
    const std::string manifest =
        pipeline::generate_corpus(cfg->cfg, out_dir, force != 0);
    copy_out(manifest, manifest_buf, buflen);
  });
}

nac_status nac_train(const nac_config* cfg, const char* manifest_path,
                     const char* out_dir, char* summary_buf, size_t buflen) {
  if (require(cfg && manifest_path && out_dir, "null argument") != NAC_OK)
    return NAC_ERR_CONFIG;
  return guarded([&] {
    const pipeline::TrainSummary s =
        pipeline::train(cfg->cfg, manifest_path, out_dir);
    std::ostringstream out;
    out << "coarse loss " << s.coarse_initial_loss << " -> "
        << s.coarse_final_loss << '\n';
    for (std::size_t i = 0; i < s.fine_final_losses.size(); ++i)
      out << "fine level " << i << " final loss " << s.fine_final_losses[i]
          << '\n';
    copy_out(out.str(), summary_buf, buflen);
  });
}

nac_status nac_system_load(const char* bundle_dir, nac_system** out) {
  if (require(bundle_dir && out, "null argument") != NAC_OK)
    return NAC_ERR_CONFIG;
  *out = nullptr;
  return guarded(
      [&] { *out = new nac_system{pipeline::load_bundle(bundle_dir)}; });
}

void nac_system_free(nac_system* system) { delete system; }

nac_status nac_anonymize_file(const nac_system* system, const char* in_wav,
                              const char* out_wav, int level, uint64_t seed,
                              const char* speaker_id,
                              const char* utterance_id,
                              size_t* prompt_index_out) {
  if (require(system && in_wav && out_wav && speaker_id && utterance_id,
              "null argument") != NAC_OK)
    return NAC_ERR_CONFIG;
  if (require(level == NAC_LEVEL_SPEAKER || level == NAC_LEVEL_UTTERANCE,
              "level must be 0 (speaker) or 1 (utterance)") != NAC_OK)
    return NAC_ERR_CONFIG;
  return guarded([&] {
    const anon::AnonPolicy policy{level == NAC_LEVEL_SPEAKER
                                      ? anon::Level::kSpeaker
                                      : anon::Level::kUtterance,
                                  seed};
    if (prompt_index_out)
      *prompt_index_out = anon::select_pseudo_speaker(
          system->system.pool, policy, speaker_id, utterance_id);
    const dsp::Waveform w = dsp::read_wav(in_wav);
    dsp::write_wav(anon::anonymize(system->system, policy, w, speaker_id,
                                   utterance_id),
                   out_wav);
  });
}

nac_status nac_attack(const nac_config* cfg, const nac_system* system,
                      const char* manifest_path, int protect,
                      const char* scores_path, double* eer_out) {
  if (require(cfg && system && manifest_path && scores_path,
              "null argument") != NAC_OK)
    return NAC_ERR_CONFIG;
  return guarded([&] {
    const pipeline::EvalSplit split =
        pipeline::split_corpus(cfg->cfg, manifest_path);
    std::vector<eval::LabeledUtterance> trials = split.trial;
    if (protect) {
      const anon::AnonPolicy defender{anon::Level::kSpeaker,
                                      cfg->cfg.get_u64("master_seed")};
      for (auto& u : trials)
        u.wav = anon::anonymize(system->system, defender, u.wav, u.speaker_id,
                                u.utt_id);
    }
    const std::vector<eval::Trial> result = eval::semi_informed_attack(
        system->system, split.enroll, trials, split.external,
        cfg->cfg.get_u64("attacker_seed"), protect != 0);
    eval::write_scores(result, scores_path);
    if (eer_out)
      *eer_out = eval::compute_eer(eval::trial_scores(result, true),
                                   eval::trial_scores(result, false));
  });
}

nac_status nac_evaluate(const nac_config* cfg, const nac_system* system,
                        const char* manifest_path, const char* out_dir) {
  if (require(cfg && system && manifest_path && out_dir, "null argument") !=
      NAC_OK)
    return NAC_ERR_CONFIG;
  return guarded([&] {
    fs::create_directories(out_dir);
    const pipeline::EvalArtifacts art =
        pipeline::evaluate(cfg->cfg, system->system, manifest_path);
    eval::write_report(art.report,
                       (fs::path(out_dir) / "report.txt").string());
    eval::write_scores(art.original_trials,
                       (fs::path(out_dir) / "scores_original.txt").string());
    eval::write_scores(
        art.anonymized_trials,
        (fs::path(out_dir) / "scores_anonymized.txt").string());
  });
}

}  // extern "C"
