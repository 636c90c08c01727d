/* Copyright 2026 nacanon authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *  http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the speaker anonymization library. All functions return
 * a nac_status; on failure nac_last_error() holds a message for the
 * calling thread. Handles are opaque and freed with the matching _free.
 */

#ifndef NACANON_H
#define NACANON_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nac_status {
  NAC_OK = 0,
  NAC_ERR_IO = 1,        /* file missing/unreadable/unwritable */
  NAC_ERR_FORMAT = 2,    /* malformed file contents */
  NAC_ERR_CONFIG = 3,    /* bad config key/value or bad arguments */
  NAC_ERR_DATA = 4,      /* valid format, unusable data */
  NAC_ERR_DIVERGED = 5,  /* training loss became non-finite */
  NAC_ERR_INTERNAL = 6
} nac_status;

typedef struct nac_config nac_config;  /* flat key=value configuration */
typedef struct nac_system nac_system;  /* trained anonymization system */

/* Message for the most recent failure on this thread; never NULL. */
const char* nac_last_error(void);

/* -------- configuration -------- */

nac_config* nac_config_create(void); /* all defaults; NULL only on OOM */
nac_status nac_config_load(const char* path, nac_config** out);
nac_status nac_config_save(const nac_config* cfg, const char* path);
nac_status nac_config_set(nac_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL terminated, truncating at buflen). */
nac_status nac_config_get(const nac_config* cfg, const char* key, char* buf,
                          size_t buflen);
void nac_config_free(nac_config* cfg);

/* Static documentation of every known key, for --help listings. */
size_t nac_config_key_count(void);
nac_status nac_config_key_info(size_t index, const char** key,
                               const char** default_value, const char** doc);

/* -------- pipeline -------- */

/* Writes the synthetic corpus and copies the manifest path into
 * manifest_buf. Refuses a non-empty out_dir unless force != 0. */
nac_status nac_generate_corpus(const nac_config* cfg, const char* out_dir,
                               int force, char* manifest_buf, size_t buflen);

/* Trains all models and writes the system bundle into out_dir. The loss
 * summary (one line per model, human readable) is copied into
 * summary_buf when non-NULL. */
nac_status nac_train(const nac_config* cfg, const char* manifest_path,
                     const char* out_dir, char* summary_buf, size_t buflen);

nac_status nac_system_load(const char* bundle_dir, nac_system** out);
void nac_system_free(nac_system* system);

/* Anonymization policy level. */
#define NAC_LEVEL_SPEAKER 0
#define NAC_LEVEL_UTTERANCE 1

/* Anonymizes one WAV file. speaker_id and utterance_id feed the
 * deterministic pseudo-speaker selection. prompt_index_out (optional)
 * receives the selected pool index. */
nac_status nac_anonymize_file(const nac_system* system, const char* in_wav,
                              const char* out_wav, int level, uint64_t seed,
                              const char* speaker_id,
                              const char* utterance_id,
                              size_t* prompt_index_out);

/* Runs the semi-informed attack on the manifest's evaluation split and
 * writes one score line per trial. With protect != 0 the defender first
 * anonymizes trials at speaker level using the config's master_seed.
 * eer_out (optional) receives the resulting EER. */
nac_status nac_attack(const nac_config* cfg, const nac_system* system,
                      const char* manifest_path, int protect,
                      const char* scores_path, double* eer_out);

/* Full evaluation protocol. Writes report.txt, scores_original.txt and
 * scores_anonymized.txt into out_dir. */
nac_status nac_evaluate(const nac_config* cfg, const nac_system* system,
                        const char* manifest_path, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* NACANON_H */
