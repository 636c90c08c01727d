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

// Command-line front end. Deliberately links only the C API.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nacanon.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ConfigDeleter {
  void operator()(nac_config* c) const { nac_config_free(c); }
};
struct SystemDeleter {
  void operator()(nac_system* s) const { nac_system_free(s); }
};
using ConfigPtr = std::unique_ptr<nac_config, ConfigDeleter>;
using SystemPtr = std::unique_ptr<nac_system, SystemDeleter>;

int status_to_exit(nac_status s) {
  if (s == NAC_OK) return kExitOk;
  return s == NAC_ERR_CONFIG ? kExitUsage : kExitRuntime;
}

[[noreturn]] void die(nac_status s) {
  std::cerr << "error: " << nac_last_error() << '\n';
  std::exit(status_to_exit(s));
}

ConfigPtr make_config(const std::string& config_path,
                      const std::vector<std::string>& overrides) {
  nac_config* raw = nullptr;
  if (!config_path.empty()) {
    const nac_status s = nac_config_load(config_path.c_str(), &raw);
    if (s != NAC_OK) die(s);
  } else {
    raw = nac_config_create();
    if (!raw) die(NAC_ERR_INTERNAL);
  }
  ConfigPtr cfg(raw);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got: " << kv << '\n';
      std::exit(kExitUsage);
    }
    const nac_status s = nac_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                                        kv.substr(eq + 1).c_str());
    if (s != NAC_OK) die(s);
  }
  return cfg;
}

SystemPtr load_system(const std::string& bundle) {
  nac_system* raw = nullptr;
  const nac_status s = nac_system_load(bundle.c_str(), &raw);
  if (s != NAC_OK) die(s);
  return SystemPtr(raw);
}

std::string config_key_help() {
  std::ostringstream out;
  out << "Config keys (defaults in parentheses):\n";
  const size_t n = nac_config_key_count();
  for (size_t i = 0; i < n; ++i) {
    const char *key = nullptr, *def = nullptr, *doc = nullptr;
    nac_config_key_info(i, &key, &def, &doc);
    out << "  " << key << " (" << def << "): " << doc << '\n';
  }
  return out.str();
}

struct ManifestRow {
  std::string utt_id, speaker_id, wav_path;
};

void warn_if_attacker_replays_defender(const nac_config* cfg) {
  char attacker[32] = {0}, master[32] = {0};
  nac_config_get(cfg, "attacker_seed", attacker, sizeof(attacker));
  nac_config_get(cfg, "master_seed", master, sizeof(master));
  if (std::string(attacker) == std::string(master))
    std::cerr << "warning: attacker_seed equals master_seed; the attacker "
                 "replays the defender's prompt choices exactly, making the "
                 "attack unrealistically strong\n";
}

std::vector<ManifestRow> read_manifest_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open manifest: " << path << '\n';
    std::exit(kExitUsage);
  }
  std::vector<ManifestRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ManifestRow r;
    std::string label_path;
    if (!std::getline(ls, r.utt_id, '\t') ||
        !std::getline(ls, r.speaker_id, '\t') ||
        !std::getline(ls, r.wav_path, '\t')) {
      std::cerr << "error: malformed manifest line: " << line << '\n';
      std::exit(kExitRuntime);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker anonymization with codec-token language models"};
  app.require_subcommand(1);
  app.footer(config_key_help());
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file (key=value lines)")
      ->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "override a config key (key=value)");

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic corpus");
  std::string gen_out;
  bool gen_force = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--force", gen_force, "allow a non-empty output directory");

  // train
  auto* train = app.add_subcommand("train", "train the anonymization system");
  std::string train_manifest, train_out;
  train->add_option("--manifest", train_manifest, "corpus manifest")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "bundle output directory")->required();

  // anonymize
  auto* anonc = app.add_subcommand("anonymize", "anonymize WAV file(s)");
  std::string an_bundle, an_in, an_manifest, an_out, an_level = "speaker";
  std::string an_speaker = "speaker", an_utt;
  std::uint64_t an_seed = 1234;
  anonc->add_option("--bundle", an_bundle, "trained system bundle directory")
      ->required();
  anonc->add_option("--in", an_in, "input WAV")->check(CLI::ExistingFile);
  anonc->add_option("--manifest", an_manifest, "anonymize every manifest WAV")
      ->check(CLI::ExistingFile);
  anonc->add_option("--out", an_out,
                    "output WAV (with --in) or directory (with --manifest)")
      ->required();
  anonc->add_option("--level", an_level, "speaker or utterance")
      ->check(CLI::IsMember({"speaker", "utterance"}));
  anonc->add_option("--seed", an_seed, "master seed for prompt selection");
  anonc->add_option("--speaker-id", an_speaker, "speaker id (with --in)");
  anonc->add_option("--utt-id", an_utt,
                    "utterance id (with --in; default: input stem)");

  // attack
  auto* attack = app.add_subcommand(
      "attack", "run the semi-informed attack and report its EER");
  std::string at_bundle, at_manifest, at_scores;
  bool at_original = false;
  attack->add_option("--bundle", at_bundle, "trained system bundle")
      ->required();
  attack->add_option("--manifest", at_manifest, "corpus manifest")
      ->required()
      ->check(CLI::ExistingFile);
  attack->add_option("--scores", at_scores, "trial score output file")
      ->required();
  attack->add_flag("--original", at_original,
                   "attack the unprotected original data instead");

  // evaluate
  auto* evalc = app.add_subcommand("evaluate", "full metric report");
  std::string ev_bundle, ev_manifest, ev_out;
  evalc->add_option("--bundle", ev_bundle, "trained system bundle")
      ->required();
  evalc->add_option("--manifest", ev_manifest, "corpus manifest")
      ->required()
      ->check(CLI::ExistingFile);
  evalc->add_option("--out", ev_out, "report output directory")->required();

  // Let --config / --set appear after the subcommand too.
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const ConfigPtr cfg = make_config(config_path, overrides);

  if (gen->parsed()) {
    char manifest[4096];
    const nac_status s = nac_generate_corpus(cfg.get(), gen_out.c_str(),
                                             gen_force ? 1 : 0, manifest,
                                             sizeof(manifest));
    if (s != NAC_OK) die(s);
    std::cout << manifest << '\n';
    return kExitOk;
  }

  if (train->parsed()) {
    char summary[4096];
    const nac_status s = nac_train(cfg.get(), train_manifest.c_str(),
                                   train_out.c_str(), summary,
                                   sizeof(summary));
    if (s != NAC_OK) die(s);
    std::cout << summary;
    return kExitOk;
  }

  if (anonc->parsed()) {
    if (an_in.empty() == an_manifest.empty()) {
      std::cerr << "error: give exactly one of --in and --manifest\n";
      return kExitUsage;
    }
    const SystemPtr system = load_system(an_bundle);
    const int level =
        an_level == "speaker" ? NAC_LEVEL_SPEAKER : NAC_LEVEL_UTTERANCE;
    if (!an_in.empty()) {
      const std::string utt_id =
          an_utt.empty() ? fs::path(an_in).stem().string() : an_utt;
      size_t prompt = 0;
      const nac_status s = nac_anonymize_file(
          system.get(), an_in.c_str(), an_out.c_str(), level, an_seed,
          an_speaker.c_str(), utt_id.c_str(), &prompt);
      if (s != NAC_OK) die(s);
      std::cerr << utt_id << " speaker " << an_speaker << " -> prompt "
                << prompt << '\n';
      return kExitOk;
    }
    fs::create_directories(an_out);
    for (const auto& row : read_manifest_rows(an_manifest)) {
      const std::string out_wav =
          (fs::path(an_out) / (row.utt_id + ".wav")).string();
      size_t prompt = 0;
      const nac_status s = nac_anonymize_file(
          system.get(), row.wav_path.c_str(), out_wav.c_str(), level, an_seed,
          row.speaker_id.c_str(), row.utt_id.c_str(), &prompt);
      if (s != NAC_OK) die(s);
      std::cerr << row.utt_id << " speaker " << row.speaker_id
                << " -> prompt " << prompt << '\n';
    }
    return kExitOk;
  }

  if (attack->parsed()) {
    warn_if_attacker_replays_defender(cfg.get());
    const SystemPtr system = load_system(at_bundle);
    double eer = 0.0;
    const nac_status s =
        nac_attack(cfg.get(), system.get(), at_manifest.c_str(),
                   at_original ? 0 : 1, at_scores.c_str(), &eer);
    if (s != NAC_OK) die(s);
    std::cout << "eer\t" << eer << '\n';
    return kExitOk;
  }

  if (evalc->parsed()) {
    warn_if_attacker_replays_defender(cfg.get());
    const SystemPtr system = load_system(ev_bundle);
    const nac_status s = nac_evaluate(cfg.get(), system.get(),
                                      ev_manifest.c_str(), ev_out.c_str());
    if (s != NAC_OK) die(s);
    std::ifstream report(fs::path(ev_out) / "report.txt");
    std::cout << report.rdbuf();
    return kExitOk;
  }

  return kExitUsage;
}
