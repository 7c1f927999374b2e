#pragma once

#include <filesystem>
#include <string>

#include "convsim/corpus.hpp"
#include "convsim/engine.hpp"
#include "convsim/mixer.hpp"

namespace convsim {

// Everything `simulate` needs: the loop parameters plus corpus, rendering and
// annotation settings.
struct RunConfig {
  SimulationConfig simulation;
  std::filesystem::path corpus_manifest;
  CorpusOptions corpus;
  AugmentationConfig augmentation;
  double vad_frame_length = 0.01;  // seconds
  bool write_audio = true;
  bool merge_speaker_runs = false;

  void validate() const;
};

// Parses a JSON config (keys documented in docs/formats.md). Relative paths
// resolve against the config file's directory. Unknown keys are rejected.
// Throws ConfigError with the offending field.
RunConfig parse_run_config(const std::string& json_text,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace convsim
