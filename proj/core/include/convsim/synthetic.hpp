#pragma once

#include <cstdint>
#include <filesystem>

namespace convsim {

// Procedurally generated tone-burst corpus for tests, benchmarks and demos.
// Every word boundary falls on a whole millisecond.
struct SyntheticCorpusSpec {
  int num_speakers = 10;
  int utterances_per_speaker = 20;
  int words_per_utterance = 20;
  int sample_rate = 16000;
  int min_word_ms = 250;
  int max_word_ms = 750;
  int min_pause_ms = 40;
  int max_pause_ms = 200;
  double amplitude = 6000.0;
  std::uint64_t seed = 1;
};

// Writes `<dir>/audio/*.wav` and `<dir>/manifest.jsonl`; returns the manifest.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                             const SyntheticCorpusSpec& spec = {});

}  // namespace convsim
