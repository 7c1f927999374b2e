#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "convsim/rng.hpp"

namespace convsim {

// One aligned word inside a source recording. Boundaries are snapped to the
// sample grid at load time, so `duration * sample_rate` is an integer.
struct SourceWord {
  std::string text;
  double onset = 0.0;     // seconds within the source audio
  double duration = 0.0;  // seconds
  std::size_t audio_ref = 0;  // index into SourceCorpus::audio_paths()
  std::int64_t first_sample = 0;
  std::int64_t num_samples = 0;
};

struct SourceUtterance {
  std::string speaker_id;
  std::size_t audio_ref = 0;
  std::vector<SourceWord> words;  // sorted by onset, non-overlapping
};

struct SpeakerGroup {
  std::string speaker_id;
  std::vector<SourceUtterance> utterances;
};

struct CorpusOptions {
  // Words outside [min_word_duration, max_word_duration] seconds are dropped.
  double min_word_duration = 0.2;
  double max_word_duration = 0.8;
};

/// Speaker-indexed word alignments plus the PCM audio they point into.
///
/// Immutable after construction; concurrent reads are safe. Speakers are kept
/// sorted by id so that sampling depends only on the manifest content, never
/// on line order or hashing.
class SourceCorpus {
 public:
  SourceCorpus() = default;
  SourceCorpus(int sample_rate, std::vector<SpeakerGroup> speakers,
               std::vector<std::filesystem::path> audio_paths,
               std::vector<std::shared_ptr<const std::vector<std::int16_t>>> audio,
               std::size_t dropped_words);

  int sample_rate() const { return sample_rate_; }
  const std::vector<SpeakerGroup>& speakers() const { return speakers_; }
  const SpeakerGroup& speaker(std::size_t index) const { return speakers_.at(index); }
  std::size_t speaker_count() const { return speakers_.size(); }
  std::size_t utterance_count() const;
  std::size_t word_count() const;
  // Words removed by the duration filter while loading.
  std::size_t dropped_words() const { return dropped_words_; }

  // Index of the speaker with this id; throws if absent.
  std::size_t speaker_index(const std::string& speaker_id) const;

  const std::vector<std::filesystem::path>& audio_paths() const { return audio_paths_; }

  // Zero-copy view of the samples covered by `word`.
  std::span<const std::int16_t> word_samples(const SourceWord& word) const;

 private:
  int sample_rate_ = 0;
  std::vector<SpeakerGroup> speakers_;
  std::vector<std::filesystem::path> audio_paths_;
  std::vector<std::shared_ptr<const std::vector<std::int16_t>>> audio_;
  std::size_t dropped_words_ = 0;
};

// Loads a line-delimited JSON manifest (see docs/formats.md). Relative audio
// paths resolve against the manifest's directory.
SourceCorpus load_corpus(const std::filesystem::path& manifest_path,
                         const CorpusOptions& options = {});

// Draws `count` distinct speaker ids uniformly without replacement.
std::vector<std::string> sample_speakers(const SourceCorpus& corpus, std::size_t count,
                                         SeededRng& rng);

// Copies exactly round(duration * sample_rate) samples starting at the
// word's aligned onset.
std::vector<std::int16_t> read_word_audio(const SourceCorpus& corpus, const SourceWord& word);

}  // namespace convsim
