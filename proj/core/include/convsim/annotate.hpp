#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace convsim {

// A speaker-attributed time span in seconds.
struct Segment {
  std::string speaker_id;
  double onset = 0.0;
  double duration = 0.0;

  double end() const { return onset + duration; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct WordAlignment {
  std::string speaker_id;
  std::string text;
  double onset = 0.0;
  double duration = 0.0;
};

/// Ground truth for one simulated session.
struct SessionAnnotation {
  std::string session_id;
  std::vector<Segment> segments;  // one per placed sentence, in placement order
  std::vector<WordAlignment> words;
  double actual_length = 0.0;  // seconds, >= configured session length

  // Realized statistics as tracked by the engine.
  double silence_ratio = 0.0;
  double overlap_ratio = 0.0;
  double speech_union = 0.0;
  double overlap_total = 0.0;
  double silence_total = 0.0;

  // Sampled per-session targets and the seed that regenerates the session.
  double silence_target = 0.0;
  double overlap_target = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t session_index = 0;
};

// One row of the dataset manifest.
struct ManifestEntry {
  std::string session_id;
  std::uint64_t session_index = 0;
  std::string wav_path;  // relative to the manifest directory; empty if not rendered
  std::string rttm_path;
  std::string ctm_path;
  std::string vad_path;
  double actual_length = 0.0;
  double silence_ratio = 0.0;
  double overlap_ratio = 0.0;
  double silence_target = 0.0;
  double overlap_target = 0.0;
  std::uint64_t seed = 0;
};

// Merges consecutive segments of the same speaker that touch or overlap.
std::vector<Segment> merge_speaker_runs(const std::vector<Segment>& segments);

// `SPEAKER <session> 1 <onset> <duration> <NA> <NA> <speaker> <NA> <NA>`,
// times printed with three decimals.
void write_rttm(const std::string& session_id, const std::vector<Segment>& segments,
                std::ostream& os);
void write_rttm(const SessionAnnotation& ann, const std::filesystem::path& path,
                bool merge_runs = false);

// `<session> 1 <onset> <duration> <word>` per word, in onset order.
void write_ctm(const SessionAnnotation& ann, std::ostream& os);
void write_ctm(const SessionAnnotation& ann, const std::filesystem::path& path);

// Frame i covers [i*frame, (i+1)*frame). It is labeled 1 when the union of
// word intervals covers more than half of it.
std::vector<std::uint8_t> vad_frame_labels(const SessionAnnotation& ann, double frame_length);
void write_vad_labels(const SessionAnnotation& ann, double frame_length,
                      const std::filesystem::path& path);

std::string manifest_line(const ManifestEntry& entry);
ManifestEntry parse_manifest_line(const std::string& line);
void write_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

}  // namespace convsim
