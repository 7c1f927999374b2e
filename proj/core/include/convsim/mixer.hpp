#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "convsim/corpus.hpp"
#include "convsim/engine.hpp"
#include "convsim/rng.hpp"

namespace convsim {

struct AugmentationConfig {
  // Per-sentence gain perturbation, uniform in dB.
  std::pair<double, double> gain_perturb_db{0.0, 0.0};
  // Line-delimited JSON list of noise WAVs; no noise when unset.
  std::optional<std::filesystem::path> noise_manifest;
  std::pair<double, double> snr_db{20.0, 20.0};
  // Scale the whole session down when the mix would clip; otherwise clipping
  // is an error.
  bool normalize_on_clip = true;

  void validate() const;
};

// Background-noise recordings, loaded once and shared read-only by workers.
class NoiseBank {
 public:
  static NoiseBank load(const std::filesystem::path& manifest, int sample_rate);

  explicit NoiseBank(std::vector<std::vector<float>> clips) : clips_(std::move(clips)) {}

  bool empty() const { return clips_.empty(); }
  const std::vector<std::vector<float>>& clips() const { return clips_; }

  // Tiles randomly chosen clips (each starting at a random offset) until
  // `length` samples are covered.
  std::vector<float> tile(std::size_t length, SeededRng& rng) const;

 private:
  std::vector<std::vector<float>> clips_;
};

struct RenderResult {
  std::vector<std::int16_t> samples;
  double normalization = 1.0;  // factor applied to avoid clipping
  std::optional<double> snr_db;  // realized SNR when noise was mixed
};

/// Mixes a timeline into one mono 16-bit buffer of `timeline.length_samples`.
///
/// Word samples are accumulated in float in timeline order, scaled by the
/// speaker gain times the sentence's perturbation. With augmentation off and
/// unit gains the output reproduces source samples bit-exactly outside
/// overlaps and is exactly zero in silences.
RenderResult render_session(const SessionTimeline& timeline, const SourceCorpus& corpus,
                            const AugmentationConfig& aug, const NoiseBank* noise,
                            SeededRng& rng);

// Speech mask: 1 on samples covered by any placed word.
std::vector<std::uint8_t> speech_mask(const SessionTimeline& timeline);

// 10 log10(mean(speech^2 over mask) / mean(noise^2)). Throws when the masked
// speech has no energy or the lengths differ.
double measure_snr(std::span<const float> speech, std::span<const float> noise,
                   std::span<const std::uint8_t> mask);

}  // namespace convsim
