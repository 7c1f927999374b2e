#include "convsim/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "convsim/error.hpp"
#include "convsim/wav.hpp"

namespace convsim {

namespace fs = std::filesystem;

void AugmentationConfig::validate() const {
  if (!(gain_perturb_db.first <= gain_perturb_db.second)) {
    throw ConfigError(fmt::format("augmentation.gain_perturb_db: lo {} > hi {}",
                                  gain_perturb_db.first, gain_perturb_db.second));
  }
  if (!(snr_db.first <= snr_db.second)) {
    throw ConfigError(
        fmt::format("augmentation.snr_db: lo {} > hi {}", snr_db.first, snr_db.second));
  }
}

NoiseBank NoiseBank::load(const fs::path& manifest, int sample_rate) {
  std::ifstream in(manifest);
  if (!in) throw Error(fmt::format("{}: cannot open noise manifest", manifest.string()));
  std::vector<std::vector<float>> clips;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = fmt::format("{}:{}", manifest.string(), line_no);
    fs::path path;
    try {
      path = nlohmann::json::parse(line).at("audio_filepath").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(fmt::format("{}: bad noise record ({})", where, e.what()));
    }
    if (path.is_relative()) path = manifest.parent_path() / path;
    PcmAudio pcm;
    try {
      pcm = read_wav(path);
    } catch (const Error& e) {
      throw Error(fmt::format("{}: {}", where, e.what()));
    }
    if (pcm.sample_rate != sample_rate) {
      throw Error(fmt::format("{}: noise sample rate {} Hz, corpus uses {} Hz", where,
                              pcm.sample_rate, sample_rate));
    }
    if (pcm.samples.empty()) continue;
    clips.emplace_back(pcm.samples.begin(), pcm.samples.end());
  }
  if (clips.empty()) throw Error(fmt::format("{}: no usable noise clips", manifest.string()));
  return NoiseBank(std::move(clips));
}

std::vector<float> NoiseBank::tile(std::size_t length, SeededRng& rng) const {
  std::vector<float> out;
  out.reserve(length);
  while (out.size() < length) {
    const auto& clip = clips_[static_cast<std::size_t>(rng.uniform_index(clips_.size()))];
    const auto offset = static_cast<std::size_t>(rng.uniform_index(clip.size()));
    const std::size_t take = std::min(clip.size() - offset, length - out.size());
    out.insert(out.end(), clip.begin() + static_cast<std::ptrdiff_t>(offset),
               clip.begin() + static_cast<std::ptrdiff_t>(offset + take));
  }
  return out;
}

std::vector<std::uint8_t> speech_mask(const SessionTimeline& timeline) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(timeline.length_samples), 0);
  for (const auto& s : timeline.placed) {
    for (const auto& w : s.words) {
      const auto begin = static_cast<std::size_t>(w.onset_sample);
      const auto end = std::min(mask.size(), begin + static_cast<std::size_t>(w.source.num_samples));
      std::fill(mask.begin() + static_cast<std::ptrdiff_t>(begin),
                mask.begin() + static_cast<std::ptrdiff_t>(end), std::uint8_t{1});
    }
  }
  return mask;
}

double measure_snr(std::span<const float> speech, std::span<const float> noise,
                   std::span<const std::uint8_t> mask) {
  if (speech.size() != noise.size() || speech.size() != mask.size()) {
    throw Error("measure_snr: speech, noise and mask lengths differ");
  }
  double speech_energy = 0.0;
  std::size_t speech_count = 0;
  double noise_energy = 0.0;
  for (std::size_t i = 0; i < speech.size(); ++i) {
    if (mask[i]) {
      speech_energy += double(speech[i]) * speech[i];
      ++speech_count;
    }
    noise_energy += double(noise[i]) * noise[i];
  }
  if (speech_count == 0 || speech_energy <= 0.0) {
    throw Error("measure_snr: speech region is silent");
  }
  if (noise_energy <= 0.0) throw Error("measure_snr: noise is silent");
  const double speech_power = speech_energy / static_cast<double>(speech_count);
  const double noise_power = noise_energy / static_cast<double>(noise.size());
  return 10.0 * std::log10(speech_power / noise_power);
}

RenderResult render_session(const SessionTimeline& timeline, const SourceCorpus& corpus,
                            const AugmentationConfig& aug, const NoiseBank* noise,
                            SeededRng& rng) {
  aug.validate();
  if (timeline.sample_rate != corpus.sample_rate()) {
    throw Error("render_session: timeline and corpus sample rates differ");
  }
  const auto length = static_cast<std::size_t>(timeline.length_samples);
  std::vector<float> mix(length, 0.0f);

  for (const auto& sentence : timeline.placed) {
    // One draw per sentence regardless of range keeps the stream layout fixed.
    const double perturb_db = rng.uniform(aug.gain_perturb_db.first, aug.gain_perturb_db.second);
    double gain = timeline.gains.at(sentence.speaker);
    if (perturb_db != 0.0) gain *= std::pow(10.0, perturb_db / 20.0);
    const auto g = static_cast<float>(gain);
    for (const auto& w : sentence.words) {
      const auto src = corpus.word_samples(w.source);
      const auto begin = static_cast<std::size_t>(w.onset_sample);
      if (begin + src.size() > length) throw Error("render_session: word extends past session end");
      float* dst = mix.data() + begin;
      if (g == 1.0f) {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += static_cast<float>(src[i]);
      } else {
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] += g * static_cast<float>(src[i]);
      }
    }
  }

  RenderResult result;
  if (noise != nullptr && !noise->empty() && length > 0) {
    const double target_snr = rng.uniform(aug.snr_db.first, aug.snr_db.second);
    std::vector<float> bed = noise->tile(length, rng);
    const auto mask = speech_mask(timeline);
    const bool has_speech = std::any_of(mix.begin(), mix.end(), [](float x) { return x != 0.0f; });
    const bool has_noise = std::any_of(bed.begin(), bed.end(), [](float x) { return x != 0.0f; });
    if (has_speech && has_noise) {
      const double current = measure_snr(mix, bed, mask);
      const auto scale = static_cast<float>(std::pow(10.0, (current - target_snr) / 20.0));
      for (std::size_t i = 0; i < length; ++i) mix[i] += scale * bed[i];
      result.snr_db = target_snr;
    }
  }

  float hi = 0.0f;
  float lo = 0.0f;
  for (float x : mix) {
    hi = std::max(hi, x);
    lo = std::min(lo, x);
  }
  float factor = 1.0f;
  if (hi > 32767.0f || lo < -32768.0f) {
    const float peak = std::max(hi, -lo);
    if (!aug.normalize_on_clip) {
      throw Error(fmt::format("{}: mix peaks at {:.0f} and would clip", timeline.session_id, peak));
    }
    factor = 32767.0f / peak;
  }
  result.normalization = factor;
  result.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    const float v = factor == 1.0f ? mix[i] : mix[i] * factor;
    result.samples[i] = static_cast<std::int16_t>(std::clamp(std::lround(v), -32768L, 32767L));
  }
  return result;
}

}  // namespace convsim
