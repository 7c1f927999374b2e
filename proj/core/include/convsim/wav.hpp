#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace convsim {

// Mono 16-bit PCM audio.
struct PcmAudio {
  int sample_rate = 0;
  std::vector<std::int16_t> samples;

  double duration() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Reads a canonical RIFF/WAVE file. Only mono 16-bit integer PCM is accepted;
// anything else throws convsim::Error.
PcmAudio read_wav(const std::filesystem::path& path);

// Reads only the header and returns (sample_rate, number of samples).
std::pair<int, std::int64_t> read_wav_info(const std::filesystem::path& path);

void write_wav(const std::filesystem::path& path, std::span<const std::int16_t> samples,
               int sample_rate);

}  // namespace convsim
