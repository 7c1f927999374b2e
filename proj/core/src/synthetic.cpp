#include "convsim/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "convsim/error.hpp"
#include "convsim/rng.hpp"
#include "convsim/wav.hpp"

namespace convsim {

namespace fs = std::filesystem;

fs::path write_synthetic_corpus(const fs::path& dir, const SyntheticCorpusSpec& spec) {
  if (spec.sample_rate % 1000 != 0) {
    throw Error("synthetic corpus sample rate must be a multiple of 1 kHz");
  }
  fs::create_directories(dir / "audio");
  const fs::path manifest = dir / "manifest.jsonl";
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", manifest.string()));

  SeededRng rng(spec.seed);
  const int per_ms = spec.sample_rate / 1000;
  const int fade = 5 * per_ms;
  int word_id = 0;
  for (int s = 0; s < spec.num_speakers; ++s) {
    const std::string speaker = fmt::format("spk{:02d}", s);
    const double base_hz = 110.0 + 17.0 * s;
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      std::vector<std::int16_t> samples;
      nlohmann::ordered_json words = nlohmann::ordered_json::array();
      auto pause = [&] {
        const auto ms = spec.min_pause_ms + static_cast<int>(rng.uniform_index(
                                                static_cast<std::uint64_t>(spec.max_pause_ms - spec.min_pause_ms + 1)));
        samples.insert(samples.end(), static_cast<std::size_t>(ms * per_ms), 0);
      };
      pause();
      for (int w = 0; w < spec.words_per_utterance; ++w) {
        const auto ms = spec.min_word_ms + static_cast<int>(rng.uniform_index(
                                               static_cast<std::uint64_t>(spec.max_word_ms - spec.min_word_ms + 1)));
        const int n = ms * per_ms;
        const double hz = base_hz * (1.0 + rng.uniform(0.0, 2.0));
        const double start_ms = static_cast<double>(samples.size() / static_cast<std::size_t>(per_ms));
        for (int i = 0; i < n; ++i) {
          double env = 1.0;
          if (i < fade) env = 0.5 - 0.5 * std::cos(std::numbers::pi * i / fade);
          if (n - 1 - i < fade) env = std::min(env, 0.5 - 0.5 * std::cos(std::numbers::pi * (n - 1 - i) / fade));
          const double t = static_cast<double>(i) / spec.sample_rate;
          samples.push_back(static_cast<std::int16_t>(
              std::lround(spec.amplitude * env * std::sin(2.0 * std::numbers::pi * hz * t))));
        }
        words.push_back({{"word", fmt::format("w{}", word_id++)},
                         {"start", start_ms / 1000.0},
                         {"duration", ms / 1000.0}});
        pause();
      }
      const std::string name = fmt::format("{}_utt{:03d}.wav", speaker, u);
      write_wav(dir / "audio" / name, samples, spec.sample_rate);
      nlohmann::ordered_json rec;
      rec["audio_filepath"] = "audio/" + name;
      rec["speaker"] = speaker;
      rec["words"] = std::move(words);
      out << rec.dump() << '\n';
    }
  }
  if (!out) throw Error(fmt::format("{}: write failed", manifest.string()));
  return manifest;
}

}  // namespace convsim
