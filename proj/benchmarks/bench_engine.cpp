#include <benchmark/benchmark.h>

#include "convsim/analyzer.hpp"
#include "convsim/engine.hpp"
#include "convsim/mixer.hpp"
#include "convsim/sampler.hpp"

namespace {

using namespace convsim;

// 10 speakers x 20 utterances of 20 words, 250..750 ms each, held in memory.
const SourceCorpus& corpus() {
  static const SourceCorpus c = [] {
    constexpr int rate = 16000;
    std::vector<SpeakerGroup> groups;
    std::vector<std::filesystem::path> paths;
    std::vector<std::shared_ptr<const std::vector<std::int16_t>>> audio;
    SeededRng rng(1);
    for (int s = 0; s < 10; ++s) {
      SpeakerGroup g;
      g.speaker_id = "spk" + std::to_string(s);
      for (int u = 0; u < 20; ++u) {
        auto buf = std::make_shared<std::vector<std::int16_t>>();
        SourceUtterance utt;
        utt.speaker_id = g.speaker_id;
        utt.audio_ref = audio.size();
        for (int w = 0; w < 20; ++w) {
          SourceWord word;
          word.text = "w";
          word.audio_ref = audio.size();
          word.first_sample = static_cast<std::int64_t>(buf->size());
          word.num_samples = 16 * (250 + static_cast<std::int64_t>(rng.uniform_index(501)));
          word.onset = static_cast<double>(word.first_sample) / rate;
          word.duration = static_cast<double>(word.num_samples) / rate;
          for (std::int64_t i = 0; i < word.num_samples; ++i) {
            buf->push_back(static_cast<std::int16_t>(rng.uniform(-3000.0, 3000.0)));
          }
          utt.words.push_back(word);
        }
        paths.emplace_back("mem");
        audio.push_back(std::move(buf));
        g.utterances.push_back(std::move(utt));
      }
      groups.push_back(std::move(g));
    }
    return SourceCorpus(rate, std::move(groups), std::move(paths), std::move(audio), 0);
  }();
  return c;
}

SimulationConfig config(double length) {
  SimulationConfig cfg;
  cfg.session_length = length;
  cfg.silence = {0.1473, 0.0061};
  cfg.overlap = {0.0754, 0.0020};
  return cfg;
}

void BM_SimulateSession(benchmark::State& state) {
  const auto cfg = config(static_cast<double>(state.range(0)));
  std::uint64_t index = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_session(cfg, corpus(), index++));
  state.counters["audio_s_per_s"] =
      benchmark::Counter(static_cast<double>(state.range(0)), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_SimulateSession)->Arg(60)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_RenderSession(benchmark::State& state) {
  const auto result = simulate_session(config(600.0), corpus(), 0);
  AugmentationConfig aug;
  aug.gain_perturb_db = {-3.0, 3.0};
  for (auto _ : state) {
    SeededRng rng(5);
    benchmark::DoNotOptimize(render_session(result.timeline, corpus(), aug, nullptr, rng));
  }
}
BENCHMARK(BM_RenderSession)->Unit(benchmark::kMillisecond);

void BM_SessionRatios(benchmark::State& state) {
  const auto result = simulate_session(config(600.0), corpus(), 1);
  const auto& segs = result.annotation.segments;
  for (auto _ : state) benchmark::DoNotOptimize(session_ratios(segs, result.annotation.actual_length));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(segs.size()));
}
BENCHMARK(BM_SessionRatios);

void BM_SampleGamma(benchmark::State& state) {
  SeededRng rng(9);
  const double shape = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_gamma(shape, 1.0, rng));
}
BENCHMARK(BM_SampleGamma)->Arg(3)->Arg(40);

void BM_SampleSentenceLength(benchmark::State& state) {
  SeededRng rng(10);
  const NegBinomialParams nb{2.0, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(sample_sentence_length(nb, rng));
}
BENCHMARK(BM_SampleSentenceLength);

}  // namespace

BENCHMARK_MAIN();
