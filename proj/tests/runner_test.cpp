#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "convsim/error.hpp"
#include "convsim/runner.hpp"
#include "convsim/synthetic.hpp"
#include "convsim/wav.hpp"
#include "test_support.hpp"

namespace convsim {
namespace {

namespace fs = std::filesystem;
using testing::read_file;
using testing::TempDir;
using testing::write_file;

std::string config_error(const std::string& json) {
  try {
    parse_run_config(json, "/base");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST(RunConfigParse, DefaultsAndPathResolution) {
  const auto cfg = parse_run_config(
      R"({"corpus_manifest":"corpus/m.jsonl","session_length":30,"num_sessions":3,)"
      R"("silence_mean":0.1473,"silence_var":0.0061,"augmentation":{"snr_db":[5,15],)"
      R"("noise_manifest":"noise.jsonl"}})",
      "/data/run");
  EXPECT_EQ(cfg.corpus_manifest, fs::path("/data/run/corpus/m.jsonl"));
  EXPECT_EQ(cfg.simulation.num_sessions, 3);
  EXPECT_DOUBLE_EQ(cfg.simulation.silence.mean, 0.1473);
  EXPECT_DOUBLE_EQ(cfg.simulation.turn_prob, 0.875);
  EXPECT_EQ(cfg.augmentation.snr_db, std::make_pair(5.0, 15.0));
  EXPECT_EQ(*cfg.augmentation.noise_manifest, fs::path("/data/run/noise.jsonl"));
  EXPECT_EQ(cfg.simulation.discrepancy_reference, DiscrepancyReference::kSession);
}

TEST(RunConfigParse, ErrorsNameTheField) {
  EXPECT_NE(config_error(R"({"corpus_manifest":"m","turn_prob":2})").find("turn_prob"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"corpus_manifest":"m","silence_mean":0.5,"silence_var":0.3})")
                .find("silence"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"corpus_manifest":"m","sesion_length":10})").find("sesion_length"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"corpus_manifest":"m","num_sessions":"many"})").find("num_sessions"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"corpus_manifest":"m","augmentation":{"snr_db":[20]}})")
                .find("augmentation.snr_db"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"session_length":10})").find("corpus_manifest"), std::string::npos);
  EXPECT_NE(config_error(R"({"corpus_manifest":"m","discrepancy_reference":"x"})")
                .find("discrepancy_reference"),
            std::string::npos);
  EXPECT_FALSE(config_error("{nope").empty());
  EXPECT_THROW(load_run_config("/definitely/not/here.json"), ConfigError);
}

class Dataset : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir;
    SyntheticCorpusSpec spec;
    spec.num_speakers = 4;
    spec.utterances_per_speaker = 6;
    spec.words_per_utterance = 12;
    manifest_ = new fs::path(write_synthetic_corpus(*dir_ / "corpus", spec));
    corpus_ = new SourceCorpus(load_corpus(*manifest_));
  }
  static void TearDownTestSuite() {
    delete corpus_;
    delete manifest_;
    delete dir_;
  }

  static RunConfig config(std::int64_t sessions, double length) {
    RunConfig cfg;
    cfg.corpus_manifest = *manifest_;
    cfg.simulation.num_sessions = sessions;
    cfg.simulation.session_length = length;
    cfg.simulation.base_seed = 2024;
    cfg.simulation.silence = {0.1473, 0.0061};
    cfg.simulation.overlap = {0.0754, 0.0020};
    return cfg;
  }

  static std::vector<std::string> listing(const fs::path& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
  }

  static TempDir* dir_;
  static fs::path* manifest_;
  static SourceCorpus* corpus_;
};

TempDir* Dataset::dir_ = nullptr;
fs::path* Dataset::manifest_ = nullptr;
SourceCorpus* Dataset::corpus_ = nullptr;

TEST_F(Dataset, WritesAllArtifacts) {
  TempDir out;
  const auto report = simulate_dataset(config(4, 30.0), *corpus_, out.path(), 2);
  EXPECT_TRUE(report.complete());
  EXPECT_EQ(report.sessions_generated, 4u);
  EXPECT_EQ(report.observed.session_count(), 4u);

  const auto entries = read_manifest(out / "manifest.jsonl");
  ASSERT_EQ(entries.size(), 4u);
  double total = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    EXPECT_EQ(e.session_id, session_id_for(i));
    EXPECT_EQ(e.seed, 2024u);
    EXPECT_GE(e.actual_length, 30.0);
    total += e.actual_length;
    const auto [rate, samples] = read_wav_info(out / e.wav_path);
    EXPECT_EQ(rate, 16000);
    EXPECT_EQ(samples, std::llround(e.actual_length * 16000));
    const auto rttm = parse_rttm(out / e.rttm_path);
    ASSERT_FALSE(rttm.empty());
    std::vector<Segment> segs;
    for (const auto& r : rttm) segs.push_back(r.segment);
    const auto ratios = session_ratios(segs, e.actual_length);
    EXPECT_NEAR(ratios.silence_ratio, e.silence_ratio, 1e-3);
    EXPECT_NEAR(ratios.overlap_ratio, e.overlap_ratio, 1e-3);
    EXPECT_TRUE(fs::exists(out / e.ctm_path));
    const std::string vad = read_file(out / e.vad_path);
    EXPECT_EQ(static_cast<double>(std::count(vad.begin(), vad.end(), '\n')),
              std::ceil(e.actual_length / 0.01 - 1e-9));
  }
  EXPECT_NEAR(report.total_audio_seconds, total, 1e-9);
  EXPECT_NE(format_run_report(report).find("4 generated"), std::string::npos);
}

TEST_F(Dataset, WorkerCountDoesNotChangeBytes) {
  TempDir one;
  TempDir many;
  auto cfg = config(6, 20.0);
  cfg.augmentation.gain_perturb_db = {-3.0, 3.0};
  simulate_dataset(cfg, *corpus_, one.path(), 1);
  simulate_dataset(cfg, *corpus_, many.path(), 8);
  const auto names = listing(one.path());
  ASSERT_EQ(names, listing(many.path()));
  for (const auto& n : names) {
    EXPECT_EQ(read_file(one / n), read_file(many / n)) << n;
  }
}

TEST_F(Dataset, ResumeKeepsFinishedSessionsAndRedoesBrokenOnes) {
  TempDir out;
  const auto cfg = config(4, 20.0);
  simulate_dataset(cfg, *corpus_, out.path(), 2);
  const std::string wav1 = read_file(out / "session_00001.wav");
  const std::string manifest = read_file(out / "manifest.jsonl");

  fs::remove(out / "session_00001.json");
  write_file(out / "session_00002.wav", "truncated");
  const auto report = simulate_dataset(cfg, *corpus_, out.path(), 2, true);
  EXPECT_EQ(report.sessions_generated, 4u);
  EXPECT_EQ(report.sessions_resumed, 2u);
  EXPECT_EQ(read_file(out / "session_00001.wav"), wav1);
  EXPECT_EQ(read_file(out / "manifest.jsonl"), manifest);
}

TEST_F(Dataset, ResumeRejectsSidecarFromAnotherSeed) {
  TempDir out;
  auto cfg = config(2, 15.0);
  simulate_dataset(cfg, *corpus_, out.path(), 1);
  cfg.simulation.base_seed = 7;
  const auto report = simulate_dataset(cfg, *corpus_, out.path(), 1, true);
  EXPECT_EQ(report.sessions_resumed, 0u);
}

TEST_F(Dataset, TooManySpeakersIsAConfigError) {
  TempDir out;
  auto cfg = config(1, 10.0);
  cfg.simulation.num_speakers = 5;
  EXPECT_THROW(simulate_dataset(cfg, *corpus_, out.path(), 1), ConfigError);
}

TEST_F(Dataset, AnalyzeSingleSessionLeavesVarianceUndefined) {
  TempDir out;
  simulate_dataset(config(1, 20.0), *corpus_, out.path(), 1);
  const auto result = run_analyze(out / "session_00000.rttm", out / "stats.csv");
  EXPECT_EQ(result.stats.session_count(), 1u);
  EXPECT_FALSE(result.stats.silence.variance.has_value());
  EXPECT_NE(format_simulator_params(result.stats).find("undefined"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "stats_summary.csv"));
}

TEST_F(Dataset, AnalyzeDirectorySkipsBadFilesWithWarnings) {
  TempDir out;
  simulate_dataset(config(3, 20.0), *corpus_, out.path(), 1);
  write_file(out / "broken.rttm", "SPEAKER x 1 0.0 1.0 <NA>\n");
  const auto result = run_analyze(out.path(), out / "stats.csv");
  EXPECT_EQ(result.stats.session_count(), 3u);
  ASSERT_EQ(result.warnings.size(), 1u);
  EXPECT_NE(result.warnings[0].find("broken.rttm:1"), std::string::npos);
  EXPECT_THROW(run_analyze(out / "missing.rttm", out / "x.csv"), Error);
}

TEST_F(Dataset, AnalyzeManifestMatchesEngine) {
  TempDir out;
  const auto report = simulate_dataset(config(5, 30.0), *corpus_, out.path(), 2);
  const auto result = run_analyze(out / "manifest.jsonl", out / "stats.csv");
  ASSERT_EQ(result.stats.session_count(), 5u);
  EXPECT_TRUE(result.warnings.empty());
  EXPECT_NEAR(result.stats.silence.mean, report.observed.silence.mean, 1e-12);
  EXPECT_NEAR(result.stats.overlap.mean, report.observed.overlap.mean, 1e-12);
  const auto rows = read_stats_csv(out / "stats.csv");
  EXPECT_EQ(rows.size(), 5u);
}

// Fitting analyzer output and simulating again lands near the same moments.
TEST_F(Dataset, ClosedLoopRoundTrip) {
  TempDir first;
  TempDir second;
  auto cfg = config(24, 60.0);
  cfg.write_audio = false;
  simulate_dataset(cfg, *corpus_, first.path(), 2);
  const auto a = run_analyze(first / "manifest.jsonl", first / "stats.csv").stats;
  ASSERT_TRUE(a.silence.fit && a.overlap.fit);
  cfg.simulation.silence = {a.silence.mean, *a.silence.variance};
  cfg.simulation.overlap = {a.overlap.mean, *a.overlap.variance};
  cfg.simulation.base_seed = 99;
  simulate_dataset(cfg, *corpus_, second.path(), 2);
  const auto b = run_analyze(second / "manifest.jsonl", second / "stats.csv").stats;
  EXPECT_NEAR(b.silence.mean, a.silence.mean, 0.03);
  EXPECT_NEAR(b.overlap.mean, a.overlap.mean, 0.02);
}

TEST_F(Dataset, CompareIdenticalStatsGivesZeroDeltas) {
  TempDir out;
  simulate_dataset(config(4, 20.0), *corpus_, out.path(), 2);
  run_analyze(out / "manifest.jsonl", out / "real.csv");
  fs::copy_file(out / "real.csv", out / "sim.csv");
  const auto result = run_compare(out / "real.csv", out / "sim.csv", 5, out / "cmp");
  ASSERT_EQ(result.rows.size(), 4u);
  for (const auto& r : result.rows) EXPECT_EQ(r.delta_mean, 0.0);
  const std::string hist = read_file(result.silence_histogram_csv);
  EXPECT_EQ(std::count(hist.begin(), hist.end(), '\n'), 6);
  EXPECT_TRUE(fs::exists(result.table_csv));
  EXPECT_THROW(run_compare(out / "real.csv", out / "sim.csv", 0, out / "cmp"), Error);
}

TEST_F(Dataset, MoreWorkersFinishFaster) {
  if (std::thread::hardware_concurrency() < 4) {
    GTEST_SKIP() << "needs at least 4 hardware threads, have "
                 << std::thread::hardware_concurrency();
  }
  auto cfg = config(16, 120.0);
  auto timed = [&](unsigned workers) {
    TempDir out;
    const auto start = std::chrono::steady_clock::now();
    simulate_dataset(cfg, *corpus_, out.path(), workers);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  const double serial = timed(1);
  const double parallel = timed(4);
  EXPECT_LE(parallel, 0.5 * serial) << "1 worker " << serial << " s, 4 workers " << parallel << " s";
}

}  // namespace
}  // namespace convsim
