#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "convsim/analyzer.hpp"
#include "convsim/config.hpp"
#include "convsim/corpus.hpp"
#include "convsim/mixer.hpp"

namespace convsim {

struct SessionFailure {
  std::uint64_t session_index = 0;
  std::string message;
};

struct RunReport {
  std::size_t sessions_requested = 0;
  std::size_t sessions_generated = 0;  // includes sessions kept by --resume
  std::size_t sessions_resumed = 0;
  double total_audio_seconds = 0.0;
  double wall_seconds = 0.0;
  DatasetStats observed;
  RatioMoments silence_target;
  RatioMoments overlap_target;
  std::vector<SessionFailure> failures;

  bool complete() const { return failures.empty(); }
};

/// Generates `cfg.simulation.num_sessions` sessions into `out_dir` on a pool
/// of `workers` threads.
///
/// Per session: `<id>.wav` (unless write_audio is off), `<id>.rttm`,
/// `<id>.ctm`, `<id>.vad.txt` and a `<id>.json` sidecar written last, which
/// --resume uses to recognise finished sessions. `manifest.jsonl` is written
/// once at the end, sorted by session index. Output bytes do not depend on
/// the worker count.
RunReport simulate_dataset(const RunConfig& cfg, const SourceCorpus& corpus,
                           const std::filesystem::path& out_dir, unsigned workers,
                           bool resume = false, const NoiseBank* noise = nullptr);

// Loads config, corpus and noise, then calls simulate_dataset.
RunReport run_simulate(const std::filesystem::path& config_path,
                       const std::filesystem::path& out_dir, unsigned workers, bool resume);

std::string format_run_report(const RunReport& report);

struct AnalyzeResult {
  DatasetStats stats;
  std::vector<std::string> warnings;  // skipped inputs
};

// `input` is a dataset manifest (.jsonl/.json), a single RTTM file, or a
// directory of RTTM files. Writes per-session rows to `output_csv` and the
// aggregate to `<stem>_summary.csv` beside it.
AnalyzeResult run_analyze(const std::filesystem::path& input,
                          const std::filesystem::path& output_csv);

// The four simulator moments, formatted as config keys.
std::string format_simulator_params(const DatasetStats& stats);

struct CompareResult {
  std::vector<ComparisonRow> rows;
  std::filesystem::path table_csv;
  std::filesystem::path silence_histogram_csv;
  std::filesystem::path overlap_histogram_csv;
};

CompareResult run_compare(const std::filesystem::path& real_csv,
                          const std::filesystem::path& simulated_csv, std::size_t bins,
                          const std::filesystem::path& out_dir);

}  // namespace convsim
