#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "convsim/annotate.hpp"
#include "convsim/sampler.hpp"

namespace convsim {

struct SessionRatios {
  double session_length = 0.0;
  double union_speech = 0.0;  // time covered by >= 1 segment
  double overlap_time = 0.0;  // integral of max(0, concurrency - 1)
  double silence_ratio = 0.0;  // 1 - union / length
  double overlap_ratio = 0.0;  // overlap / union, 0 when union == 0

  double silence_time() const { return session_length - union_speech; }
};

// Sweep-line statistics of one session. Throws when a segment ends after
// `session_length` (beyond a 1 ms allowance for rounded annotations).
SessionRatios session_ratios(std::span<const Segment> segments, double session_length);

struct RatioSummary {
  double mean = 0.0;
  std::optional<double> variance;  // population variance; needs >= 2 sessions
  std::optional<BetaParams> fit;   // only when (mean, variance) is feasible
  std::string notice;              // why variance or fit is missing
};

RatioSummary summarize_ratios(std::span<const double> ratios);

struct SessionStatsRow {
  std::string session_id;
  double session_length = 0.0;
  double union_speech = 0.0;
  double overlap_time = 0.0;
  double silence_ratio = 0.0;
  double overlap_ratio = 0.0;
};

struct DatasetStats {
  std::vector<SessionStatsRow> sessions;
  RatioSummary silence;
  RatioSummary overlap;

  std::size_t session_count() const { return sessions.size(); }
};

DatasetStats aggregate_stats(std::vector<SessionStatsRow> sessions);

// Equal-width bins over [0, 1], half-open [lo, hi); 1.0 falls in the last bin.
std::vector<std::size_t> histogram(std::span<const double> ratios, std::size_t bins);

struct RttmSegment {
  std::string file_id;
  Segment segment;
};

std::vector<RttmSegment> parse_rttm(std::istream& in, const std::string& source_name);
std::vector<RttmSegment> parse_rttm(const std::filesystem::path& path);

void write_stats_csv(const std::vector<SessionStatsRow>& rows, const std::filesystem::path& path);
std::vector<SessionStatsRow> read_stats_csv(const std::filesystem::path& path);
void write_summary_csv(const DatasetStats& stats, const std::filesystem::path& path);

// Overlay histogram: `bin_lo,bin_hi,<label_a>,<label_b>`.
void write_histogram_csv(const std::filesystem::path& path, std::size_t bins,
                         const std::string& label_a, std::span<const double> a,
                         const std::string& label_b, std::span<const double> b);

struct ComparisonRow {
  std::string dataset;
  std::string type;  // "observed sil. ratio", "real-world ovl. ratio", ...
  double mean = 0.0;
  std::optional<double> variance;
  double delta_mean = 0.0;  // simulated minus real, 0 on real rows
  std::optional<double> delta_variance;
};

// Four rows: simulated/real silence then simulated/real overlap.
std::vector<ComparisonRow> compare_stats(const DatasetStats& real, const DatasetStats& simulated,
                                         const std::string& real_label,
                                         const std::string& simulated_label);
void write_comparison_csv(const std::vector<ComparisonRow>& rows, const std::filesystem::path& path);
std::string format_comparison_table(const std::vector<ComparisonRow>& rows);

}  // namespace convsim
