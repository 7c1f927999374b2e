#include "convsim/analyzer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "convsim/error.hpp"

namespace convsim {

namespace fs = std::filesystem;

namespace {

constexpr double kLengthAllowance = 1e-3;
constexpr const char* kStatsHeader =
    "session_id,session_length,union_speech,overlap_time,silence_ratio,overlap_ratio";

std::vector<std::string> split_fields(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> fields;
  std::string f;
  while (ss >> f) fields.push_back(f);
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string fmt_optional(const std::optional<double>& v) {
  return v ? fmt::format("{:.10g}", *v) : std::string("NA");
}

}  // namespace

SessionRatios session_ratios(std::span<const Segment> segments, double session_length) {
  if (!(session_length > 0.0)) {
    throw Error(fmt::format("session length must be positive, got {}", session_length));
  }
  std::vector<std::pair<double, int>> events;
  events.reserve(segments.size() * 2);
  for (const auto& s : segments) {
    if (s.duration < 0.0 || s.onset < 0.0) {
      throw Error(fmt::format("segment for '{}' has negative onset or duration", s.speaker_id));
    }
    if (s.end() > session_length + kLengthAllowance) {
      throw Error(fmt::format("segment for '{}' ends at {} past the session length {}",
                              s.speaker_id, s.end(), session_length));
    }
    if (s.duration == 0.0) continue;
    events.emplace_back(s.onset, +1);
    events.emplace_back(s.end(), -1);
  }
  std::sort(events.begin(), events.end());

  SessionRatios r;
  r.session_length = session_length;
  int active = 0;
  double prev = 0.0;
  for (const auto& [t, delta] : events) {
    const double dt = t - prev;
    if (active >= 1) r.union_speech += dt;
    if (active >= 2) r.overlap_time += (active - 1) * dt;
    active += delta;
    prev = t;
  }
  r.union_speech = std::min(r.union_speech, session_length);
  r.silence_ratio = 1.0 - r.union_speech / session_length;
  r.overlap_ratio = r.union_speech > 0.0 ? r.overlap_time / r.union_speech : 0.0;
  return r;
}

RatioSummary summarize_ratios(std::span<const double> ratios) {
  RatioSummary s;
  if (ratios.empty()) {
    s.notice = "no sessions";
    return s;
  }
  double sum = 0.0;
  for (double r : ratios) sum += r;
  const auto n = static_cast<double>(ratios.size());
  s.mean = sum / n;
  if (ratios.size() < 2) {
    s.notice = "variance undefined for a single session";
    return s;
  }
  // Identical inputs must give exactly zero; rounding in the mean would
  // otherwise leave a tiny positive variance and a degenerate fit.
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  double ss = 0.0;
  if (*lo != *hi) {
    for (double r : ratios) ss += (r - s.mean) * (r - s.mean);
  }
  s.variance = ss / n;
  const RatioMoments m{s.mean, *s.variance};
  if (m.feasible()) {
    try {
      s.fit = beta_from_moments(m);
    } catch (const Error& e) {
      s.notice = e.what();
    }
  } else {
    s.notice = fmt::format("Beta fit omitted: moments (mean={:.6g}, variance={:.6g}) are infeasible",
                           s.mean, *s.variance);
  }
  return s;
}

DatasetStats aggregate_stats(std::vector<SessionStatsRow> sessions) {
  DatasetStats stats;
  stats.sessions = std::move(sessions);
  std::vector<double> sil;
  std::vector<double> ovl;
  for (const auto& row : stats.sessions) {
    sil.push_back(row.silence_ratio);
    ovl.push_back(row.overlap_ratio);
  }
  stats.silence = summarize_ratios(sil);
  stats.overlap = summarize_ratios(ovl);
  return stats;
}

std::vector<std::size_t> histogram(std::span<const double> ratios, std::size_t bins) {
  if (bins < 1) throw Error("histogram needs at least one bin");
  std::vector<std::size_t> counts(bins, 0);
  for (double r : ratios) {
    const double scaled = std::floor(r * static_cast<double>(bins));
    std::size_t bin = 0;
    if (scaled >= static_cast<double>(bins)) {
      bin = bins - 1;
    } else if (scaled > 0.0) {
      bin = static_cast<std::size_t>(scaled);
    }
    ++counts[bin];
  }
  return counts;
}

std::vector<RttmSegment> parse_rttm(std::istream& in, const std::string& source_name) {
  std::vector<RttmSegment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty() || fields[0].starts_with(";;")) continue;
    if (fields.size() != 10) {
      throw Error(fmt::format("{}:{}: expected 10 RTTM fields, found {}", source_name, line_no,
                              fields.size()));
    }
    if (fields[0] != "SPEAKER") continue;
    RttmSegment seg;
    seg.file_id = fields[1];
    seg.segment.speaker_id = fields[7];
    if (!parse_double(fields[3], seg.segment.onset) ||
        !parse_double(fields[4], seg.segment.duration)) {
      throw Error(fmt::format("{}:{}: onset/duration are not numbers", source_name, line_no));
    }
    if (seg.segment.onset < 0.0 || seg.segment.duration < 0.0) {
      throw Error(fmt::format("{}:{}: negative onset or duration", source_name, line_no));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<RttmSegment> parse_rttm(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("{}: cannot open RTTM", path.string()));
  return parse_rttm(in, path.string());
}

void write_stats_csv(const std::vector<SessionStatsRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  out << kStatsHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.10g},{:.10g}\n", r.session_id, r.session_length,
                       r.union_speech, r.overlap_time, r.silence_ratio, r.overlap_ratio);
  }
  if (!out) throw Error(fmt::format("{}: write failed", path.string()));
}

std::vector<SessionStatsRow> read_stats_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("{}: cannot open stats CSV", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw Error(fmt::format("{}: empty stats CSV", path.string()));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kStatsHeader) {
    throw Error(fmt::format("{}: unexpected header '{}', expected '{}'", path.string(), line,
                            kStatsHeader));
  }
  std::vector<SessionStatsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    SessionStatsRow r;
    if (cells.size() != 6 || !parse_double(cells[1], r.session_length) ||
        !parse_double(cells[2], r.union_speech) || !parse_double(cells[3], r.overlap_time) ||
        !parse_double(cells[4], r.silence_ratio) || !parse_double(cells[5], r.overlap_ratio)) {
      throw Error(fmt::format("{}:{}: malformed stats row", path.string(), line_no));
    }
    r.session_id = cells[0];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_summary_csv(const DatasetStats& stats, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  out << "ratio,sessions,mean,variance,beta_alpha,beta_beta\n";
  auto row = [&](const char* name, const RatioSummary& s) {
    out << fmt::format("{},{},{:.10g},{},{},{}\n", name, stats.session_count(), s.mean,
                       fmt_optional(s.variance),
                       fmt_optional(s.fit ? std::optional(s.fit->alpha) : std::nullopt),
                       fmt_optional(s.fit ? std::optional(s.fit->beta) : std::nullopt));
  };
  row("silence", stats.silence);
  row("overlap", stats.overlap);
  if (!out) throw Error(fmt::format("{}: write failed", path.string()));
}

void write_histogram_csv(const fs::path& path, std::size_t bins, const std::string& label_a,
                         std::span<const double> a, const std::string& label_b,
                         std::span<const double> b) {
  const auto ca = histogram(a, bins);
  const auto cb = histogram(b, bins);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  out << fmt::format("bin_lo,bin_hi,{},{}\n", label_a, label_b);
  for (std::size_t i = 0; i < bins; ++i) {
    out << fmt::format("{:.6g},{:.6g},{},{}\n", static_cast<double>(i) / bins,
                       static_cast<double>(i + 1) / bins, ca[i], cb[i]);
  }
  if (!out) throw Error(fmt::format("{}: write failed", path.string()));
}

std::vector<ComparisonRow> compare_stats(const DatasetStats& real, const DatasetStats& simulated,
                                         const std::string& real_label,
                                         const std::string& simulated_label) {
  auto delta_var = [](const RatioSummary& sim, const RatioSummary& ref) -> std::optional<double> {
    if (sim.variance && ref.variance) return *sim.variance - *ref.variance;
    return std::nullopt;
  };
  std::vector<ComparisonRow> rows;
  rows.push_back({simulated_label, "observed sil. ratio", simulated.silence.mean,
                  simulated.silence.variance, simulated.silence.mean - real.silence.mean,
                  delta_var(simulated.silence, real.silence)});
  rows.push_back({real_label, "real-world sil. ratio", real.silence.mean, real.silence.variance,
                  0.0, real.silence.variance ? std::optional(0.0) : std::nullopt});
  rows.push_back({simulated_label, "observed ovl. ratio", simulated.overlap.mean,
                  simulated.overlap.variance, simulated.overlap.mean - real.overlap.mean,
                  delta_var(simulated.overlap, real.overlap)});
  rows.push_back({real_label, "real-world ovl. ratio", real.overlap.mean, real.overlap.variance,
                  0.0, real.overlap.variance ? std::optional(0.0) : std::nullopt});
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  out << "dataset,type,mean,variance,delta_mean,delta_variance\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.10g},{},{:.10g},{}\n", r.dataset, r.type, r.mean,
                       fmt_optional(r.variance), r.delta_mean, fmt_optional(r.delta_variance));
  }
  if (!out) throw Error(fmt::format("{}: write failed", path.string()));
}

std::string format_comparison_table(const std::vector<ComparisonRow>& rows) {
  std::string s = fmt::format("{:>14} | {:>22} | {:>8} | {:>8}\n", "Dataset", "Type", "Mean", "Var.");
  s += std::string(62, '-') + '\n';
  for (const auto& r : rows) {
    s += fmt::format("{:>14} | {:>22} | {:>8.4f} | {:>8}\n", r.dataset, r.type, r.mean,
                     r.variance ? fmt::format("{:.4f}", *r.variance) : std::string("n/a"));
  }
  return s;
}

}  // namespace convsim
