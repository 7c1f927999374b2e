#include "convsim/annotate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <json.hpp>

#include "convsim/error.hpp"

namespace convsim {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

double round_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

// Onset and duration at millisecond precision; the duration is derived from
// the rounded end so adjacent spans share their printed boundary.
std::pair<double, double> rounded_span(double onset, double duration) {
  const double on = round_ms(onset);
  const double off = round_ms(onset + duration);
  return {on, std::max(0.0, off - on)};
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("{}: cannot open for writing", path.string()));
  return out;
}

void check_written(const std::ofstream& out, const fs::path& path) {
  if (!out) throw Error(fmt::format("{}: write failed", path.string()));
}

}  // namespace

std::vector<Segment> merge_speaker_runs(const std::vector<Segment>& segments) {
  std::vector<Segment> merged;
  for (const auto& s : segments) {
    if (!merged.empty() && merged.back().speaker_id == s.speaker_id &&
        s.onset <= merged.back().end() + 1e-9) {
      Segment& last = merged.back();
      last.duration = std::max(last.end(), s.end()) - last.onset;
    } else {
      merged.push_back(s);
    }
  }
  return merged;
}

void write_rttm(const std::string& session_id, const std::vector<Segment>& segments,
                std::ostream& os) {
  for (const auto& s : segments) {
    const auto [onset, duration] = rounded_span(s.onset, s.duration);
    os << fmt::format("SPEAKER {} 1 {:.3f} {:.3f} <NA> <NA> {} <NA> <NA>\n", session_id, onset,
                      duration, s.speaker_id);
  }
}

void write_rttm(const SessionAnnotation& ann, const fs::path& path, bool merge_runs) {
  auto out = open_for_write(path);
  write_rttm(ann.session_id, merge_runs ? merge_speaker_runs(ann.segments) : ann.segments, out);
  check_written(out, path);
}

void write_ctm(const SessionAnnotation& ann, std::ostream& os) {
  for (const auto& w : ann.words) {
    const auto [onset, duration] = rounded_span(w.onset, w.duration);
    os << fmt::format("{} 1 {:.3f} {:.3f} {}\n", ann.session_id, onset, duration, w.text);
  }
}

void write_ctm(const SessionAnnotation& ann, const fs::path& path) {
  auto out = open_for_write(path);
  write_ctm(ann, out);
  check_written(out, path);
}

std::vector<std::uint8_t> vad_frame_labels(const SessionAnnotation& ann, double frame_length) {
  if (!(frame_length > 0.0)) {
    throw Error(fmt::format("frame length must be positive, got {}", frame_length));
  }
  const auto frames =
      static_cast<std::size_t>(std::max(0.0, std::ceil(ann.actual_length / frame_length - 1e-9)));
  std::vector<std::uint8_t> labels(frames, 0);

  std::vector<std::pair<double, double>> spans;
  spans.reserve(ann.words.size());
  for (const auto& w : ann.words) spans.emplace_back(w.onset, w.onset + w.duration);
  std::sort(spans.begin(), spans.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && s.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, s.second);
    } else {
      merged.push_back(s);
    }
  }

  std::vector<double> coverage(frames, 0.0);
  for (const auto& [begin, end] : merged) {
    auto first = static_cast<std::size_t>(std::max(0.0, std::floor(begin / frame_length)));
    for (std::size_t f = first; f < frames; ++f) {
      const double lo = static_cast<double>(f) * frame_length;
      const double hi = lo + frame_length;
      if (lo >= end) break;
      coverage[f] += std::max(0.0, std::min(hi, end) - std::max(lo, begin));
    }
  }
  for (std::size_t f = 0; f < frames; ++f) {
    labels[f] = coverage[f] > 0.5 * frame_length + 1e-9 ? 1 : 0;
  }
  return labels;
}

void write_vad_labels(const SessionAnnotation& ann, double frame_length, const fs::path& path) {
  const auto labels = vad_frame_labels(ann, frame_length);
  std::string body;
  body.reserve(labels.size() * 2);
  for (auto l : labels) {
    body.push_back(l ? '1' : '0');
    body.push_back('\n');
  }
  auto out = open_for_write(path);
  out << body;
  check_written(out, path);
}

std::string manifest_line(const ManifestEntry& e) {
  ordered_json j;
  j["session_id"] = e.session_id;
  j["session_index"] = e.session_index;
  j["wav_filepath"] = e.wav_path;
  j["rttm_filepath"] = e.rttm_path;
  j["ctm_filepath"] = e.ctm_path;
  j["vad_filepath"] = e.vad_path;
  j["actual_length"] = e.actual_length;
  j["silence_ratio"] = e.silence_ratio;
  j["overlap_ratio"] = e.overlap_ratio;
  j["silence_target"] = e.silence_target;
  j["overlap_target"] = e.overlap_target;
  j["seed"] = e.seed;
  return j.dump();
}

ManifestEntry parse_manifest_line(const std::string& line) {
  const auto j = ordered_json::parse(line);
  ManifestEntry e;
  e.session_id = j.at("session_id").get<std::string>();
  e.session_index = j.value("session_index", std::uint64_t{0});
  e.wav_path = j.value("wav_filepath", std::string{});
  e.rttm_path = j.at("rttm_filepath").get<std::string>();
  e.ctm_path = j.value("ctm_filepath", std::string{});
  e.vad_path = j.value("vad_filepath", std::string{});
  e.actual_length = j.at("actual_length").get<double>();
  e.silence_ratio = j.value("silence_ratio", 0.0);
  e.overlap_ratio = j.value("overlap_ratio", 0.0);
  e.silence_target = j.value("silence_target", 0.0);
  e.overlap_target = j.value("overlap_target", 0.0);
  e.seed = j.value("seed", std::uint64_t{0});
  return e;
}

void write_manifest(const std::vector<ManifestEntry>& entries, const fs::path& path) {
  auto out = open_for_write(path);
  for (const auto& e : entries) out << manifest_line(e) << '\n';
  check_written(out, path);
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("{}: cannot open manifest", path.string()));
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      entries.push_back(parse_manifest_line(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(fmt::format("{}:{}: bad manifest record ({})", path.string(), line_no, e.what()));
    }
  }
  return entries;
}

}  // namespace convsim
