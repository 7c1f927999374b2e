#include "convsim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "convsim/annotate.hpp"
#include "convsim/engine.hpp"
#include "convsim/error.hpp"
#include "convsim/wav.hpp"

namespace convsim {

namespace fs = std::filesystem;

namespace {

struct SessionOutcome {
  std::optional<ManifestEntry> entry;
  std::optional<SessionStatsRow> stats;
  bool resumed = false;
  std::string error;
};

ManifestEntry entry_for(const SessionAnnotation& ann, bool with_audio) {
  ManifestEntry e;
  e.session_id = ann.session_id;
  e.session_index = ann.session_index;
  e.wav_path = with_audio ? ann.session_id + ".wav" : std::string{};
  e.rttm_path = ann.session_id + ".rttm";
  e.ctm_path = ann.session_id + ".ctm";
  e.vad_path = ann.session_id + ".vad.txt";
  e.actual_length = ann.actual_length;
  e.silence_ratio = ann.silence_ratio;
  e.overlap_ratio = ann.overlap_ratio;
  e.silence_target = ann.silence_target;
  e.overlap_target = ann.overlap_target;
  e.seed = ann.seed;
  return e;
}

SessionStatsRow stats_row(const std::string& id, std::span<const Segment> segments, double length) {
  const SessionRatios r = session_ratios(segments, length);
  return {id, r.session_length, r.union_speech, r.overlap_time, r.silence_ratio, r.overlap_ratio};
}

std::vector<Segment> segments_of(const std::vector<RttmSegment>& rttm) {
  std::vector<Segment> out;
  out.reserve(rttm.size());
  for (const auto& r : rttm) out.push_back(r.segment);
  return out;
}

// A finished session from an earlier run, or nullopt if anything is missing.
std::optional<SessionOutcome> try_resume(const RunConfig& cfg, const SourceCorpus& corpus,
                                         const fs::path& out_dir, std::uint64_t index) {
  const std::string id = session_id_for(index);
  const fs::path sidecar = out_dir / (id + ".json");
  if (!fs::exists(sidecar)) return std::nullopt;
  try {
    std::ifstream in(sidecar);
    std::string line;
    std::getline(in, line);
    ManifestEntry e = parse_manifest_line(line);
    if (e.session_id != id || e.session_index != index || e.seed != cfg.simulation.base_seed) {
      return std::nullopt;
    }
    if (!fs::exists(out_dir / e.ctm_path) || !fs::exists(out_dir / e.vad_path)) return std::nullopt;
    if (cfg.write_audio) {
      if (e.wav_path.empty()) return std::nullopt;
      const auto [rate, samples] = read_wav_info(out_dir / e.wav_path);
      if (rate != corpus.sample_rate() ||
          samples != std::llround(e.actual_length * corpus.sample_rate())) {
        return std::nullopt;
      }
    }
    const auto segments = segments_of(parse_rttm(out_dir / e.rttm_path));
    SessionOutcome outcome;
    outcome.stats = stats_row(id, segments, e.actual_length);
    outcome.entry = std::move(e);
    outcome.resumed = true;
    return outcome;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

SessionOutcome run_one(const RunConfig& cfg, const SourceCorpus& corpus, const fs::path& out_dir,
                       std::uint64_t index, bool resume, const NoiseBank* noise) {
  if (resume) {
    if (auto done = try_resume(cfg, corpus, out_dir, index)) return std::move(*done);
  }
  SessionOutcome outcome;
  try {
    const SessionResult result = simulate_session(cfg.simulation, corpus, index);
    const SessionAnnotation& ann = result.annotation;
    if (cfg.write_audio) {
      SeededRng render_rng = derive_session_rng(cfg.simulation.base_seed, index, 1);
      const RenderResult audio =
          render_session(result.timeline, corpus, cfg.augmentation, noise, render_rng);
      write_wav(out_dir / (ann.session_id + ".wav"), audio.samples, corpus.sample_rate());
    }
    write_rttm(ann, out_dir / (ann.session_id + ".rttm"), cfg.merge_speaker_runs);
    write_ctm(ann, out_dir / (ann.session_id + ".ctm"));
    write_vad_labels(ann, cfg.vad_frame_length, out_dir / (ann.session_id + ".vad.txt"));
    ManifestEntry entry = entry_for(ann, cfg.write_audio);
    {
      std::ofstream side(out_dir / (ann.session_id + ".json"), std::ios::trunc);
      side << manifest_line(entry) << '\n';
      if (!side) throw Error("cannot write session sidecar");
    }
    outcome.stats = stats_row(ann.session_id, ann.segments, ann.actual_length);
    outcome.entry = std::move(entry);
  } catch (const std::exception& e) {
    outcome.error = e.what();
  }
  return outcome;
}

std::string describe(const RatioSummary& s) {
  return s.variance ? fmt::format("mean {:.4f}  var {:.4f}", s.mean, *s.variance)
                    : fmt::format("mean {:.4f}  var undefined", s.mean);
}

}  // namespace

RunReport simulate_dataset(const RunConfig& cfg, const SourceCorpus& corpus, const fs::path& out_dir,
                           unsigned workers, bool resume, const NoiseBank* noise) {
  cfg.validate();
  if (static_cast<std::size_t>(cfg.simulation.num_speakers) > corpus.speaker_count()) {
    throw ConfigError(fmt::format("num_speakers: {} exceeds the {} speakers in the corpus",
                                  cfg.simulation.num_speakers, corpus.speaker_count()));
  }
  if (cfg.augmentation.noise_manifest && noise == nullptr) {
    throw ConfigError("augmentation.noise_manifest: set but no noise bank was loaded");
  }
  fs::create_directories(out_dir);
  const auto start = std::chrono::steady_clock::now();
  const auto n = static_cast<std::size_t>(cfg.simulation.num_sessions);
  std::vector<SessionOutcome> outcomes(n);
  std::atomic<std::size_t> next{0};
  {
    const unsigned pool = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    std::vector<std::jthread> threads;
    threads.reserve(pool);
    for (unsigned t = 0; t < pool; ++t) {
      threads.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          outcomes[i] = run_one(cfg, corpus, out_dir, i, resume, noise);
        }
      });
    }
  }

  RunReport report;
  report.sessions_requested = n;
  report.silence_target = cfg.simulation.silence;
  report.overlap_target = cfg.simulation.overlap;
  std::vector<ManifestEntry> entries;
  std::vector<SessionStatsRow> rows;
  for (std::size_t i = 0; i < n; ++i) {
    auto& o = outcomes[i];
    if (!o.entry) {
      report.failures.push_back({i, o.error});
      continue;
    }
    report.total_audio_seconds += o.entry->actual_length;
    if (o.resumed) ++report.sessions_resumed;
    entries.push_back(std::move(*o.entry));
    rows.push_back(std::move(*o.stats));
  }
  report.sessions_generated = entries.size();
  write_manifest(entries, out_dir / "manifest.jsonl");
  report.observed = aggregate_stats(std::move(rows));
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

RunReport run_simulate(const fs::path& config_path, const fs::path& out_dir, unsigned workers,
                       bool resume) {
  const RunConfig cfg = load_run_config(config_path);
  const SourceCorpus corpus = load_corpus(cfg.corpus_manifest, cfg.corpus);
  std::optional<NoiseBank> noise;
  if (cfg.augmentation.noise_manifest) {
    noise = NoiseBank::load(*cfg.augmentation.noise_manifest, corpus.sample_rate());
  }
  return simulate_dataset(cfg, corpus, out_dir, workers, resume, noise ? &*noise : nullptr);
}

std::string format_run_report(const RunReport& r) {
  std::string s;
  s += fmt::format("sessions: {} generated ({} resumed), {} failed, {} requested\n",
                   r.sessions_generated, r.sessions_resumed, r.failures.size(),
                   r.sessions_requested);
  s += fmt::format("audio: {:.1f} s total, wall time {:.2f} s\n", r.total_audio_seconds,
                   r.wall_seconds);
  s += fmt::format("silence ratio  observed {}   target mean {:.4f}  var {:.4f}\n",
                   describe(r.observed.silence), r.silence_target.mean, r.silence_target.variance);
  s += fmt::format("overlap ratio  observed {}   target mean {:.4f}  var {:.4f}\n",
                   describe(r.observed.overlap), r.overlap_target.mean, r.overlap_target.variance);
  for (const auto& f : r.failures) {
    s += fmt::format("failed {}: {}\n", session_id_for(f.session_index), f.message);
  }
  return s;
}

AnalyzeResult run_analyze(const fs::path& input, const fs::path& output_csv) {
  AnalyzeResult result;
  std::vector<SessionStatsRow> rows;

  auto add_rttm_sessions = [&](const fs::path& path) {
    std::vector<RttmSegment> parsed;
    try {
      parsed = parse_rttm(path);
    } catch (const Error& e) {
      result.warnings.push_back(e.what());
      return;
    }
    if (parsed.empty()) {
      result.warnings.push_back(fmt::format("{}: no SPEAKER lines", path.string()));
      return;
    }
    std::map<std::string, std::vector<Segment>> by_file;
    for (auto& p : parsed) by_file[p.file_id].push_back(std::move(p.segment));
    for (const auto& [id, segs] : by_file) {
      double length = 0.0;
      for (const auto& s : segs) length = std::max(length, s.end());
      if (!(length > 0.0)) {
        result.warnings.push_back(fmt::format("{}: session {} has zero length", path.string(), id));
        continue;
      }
      rows.push_back(stats_row(id, segs, length));
    }
  };

  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input)) {
      if (entry.is_regular_file() && entry.path().extension() == ".rttm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) add_rttm_sessions(f);
  } else if (input.extension() == ".jsonl" || input.extension() == ".json") {
    for (const auto& e : read_manifest(input)) {
      const fs::path rttm = input.parent_path() / e.rttm_path;
      try {
        rows.push_back(stats_row(e.session_id, segments_of(parse_rttm(rttm)), e.actual_length));
      } catch (const Error& err) {
        result.warnings.push_back(fmt::format("{}: {}", e.session_id, err.what()));
      }
    }
  } else if (fs::exists(input)) {
    add_rttm_sessions(input);
  } else {
    throw Error(fmt::format("{}: no such file or directory", input.string()));
  }

  if (rows.empty()) throw Error(fmt::format("{}: no parseable RTTM sessions", input.string()));
  write_stats_csv(rows, output_csv);
  result.stats = aggregate_stats(std::move(rows));
  fs::path summary = output_csv;
  summary.replace_filename(output_csv.stem().string() + "_summary.csv");
  write_summary_csv(result.stats, summary);
  return result;
}

std::string format_simulator_params(const DatasetStats& stats) {
  auto var = [](const RatioSummary& s) {
    return s.variance ? fmt::format("{:.6g}", *s.variance)
                      : std::string("undefined (need at least 2 sessions)");
  };
  std::string s;
  s += fmt::format("silence_mean: {:.6g}\n", stats.silence.mean);
  s += fmt::format("silence_var: {}\n", var(stats.silence));
  s += fmt::format("overlap_mean: {:.6g}\n", stats.overlap.mean);
  s += fmt::format("overlap_var: {}\n", var(stats.overlap));
  for (const auto* r : {&stats.silence, &stats.overlap}) {
    if (!r->notice.empty() && r->variance) s += fmt::format("note: {}\n", r->notice);
  }
  return s;
}

CompareResult run_compare(const fs::path& real_csv, const fs::path& simulated_csv, std::size_t bins,
                          const fs::path& out_dir) {
  if (bins < 1) throw Error("bins must be >= 1");
  const DatasetStats real = aggregate_stats(read_stats_csv(real_csv));
  const DatasetStats sim = aggregate_stats(read_stats_csv(simulated_csv));
  fs::create_directories(out_dir);
  CompareResult result;
  result.rows = compare_stats(real, sim, real_csv.stem().string(), simulated_csv.stem().string());
  result.table_csv = out_dir / "comparison.csv";
  write_comparison_csv(result.rows, result.table_csv);

  auto column = [](const DatasetStats& s, bool silence) {
    std::vector<double> v;
    for (const auto& r : s.sessions) v.push_back(silence ? r.silence_ratio : r.overlap_ratio);
    return v;
  };
  result.silence_histogram_csv = out_dir / "silence_histogram.csv";
  result.overlap_histogram_csv = out_dir / "overlap_histogram.csv";
  write_histogram_csv(result.silence_histogram_csv, bins, "real", column(real, true), "simulated",
                      column(sim, true));
  write_histogram_csv(result.overlap_histogram_csv, bins, "real", column(real, false), "simulated",
                      column(sim, false));
  return result;
}

}  // namespace convsim
