#include "convsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "convsim/error.hpp"

namespace convsim {

using nlohmann::json;
namespace fs = std::filesystem;

void RunConfig::validate() const {
  simulation.validate();
  augmentation.validate();
  if (corpus_manifest.empty()) throw ConfigError("corpus_manifest: required");
  if (!(corpus.min_word_duration >= 0.0) ||
      !(corpus.max_word_duration >= corpus.min_word_duration)) {
    throw ConfigError(fmt::format("min_word_dur/max_word_dur: invalid window [{}, {}]",
                                  corpus.min_word_duration, corpus.max_word_duration));
  }
  if (!(vad_frame_length > 0.0)) {
    throw ConfigError(fmt::format("vad_frame_length: must be > 0, got {}", vad_frame_length));
  }
}

namespace {

class Reader {
 public:
  Reader(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(fmt::format("{}: expected an object", where("")));
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}: wrong type", where(key)));
    }
  }

  void get_range(const char* key, std::pair<double, double>& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      throw ConfigError(fmt::format("{}: expected [lo, hi]", where(key)));
    }
    out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(fmt::format("{}: unknown key", where(it.key())));
    }
  }

  std::string where(const std::string& key) const {
    if (prefix_.empty()) return key.empty() ? std::string("config") : key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config: not valid JSON ({})", e.what()));
  }
  RunConfig cfg;
  SimulationConfig& sim = cfg.simulation;
  Reader r(root, "");

  std::string corpus_manifest;
  r.get("corpus_manifest", corpus_manifest);
  if (!corpus_manifest.empty()) cfg.corpus_manifest = resolve(base_dir, corpus_manifest);
  r.get("session_length", sim.session_length);
  r.get("num_sessions", sim.num_sessions);
  r.get("num_speakers", sim.num_speakers);
  r.get("turn_prob", sim.turn_prob);
  r.get("overlap_mean", sim.overlap.mean);
  r.get("overlap_var", sim.overlap.variance);
  r.get("silence_mean", sim.silence.mean);
  r.get("silence_var", sim.silence.variance);
  r.get("sentence_k_w", sim.sentence.dispersion);
  r.get("sentence_p_w", sim.sentence.success_prob);
  r.get("dominance_var", sim.dominance_var);
  r.get("min_volume", sim.min_volume);
  r.get("max_volume", sim.max_volume);
  r.get("seed", sim.base_seed);
  r.get("gap_resolution", sim.gap_resolution);
  std::string reference = "session";
  r.get("discrepancy_reference", reference);
  if (reference == "session") {
    sim.discrepancy_reference = DiscrepancyReference::kSession;
  } else if (reference == "configured") {
    sim.discrepancy_reference = DiscrepancyReference::kConfigured;
  } else {
    throw ConfigError(fmt::format(
        "discrepancy_reference: expected \"session\" or \"configured\", got \"{}\"", reference));
  }
  r.get("min_word_dur", cfg.corpus.min_word_duration);
  r.get("max_word_dur", cfg.corpus.max_word_duration);
  r.get("vad_frame_length", cfg.vad_frame_length);
  r.get("write_audio", cfg.write_audio);
  r.get("merge_speaker_runs", cfg.merge_speaker_runs);

  if (const json* aug = r.child("augmentation")) {
    Reader a(*aug, "augmentation");
    a.get_range("gain_perturb_db", cfg.augmentation.gain_perturb_db);
    a.get_range("snr_db", cfg.augmentation.snr_db);
    a.get("normalize_on_clip", cfg.augmentation.normalize_on_clip);
    std::string noise;
    a.get("noise_manifest", noise);
    if (!noise.empty()) cfg.augmentation.noise_manifest = resolve(base_dir, noise);
    a.reject_unknown();
  }
  r.reject_unknown();
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open config", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

}  // namespace convsim
