#include "convsim/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "convsim/error.hpp"
#include "convsim/wav.hpp"

namespace convsim {

using nlohmann::json;
namespace fs = std::filesystem;

SourceCorpus::SourceCorpus(int sample_rate, std::vector<SpeakerGroup> speakers,
                           std::vector<fs::path> audio_paths,
                           std::vector<std::shared_ptr<const std::vector<std::int16_t>>> audio,
                           std::size_t dropped_words)
    : sample_rate_(sample_rate),
      speakers_(std::move(speakers)),
      audio_paths_(std::move(audio_paths)),
      audio_(std::move(audio)),
      dropped_words_(dropped_words) {
  std::sort(speakers_.begin(), speakers_.end(),
            [](const SpeakerGroup& a, const SpeakerGroup& b) { return a.speaker_id < b.speaker_id; });
}

std::size_t SourceCorpus::utterance_count() const {
  return std::accumulate(speakers_.begin(), speakers_.end(), std::size_t{0},
                         [](std::size_t n, const SpeakerGroup& g) { return n + g.utterances.size(); });
}

std::size_t SourceCorpus::word_count() const {
  std::size_t n = 0;
  for (const auto& g : speakers_) {
    for (const auto& u : g.utterances) n += u.words.size();
  }
  return n;
}

std::size_t SourceCorpus::speaker_index(const std::string& speaker_id) const {
  auto it = std::lower_bound(
      speakers_.begin(), speakers_.end(), speaker_id,
      [](const SpeakerGroup& g, const std::string& id) { return g.speaker_id < id; });
  if (it == speakers_.end() || it->speaker_id != speaker_id) {
    throw Error(fmt::format("unknown speaker '{}'", speaker_id));
  }
  return static_cast<std::size_t>(it - speakers_.begin());
}

std::span<const std::int16_t> SourceCorpus::word_samples(const SourceWord& word) const {
  const auto& buf = *audio_.at(word.audio_ref);
  if (word.first_sample < 0 || word.num_samples < 0 ||
      static_cast<std::size_t>(word.first_sample + word.num_samples) > buf.size()) {
    throw Error(fmt::format("word '{}' lies outside {}", word.text,
                            audio_paths_.at(word.audio_ref).string()));
  }
  return std::span<const std::int16_t>(buf).subspan(static_cast<std::size_t>(word.first_sample),
                                                    static_cast<std::size_t>(word.num_samples));
}

namespace {

template <typename T>
T require_field(const json& record, const char* key, const std::string& where) {
  auto it = record.find(key);
  if (it == record.end()) throw Error(fmt::format("{}: missing field '{}'", where, key));
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(fmt::format("{}: field '{}' has the wrong type", where, key));
  }
}

}  // namespace

SourceCorpus load_corpus(const fs::path& manifest_path, const CorpusOptions& options) {
  if (!(options.min_word_duration >= 0.0) ||
      !(options.max_word_duration >= options.min_word_duration)) {
    throw Error(fmt::format("invalid word duration window [{}, {}]", options.min_word_duration,
                            options.max_word_duration));
  }
  std::ifstream in(manifest_path);
  if (!in) throw Error(fmt::format("{}: cannot open corpus manifest", manifest_path.string()));
  const fs::path base = manifest_path.parent_path();

  int sample_rate = 0;
  std::map<std::string, SpeakerGroup> groups;
  std::map<fs::path, std::size_t> audio_index;
  std::vector<fs::path> audio_paths;
  std::vector<std::shared_ptr<const std::vector<std::int16_t>>> audio;
  std::size_t dropped = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = fmt::format("{}:{}", manifest_path.string(), line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(fmt::format("{}: unparsable record ({})", where, e.what()));
    }
    if (!record.is_object()) throw Error(fmt::format("{}: record is not an object", where));

    const auto speaker = require_field<std::string>(record, "speaker", where);
    if (speaker.empty()) throw Error(fmt::format("{}: empty speaker id", where));
    fs::path audio_path = require_field<std::string>(record, "audio_filepath", where);
    if (audio_path.is_relative()) audio_path = base / audio_path;
    audio_path = audio_path.lexically_normal();

    std::size_t ref;
    if (auto it = audio_index.find(audio_path); it != audio_index.end()) {
      ref = it->second;
    } else {
      PcmAudio pcm;
      try {
        pcm = read_wav(audio_path);
      } catch (const Error& e) {
        throw Error(fmt::format("{}: {}", where, e.what()));
      }
      if (sample_rate == 0) sample_rate = pcm.sample_rate;
      if (pcm.sample_rate != sample_rate) {
        throw Error(fmt::format("{}: sample rate {} Hz differs from corpus rate {} Hz", where,
                                pcm.sample_rate, sample_rate));
      }
      ref = audio_paths.size();
      audio_index.emplace(audio_path, ref);
      audio_paths.push_back(audio_path);
      audio.push_back(std::make_shared<const std::vector<std::int16_t>>(std::move(pcm.samples)));
    }
    const auto audio_len = static_cast<std::int64_t>(audio[ref]->size());

    auto words_it = record.find("words");
    if (words_it == record.end() || !words_it->is_array()) {
      throw Error(fmt::format("{}: missing alignment array 'words'", where));
    }
    SourceUtterance utt{speaker, ref, {}};
    double prev_end = 0.0;
    for (std::size_t w = 0; w < words_it->size(); ++w) {
      const json& entry = (*words_it)[w];
      const std::string word_where = fmt::format("{} word {}", where, w);
      if (!entry.is_object()) throw Error(fmt::format("{}: alignment is not an object", word_where));
      SourceWord word;
      word.text = require_field<std::string>(entry, "word", word_where);
      word.onset = require_field<double>(entry, "start", word_where);
      word.duration = require_field<double>(entry, "duration", word_where);
      word.audio_ref = ref;
      if (!(word.duration > 0.0) || !(word.onset >= 0.0)) {
        throw Error(fmt::format("{}: need onset >= 0 and duration > 0 (onset={}, duration={})",
                                word_where, word.onset, word.duration));
      }
      if (word.onset < prev_end - 1e-9) {
        throw Error(fmt::format("{}: word overlaps or precedes the previous word", word_where));
      }
      prev_end = word.onset + word.duration;
      word.first_sample = std::llround(word.onset * sample_rate);
      const std::int64_t end_sample = std::llround((word.onset + word.duration) * sample_rate);
      if (end_sample > audio_len) {
        throw Error(fmt::format("{}: word ends at {:.6f} s beyond audio length {:.6f} s",
                                word_where, word.onset + word.duration,
                                static_cast<double>(audio_len) / sample_rate));
      }
      word.num_samples = std::llround(word.duration * sample_rate);
      if (word.first_sample + word.num_samples > audio_len) word.num_samples = audio_len - word.first_sample;
      if (word.duration < options.min_word_duration || word.duration > options.max_word_duration ||
          word.num_samples <= 0) {
        ++dropped;
        continue;
      }
      word.onset = static_cast<double>(word.first_sample) / sample_rate;
      word.duration = static_cast<double>(word.num_samples) / sample_rate;
      utt.words.push_back(std::move(word));
    }
    auto& group = groups[speaker];
    group.speaker_id = speaker;
    if (!utt.words.empty()) group.utterances.push_back(std::move(utt));
  }

  std::vector<SpeakerGroup> speakers;
  for (auto& [id, group] : groups) {
    if (group.utterances.empty()) {
      throw Error(fmt::format("{}: speaker '{}' has no usable words after filtering to [{}, {}] s",
                              manifest_path.string(), id, options.min_word_duration,
                              options.max_word_duration));
    }
    speakers.push_back(std::move(group));
  }
  if (speakers.empty()) throw Error(fmt::format("{}: corpus is empty", manifest_path.string()));
  return SourceCorpus(sample_rate, std::move(speakers), std::move(audio_paths), std::move(audio),
                      dropped);
}

std::vector<std::string> sample_speakers(const SourceCorpus& corpus, std::size_t count,
                                         SeededRng& rng) {
  const auto& groups = corpus.speakers();
  if (count > groups.size()) {
    throw Error(fmt::format("requested {} speakers but the corpus has only {}", count,
                            groups.size()));
  }
  std::vector<std::size_t> order(groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::string> chosen;
  chosen.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(order.size() - i));
    std::swap(order[i], order[j]);
    chosen.push_back(groups[order[i]].speaker_id);
  }
  return chosen;
}

std::vector<std::int16_t> read_word_audio(const SourceCorpus& corpus, const SourceWord& word) {
  const auto view = corpus.word_samples(word);
  return {view.begin(), view.end()};
}

}  // namespace convsim
