#include "convsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "convsim/error.hpp"

namespace convsim {

void SimulationConfig::validate() const {
  auto fail = [](const char* field, const std::string& why) {
    throw ConfigError(fmt::format("{}: {}", field, why));
  };
  if (!(session_length > 0.0) || !std::isfinite(session_length)) {
    fail("session_length", fmt::format("must be > 0, got {}", session_length));
  }
  if (num_sessions < 1) fail("num_sessions", fmt::format("must be >= 1, got {}", num_sessions));
  if (num_speakers < 1) fail("num_speakers", fmt::format("must be >= 1, got {}", num_speakers));
  if (!(turn_prob >= 0.0 && turn_prob <= 1.0)) {
    fail("turn_prob", fmt::format("must lie in [0, 1], got {}", turn_prob));
  }
  auto check_moments = [&](const char* field, const RatioMoments& m) {
    try {
      beta_from_moments(m);
    } catch (const Error& e) {
      fail(field, e.what());
    }
  };
  check_moments("overlap_mean/overlap_var", overlap);
  check_moments("silence_mean/silence_var", silence);
  if (!sentence.valid()) {
    fail("sentence_k_w/sentence_p_w",
         fmt::format("need k_w > 0 and 0 < p_w <= 1, got ({}, {})", sentence.dispersion,
                     sentence.success_prob));
  }
  if (!(dominance_var >= 0.0)) fail("dominance_var", fmt::format("must be >= 0, got {}", dominance_var));
  if (!(min_volume >= 0.0) || !(max_volume >= min_volume)) {
    fail("min_volume/max_volume",
         fmt::format("need 0 <= min <= max, got [{}, {}]", min_volume, max_volume));
  }
  if (!(gap_resolution > 0.0)) {
    fail("gap_resolution", fmt::format("must be > 0, got {}", gap_resolution));
  }
}

SessionState::SessionState(int rate, double gap_resolution)
    : sample_rate(rate),
      gap_quantum(std::max<std::int64_t>(1, std::llround(gap_resolution * rate))) {}

void SessionState::refresh() {
  const double sr = sample_rate;
  silence_total = static_cast<double>(silence_samples) / sr;
  speech_union = static_cast<double>(union_samples) / sr;
  overlap_total = static_cast<double>(overlap_samples) / sr;
  running_length = static_cast<double>(union_samples + silence_samples) / sr;
}

std::string session_id_for(std::uint64_t session_index) {
  return fmt::format("session_{:05d}", session_index);
}

namespace {

// Index drawn proportionally to `weights`, skipping `exclude`.
std::size_t draw_weighted(const std::vector<double>& weights, std::optional<std::size_t> exclude,
                          SeededRng& rng) {
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (i != exclude) total += weights[i];
  }
  if (!(total > 0.0)) {
    // All remaining weight was clipped away; fall back to uniform.
    const std::size_t n = weights.size() - (exclude ? 1 : 0);
    std::size_t pick = static_cast<std::size_t>(rng.uniform_index(n));
    if (exclude && pick >= *exclude) ++pick;
    return pick;
  }
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (i == exclude || weights[i] <= 0.0) continue;
    cumulative += weights[i];
    last = i;
    if (target < cumulative) return i;
  }
  return last;
}

}  // namespace

SessionParams sample_session_params(const SimulationConfig& cfg, const SourceCorpus& corpus,
                                    std::uint64_t session_index) {
  SessionParams params;
  params.rng = derive_session_rng(cfg.base_seed, session_index, 0);
  SeededRng& rng = params.rng;
  const auto n = static_cast<std::size_t>(cfg.num_speakers);

  params.speaker_ids = sample_speakers(corpus, n, rng);
  for (const auto& id : params.speaker_ids) params.speaker_groups.push_back(corpus.speaker_index(id));

  const double sd = std::sqrt(cfg.dominance_var);
  const double base = 1.0 / static_cast<double>(n);
  params.dominance.resize(n);
  double total = 0.0;
  for (auto& w : params.dominance) {
    w = std::max(0.0, base + sd * sample_standard_normal(rng));
    total += w;
  }
  if (total > 0.0) {
    for (auto& w : params.dominance) w /= total;
  } else {
    std::fill(params.dominance.begin(), params.dominance.end(), base);
  }

  params.gains.resize(n);
  for (auto& g : params.gains) g = rng.uniform(cfg.min_volume, cfg.max_volume);

  params.silence_mean = sample_session_mean(beta_from_moments(cfg.silence), rng);
  params.overlap_mean = sample_session_mean(beta_from_moments(cfg.overlap), rng);
  return params;
}

std::size_t next_speaker(const SessionParams& params, std::optional<std::size_t> current,
                         double turn_prob, SeededRng& rng) {
  if (!current) return draw_weighted(params.dominance, std::nullopt, rng);
  if (params.dominance.size() < 2) return *current;
  if (rng.uniform() < turn_prob) return draw_weighted(params.dominance, current, rng);
  return *current;
}

SentencePlan build_sentence(const SourceCorpus& corpus, const SessionParams& params,
                            std::int64_t word_count, std::size_t speaker, SeededRng& rng) {
  if (word_count < 1) throw std::logic_error("build_sentence: word_count must be >= 1");
  const SpeakerGroup& group = corpus.speaker(params.speaker_groups.at(speaker));
  if (group.utterances.empty()) {
    throw Error(fmt::format("speaker '{}' has no words", group.speaker_id));
  }
  SentencePlan plan;
  plan.speaker = speaker;
  plan.speaker_id = params.speaker_ids.at(speaker);
  auto utt = static_cast<std::size_t>(rng.uniform_index(group.utterances.size()));
  auto pos = static_cast<std::size_t>(rng.uniform_index(group.utterances[utt].words.size()));
  plan.words.reserve(static_cast<std::size_t>(word_count));
  for (std::int64_t i = 0; i < word_count; ++i) {
    const SourceWord& w = group.utterances[utt].words[pos];
    plan.words.push_back(w);
    plan.length_samples += w.num_samples;
    if (++pos == group.utterances[utt].words.size()) {
      pos = 0;
      utt = (utt + 1) % group.utterances.size();
    }
  }
  plan.duration = static_cast<double>(plan.length_samples) / corpus.sample_rate();
  return plan;
}

void stage_sentence(SessionState& state, const SentencePlan& plan) {
  if (state.staged_samples != 0) throw std::logic_error("stage_sentence: a sentence is already staged");
  state.staged_samples = plan.length_samples;
  state.union_samples += plan.length_samples;
  state.refresh();
}

Discrepancy discrepancies(const SessionState& state, double silence_reference,
                          double overlap_reference) {
  if (!(state.running_length > 0.0) || !(state.speech_union > 0.0)) {
    throw std::logic_error("discrepancies: need positive running length and speech time");
  }
  return {state.silence_total / state.running_length - silence_reference,
          state.overlap_total / state.speech_union - overlap_reference};
}

GapEstimate required_silence(const SessionState& state, double target) {
  const double m = (state.silence_total - target * state.running_length) / (target - 1.0);
  if (m < 0.0) return {0.0, true};
  return {m, false};
}

GapEstimate required_overlap(const SessionState& state, double target) {
  const double m = (target * state.speech_union - state.overlap_total) / (target + 1.0);
  if (m < 0.0) return {0.0, true};
  return {m, false};
}

const PlacedSentence& add_sentence(SessionState& state, const SentencePlan& plan, double silence,
                                   double overlap) {
  if (state.staged_samples != plan.length_samples || plan.length_samples <= 0) {
    throw std::logic_error("add_sentence: sentence was not staged");
  }
  if (!(silence >= 0.0) || !(overlap >= 0.0)) {
    throw std::logic_error("add_sentence: gaps must be non-negative");
  }
  if (silence > 0.0 && overlap > 0.0) {
    throw std::logic_error("add_sentence: silence and overlap are mutually exclusive");
  }
  if (overlap > 0.0 && state.placed.empty()) {
    throw std::logic_error("add_sentence: nothing to overlap with");
  }

  const double sr = state.sample_rate;
  const std::int64_t q = state.gap_quantum;
  auto quantize = [&](double seconds) -> std::int64_t { return std::llround(seconds * sr / q) * q; };
  auto cap = [&](std::int64_t samples) {
    const auto limit = static_cast<std::int64_t>(std::floor(kMaxOverlapFraction * samples));
    return limit / q * q;
  };

  const std::int64_t silence_samples = quantize(silence);
  std::int64_t overlap_samples = 0;
  if (overlap > 0.0) {
    const PlacedSentence& prev = state.placed.back();
    // Only the part of the previous sentence that nothing else covers may be
    // overlapped; that keeps concurrency at most two.
    const std::int64_t tail =
        prev.end_sample() - std::max(state.prior_end_sample, prev.onset_sample);
    overlap_samples = std::min({quantize(overlap), cap(tail), cap(prev.length_samples),
                                cap(plan.length_samples)});
    overlap_samples = std::max<std::int64_t>(0, overlap_samples);
  }

  PlacedSentence placed;
  placed.speaker = plan.speaker;
  placed.speaker_id = plan.speaker_id;
  placed.onset_sample = state.end_sample + silence_samples - overlap_samples;
  placed.length_samples = plan.length_samples;
  placed.onset = static_cast<double>(placed.onset_sample) / sr;
  placed.duration = static_cast<double>(placed.length_samples) / sr;
  placed.preceding_silence = static_cast<double>(silence_samples) / sr;
  placed.overlap_with_previous = static_cast<double>(overlap_samples) / sr;
  std::int64_t cursor = placed.onset_sample;
  placed.words.reserve(plan.words.size());
  for (const auto& w : plan.words) {
    placed.words.push_back({w, cursor, static_cast<double>(cursor) / sr});
    cursor += w.num_samples;
  }

  state.silence_samples += silence_samples;
  state.overlap_samples += overlap_samples;
  state.union_samples -= overlap_samples;
  state.staged_samples = 0;
  state.prior_end_sample = state.end_sample;
  state.end_sample = placed.end_sample();
  state.current_speaker = plan.speaker;
  state.refresh();
  state.placed.push_back(std::move(placed));
  return state.placed.back();
}

SessionAnnotation annotate_timeline(const SessionTimeline& timeline, const SessionState& state,
                                    const SessionParams& params, std::uint64_t seed,
                                    std::uint64_t session_index) {
  SessionAnnotation ann;
  ann.session_id = timeline.session_id;
  ann.actual_length = timeline.session_length;
  ann.segments.reserve(timeline.placed.size());
  for (const auto& s : timeline.placed) {
    ann.segments.push_back({s.speaker_id, s.onset, s.duration});
    for (const auto& w : s.words) {
      ann.words.push_back({s.speaker_id, w.source.text, w.onset, w.source.duration});
    }
  }
  std::stable_sort(ann.words.begin(), ann.words.end(),
                   [](const WordAlignment& a, const WordAlignment& b) { return a.onset < b.onset; });
  ann.silence_total = state.silence_total;
  ann.speech_union = state.speech_union;
  ann.overlap_total = state.overlap_total;
  ann.silence_ratio = state.running_length > 0.0 ? state.silence_total / state.running_length : 0.0;
  ann.overlap_ratio = state.speech_union > 0.0 ? state.overlap_total / state.speech_union : 0.0;
  ann.silence_target = params.silence_mean;
  ann.overlap_target = params.overlap_mean;
  ann.seed = seed;
  ann.session_index = session_index;
  return ann;
}

SessionResult simulate_session(const SimulationConfig& cfg, const SourceCorpus& corpus,
                               std::uint64_t session_index, const StateObserver& observer) {
  cfg.validate();
  SessionResult result;
  result.params = sample_session_params(cfg, corpus, session_index);
  SessionParams& params = result.params;
  SeededRng rng = params.rng;

  const double silence_ref = cfg.discrepancy_reference == DiscrepancyReference::kSession
                                 ? params.silence_mean
                                 : cfg.silence.mean;
  const double overlap_ref = cfg.discrepancy_reference == DiscrepancyReference::kSession
                                 ? params.overlap_mean
                                 : cfg.overlap.mean;

  SessionState state(corpus.sample_rate(), cfg.gap_resolution);
  while (state.running_length < cfg.session_length) {
    const std::size_t speaker = next_speaker(params, state.current_speaker, cfg.turn_prob, rng);
    const bool turn_changed = state.current_speaker && *state.current_speaker != speaker;
    const std::int64_t words = sample_sentence_length(cfg.sentence, rng);
    const SentencePlan plan = build_sentence(corpus, params, words, speaker, rng);
    stage_sentence(state, plan);

    const Discrepancy d = discrepancies(state, silence_ref, overlap_ref);
    // Overlap is only meaningful between two different speakers; the first
    // sentence and same-speaker continuations always take the silence branch.
    const bool overlap_branch = d.silence > d.overlap && turn_changed;
    if (!overlap_branch) {
      const GapEstimate need = required_silence(state, params.silence_mean);
      double gap = 0.0;
      if (auto gp = gamma_params_for_gap(need.seconds, cfg.silence.variance)) {
        gap = sample_gap(*gp, rng);
      }
      add_sentence(state, plan, gap, 0.0);
    } else {
      const GapEstimate need = required_overlap(state, params.overlap_mean);
      double gap = 0.0;
      if (auto gp = gamma_params_for_gap(need.seconds, cfg.overlap.variance)) {
        gap = sample_gap(*gp, rng);
      }
      add_sentence(state, plan, 0.0, gap);
    }
    if (observer) observer(state);
  }

  SessionTimeline& tl = result.timeline;
  tl.session_id = session_id_for(session_index);
  tl.sample_rate = corpus.sample_rate();
  tl.length_samples = state.end_sample;
  tl.session_length = state.running_length;
  tl.speaker_ids = params.speaker_ids;
  tl.gains = params.gains;
  tl.placed = state.placed;
  result.annotation = annotate_timeline(tl, state, params, cfg.base_seed, session_index);
  return result;
}

}  // namespace convsim
