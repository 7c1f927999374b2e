#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "convsim/annotate.hpp"
#include "convsim/corpus.hpp"
#include "convsim/rng.hpp"
#include "convsim/sampler.hpp"

namespace convsim {

// Which means the silence/overlap selector measures its discrepancies
// against. Gap sizes always target the per-session sampled means.
enum class DiscrepancyReference {
  kSession,     // per-session sampled means (X_mu_s, X_mu_o)
  kConfigured,  // dataset-level configured means (mu_s, mu_o)
};

struct SimulationConfig {
  double session_length = 600.0;  // L_S, seconds
  std::int64_t num_sessions = 1;  // N_S
  std::int64_t num_speakers = 2;  // N_spk
  double turn_prob = 0.875;       // p_turn
  RatioMoments overlap{0.1, 0.008};
  RatioMoments silence{0.2, 0.1};
  NegBinomialParams sentence{2.0, 0.2};  // (k_w, p_w), mean 8 words
  double dominance_var = 0.11;            // sigma^2_d
  double min_volume = 1.0;                // per-speaker linear gain range
  double max_volume = 1.0;
  std::uint64_t base_seed = 0;
  DiscrepancyReference discrepancy_reference = DiscrepancyReference::kSession;
  // Silence and overlap gaps are rounded to this grid (seconds). The default
  // keeps every boundary exactly representable in three-decimal annotations
  // when the sample rate is a multiple of 1 kHz.
  double gap_resolution = 0.001;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct SessionParams {
  std::vector<std::string> speaker_ids;
  std::vector<std::size_t> speaker_groups;  // index into SourceCorpus::speakers()
  std::vector<double> dominance;            // sums to 1
  std::vector<double> gains;                // linear, per speaker
  double silence_mean = 0.0;                // X_mu_s
  double overlap_mean = 0.0;                // X_mu_o
  SeededRng rng{0};
};

struct SentencePlan {
  std::size_t speaker = 0;  // index into SessionParams::speaker_ids
  std::string speaker_id;
  std::vector<SourceWord> words;
  std::int64_t length_samples = 0;
  double duration = 0.0;
};

struct PlacedWord {
  SourceWord source;
  std::int64_t onset_sample = 0;  // in the session
  double onset = 0.0;
};

struct PlacedSentence {
  std::size_t speaker = 0;
  std::string speaker_id;
  std::int64_t onset_sample = 0;
  std::int64_t length_samples = 0;
  double onset = 0.0;
  double duration = 0.0;
  std::vector<PlacedWord> words;
  double preceding_silence = 0.0;      // s_dt
  double overlap_with_previous = 0.0;  // o_dt after clamping

  std::int64_t end_sample() const { return onset_sample + length_samples; }
  double end() const { return onset + duration; }
};

/// Running accumulators of the synthesis loop.
///
/// `speech_union` counts time covered by at least one speaker, so
/// running_length == speech_union + silence_total always holds. A staged
/// sentence (see stage_sentence) is already included in speech_union and
/// running_length but not yet in `placed`.
struct SessionState {
  int sample_rate = 16000;
  std::int64_t gap_quantum = 16;  // samples

  double running_length = 0.0;  // L~_S
  double silence_total = 0.0;   // L~_sil
  double speech_union = 0.0;    // L~_spch
  double overlap_total = 0.0;   // O~_spch
  std::optional<std::size_t> current_speaker;
  std::vector<PlacedSentence> placed;

  std::int64_t silence_samples = 0;
  std::int64_t union_samples = 0;
  std::int64_t overlap_samples = 0;
  std::int64_t staged_samples = 0;
  std::int64_t end_sample = 0;        // end of the placed timeline
  std::int64_t prior_end_sample = 0;  // timeline end before the last placement

  SessionState() = default;
  SessionState(int sample_rate, double gap_resolution);

  // Recomputes the seconds-valued accumulators from the sample counters.
  void refresh();
};

struct Discrepancy {
  double silence = 0.0;  // Delta S
  double overlap = 0.0;  // Delta O
};

struct GapEstimate {
  double seconds = 0.0;
  bool saturated = false;  // closed form was negative and clamped to 0
};

// Fraction of the shorter neighbour a single overlap may cover.
inline constexpr double kMaxOverlapFraction = 0.9;

std::string session_id_for(std::uint64_t session_index);

SessionParams sample_session_params(const SimulationConfig& cfg, const SourceCorpus& corpus,
                                    std::uint64_t session_index);

// The first call of a session (current == nullopt) draws from the full
// dominance distribution. Afterwards the turn moves with probability
// `turn_prob` to one of the other speakers, weighted by dominance.
std::size_t next_speaker(const SessionParams& params, std::optional<std::size_t> current,
                         double turn_prob, SeededRng& rng);

// Picks `word_count` consecutive words of one speaker, starting at a uniform
// position in a uniform utterance and continuing into the following
// utterances (cyclically) when the run is longer than the remainder.
SentencePlan build_sentence(const SourceCorpus& corpus, const SessionParams& params,
                            std::int64_t word_count, std::size_t speaker, SeededRng& rng);

// Adds the sentence's speech to the accumulators ahead of gap selection.
void stage_sentence(SessionState& state, const SentencePlan& plan);

Discrepancy discrepancies(const SessionState& state, double silence_reference,
                          double overlap_reference);

// Silence m such that (silence_total + m) / (running_length + m) == target.
GapEstimate required_silence(const SessionState& state, double target);
// Overlap m such that (overlap_total + m) / (speech_union - m) == target.
GapEstimate required_overlap(const SessionState& state, double target);

// Places a staged sentence after `silence` seconds of silence, or overlapping
// the previous sentence by `overlap` seconds (clamped to
// kMaxOverlapFraction of the previous sentence's exclusive tail and of the
// new sentence). At most one of the two may be nonzero.
const PlacedSentence& add_sentence(SessionState& state, const SentencePlan& plan,
                                   double silence, double overlap);

struct SessionTimeline {
  std::string session_id;
  std::vector<PlacedSentence> placed;
  double session_length = 0.0;  // actual length, >= configured
  std::int64_t length_samples = 0;
  int sample_rate = 0;
  std::vector<std::string> speaker_ids;
  std::vector<double> gains;
};

struct SessionResult {
  SessionParams params;
  SessionTimeline timeline;
  SessionAnnotation annotation;
};

// Called after every placement; used by tests to check loop invariants.
using StateObserver = std::function<void(const SessionState&)>;

SessionResult simulate_session(const SimulationConfig& cfg, const SourceCorpus& corpus,
                               std::uint64_t session_index,
                               const StateObserver& observer = {});

SessionAnnotation annotate_timeline(const SessionTimeline& timeline, const SessionState& state,
                                    const SessionParams& params, std::uint64_t seed,
                                    std::uint64_t session_index);

}  // namespace convsim
