#pragma once

#include <cstdint>
#include <optional>

#include "convsim/rng.hpp"

namespace convsim {

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
};

// Target mean and variance of a per-session ratio (silence or overlap).
// Feasible iff 0 < mean < 1 and 0 < variance <= mean * (1 - mean).
struct RatioMoments {
  double mean = 0.0;
  double variance = 0.0;

  bool feasible() const;
};

// Gamma distribution in shape/scale form. Scale is in seconds.
struct GammaParams {
  double shape = 1.0;
  double scale = 1.0;
};

// Negative binomial over the number of failures X before `dispersion`
// successes, each with probability `success_prob`:
//   P(X = x) = C(x + k - 1, k - 1) p^k (1 - p)^x.
// Non-integer dispersion is allowed.
struct NegBinomialParams {
  double dispersion = 1.0;    // k_w
  double success_prob = 0.5;  // p_w

  bool valid() const;
  double mean() const;
  double variance() const;
};

/// Method-of-moments Beta fit.
///
///   alpha = mean^2 (1 - mean) / variance - mean
///   beta  = mean (1 - mean)^2 / variance - (1 - mean)
///
/// Throws convsim::Error when the moments are outside the feasible region.
/// The boundary variance == mean (1 - mean) is accepted by the feasibility
/// check but yields alpha = beta = 0 and is rejected as well.
BetaParams beta_from_moments(const RatioMoments& moments);

double beta_mean(const BetaParams& p);
double beta_variance(const BetaParams& p);

// Draw from Beta(alpha, beta); the result lies strictly in (0, 1).
double sample_session_mean(const BetaParams& p, SeededRng& rng);

// Raw negative-binomial draw (support includes 0), via Gamma-Poisson mixture.
std::int64_t sample_negative_binomial(const NegBinomialParams& p, SeededRng& rng);

// Sentence length in words: a negative-binomial draw clamped to >= 1.
std::int64_t sample_sentence_length(const NegBinomialParams& p, SeededRng& rng);

// Gamma parameters whose mean is `target_mean` and variance is `variance`.
// Returns nullopt for a degenerate gap (target_mean <= 0). Throws on
// non-positive variance.
std::optional<GammaParams> gamma_params_for_gap(double target_mean, double variance);

double sample_gap(const GammaParams& p, SeededRng& rng);

// Building blocks, exposed for tests and benchmarks.
double sample_standard_normal(SeededRng& rng);
double sample_gamma(double shape, double scale, SeededRng& rng);
std::int64_t sample_poisson(double lambda, SeededRng& rng);

}  // namespace convsim
