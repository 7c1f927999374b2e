#include "convsim/sampler.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "convsim/error.hpp"

namespace convsim {

bool RatioMoments::feasible() const {
  return std::isfinite(mean) && std::isfinite(variance) && mean > 0.0 && mean < 1.0 &&
         variance > 0.0 && variance <= mean * (1.0 - mean);
}

bool NegBinomialParams::valid() const {
  return std::isfinite(dispersion) && dispersion > 0.0 && success_prob > 0.0 &&
         success_prob <= 1.0;
}

double NegBinomialParams::mean() const {
  return dispersion * (1.0 - success_prob) / success_prob;
}

double NegBinomialParams::variance() const {
  return dispersion * (1.0 - success_prob) / (success_prob * success_prob);
}

BetaParams beta_from_moments(const RatioMoments& m) {
  if (!m.feasible()) {
    throw Error(fmt::format(
        "infeasible ratio moments (mean={}, variance={}): require 0 < mean < 1 and "
        "0 < variance <= mean*(1-mean)",
        m.mean, m.variance));
  }
  const double mu = m.mean;
  const double q = 1.0 - mu;
  BetaParams p{mu * mu * q / m.variance - mu, mu * q * q / m.variance - q};
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) {
    throw Error(fmt::format(
        "ratio moments (mean={}, variance={}) sit on the feasibility boundary; "
        "Beta parameters would not be positive",
        m.mean, m.variance));
  }
  return p;
}

double beta_mean(const BetaParams& p) { return p.alpha / (p.alpha + p.beta); }

double beta_variance(const BetaParams& p) {
  const double s = p.alpha + p.beta;
  return p.alpha * p.beta / (s * s * (s + 1.0));
}

double sample_standard_normal(SeededRng& rng) {
  // Box-Muller, cosine branch only, so every call consumes exactly two draws.
  const double u1 = rng.uniform_open();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// Marsaglia-Tsang squeeze for shape >= 1, unit scale.
double gamma_large_shape(double shape, SeededRng& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = sample_standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace

double sample_gamma(double shape, double scale, SeededRng& rng) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw Error(fmt::format("invalid gamma parameters (shape={}, scale={})", shape, scale));
  }
  if (shape >= 1.0) return gamma_large_shape(shape, rng) * scale;
  // Boost: G(k) = G(k + 1) * U^(1/k), evaluated in log space.
  const double g = gamma_large_shape(shape + 1.0, rng);
  const double log_u = std::log(rng.uniform_open());
  return std::exp(std::log(g) + log_u / shape) * scale;
}

std::int64_t sample_poisson(double lambda, SeededRng& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(fmt::format("invalid poisson rate {}", lambda));
  }
  if (lambda == 0.0) return 0;
  if (lambda < 30.0) {
    // Multiplication method.
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double prod = rng.uniform_open();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform_open();
    }
    return k;
  }
  // Hormann's transformed rejection with squeeze (PTRS).
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform_open();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    const double kd = static_cast<double>(k);
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + kd * loglam - std::lgamma(kd + 1.0)) {
      return k;
    }
  }
}

double sample_session_mean(const BetaParams& p, SeededRng& rng) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) {
    throw Error(fmt::format("invalid beta parameters (alpha={}, beta={})", p.alpha, p.beta));
  }
  for (;;) {
    const double x = sample_gamma(p.alpha, 1.0, rng);
    const double y = sample_gamma(p.beta, 1.0, rng);
    const double r = x / (x + y);
    if (r > 0.0 && r < 1.0) return r;
  }
}

std::int64_t sample_negative_binomial(const NegBinomialParams& p, SeededRng& rng) {
  if (!p.valid()) {
    throw Error(fmt::format("invalid negative binomial parameters (k_w={}, p_w={})",
                            p.dispersion, p.success_prob));
  }
  if (p.success_prob == 1.0) return 0;
  const double rate =
      sample_gamma(p.dispersion, (1.0 - p.success_prob) / p.success_prob, rng);
  return sample_poisson(rate, rng);
}

std::int64_t sample_sentence_length(const NegBinomialParams& p, SeededRng& rng) {
  const std::int64_t n = sample_negative_binomial(p, rng);
  return n < 1 ? 1 : n;
}

std::optional<GammaParams> gamma_params_for_gap(double target_mean, double variance) {
  if (!(variance > 0.0)) {
    throw Error(fmt::format("gap variance must be positive, got {}", variance));
  }
  if (!(target_mean > 0.0)) return std::nullopt;
  return GammaParams{target_mean * target_mean / variance, variance / target_mean};
}

double sample_gap(const GammaParams& p, SeededRng& rng) {
  return sample_gamma(p.shape, p.scale, rng);
}

}  // namespace convsim
