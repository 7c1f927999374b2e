#pragma once

#include <array>
#include <cstdint>

namespace convsim {

// SplitMix64 step. Used for seed expansion and stream derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Deterministic pseudo-random stream (xoshiro256**).
///
/// Streams are derived from `(base_seed, session_index, stream)` through
/// SplitMix64, so every session owns an independent generator that needs no
/// shared state. The generator and every sampler built on top of it are
/// specified here bit-for-bit; output does not depend on the standard
/// library's distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 bits of precision.
  double uniform();
  // Uniform double in (0, 1).
  double uniform_open();
  // Uniform double in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  const std::array<std::uint64_t, 4>& state() const { return state_; }

  friend bool operator==(const SeededRng&, const SeededRng&) = default;

 private:
  std::array<std::uint64_t, 4> state_;
};

// Independent stream for one session. `stream` separates consumers inside a
// session (0 = timeline, 1 = rendering) so adding augmentation never perturbs
// the timeline.
SeededRng derive_session_rng(std::uint64_t base_seed, std::uint64_t session_index,
                             std::uint64_t stream = 0);

}  // namespace convsim
