#pragma once

#include <cstdint>
#include <limits>

namespace twostate {

/// SplitMix64: a Weyl counter (step 0x9E3779B97F4A7C15) pushed through a
/// fixed 64-bit mixing permutation. Output depends only on integer arithmetic,
/// so raw draws are identical on every platform.
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// uniform() maps the top 53 bits to [0, 1). normal() uses the cosine branch
/// of Box-Muller on two uniforms (one normal per two draws).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  std::uint64_t next();

  double uniform();
  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();

 private:
  std::uint64_t state_;
};

/// The SplitMix64 output permutation applied to a single word.
std::uint64_t mix64(std::uint64_t z);

/// Seed for replica `replica` of an experiment with base seed `base`:
/// mix64(base ^ mix64(replica + 0x9E3779B97F4A7C15)).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t replica);

}  // namespace twostate
