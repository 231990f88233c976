#pragma once

#include <cstdint>
#include <limits>
#include <optional>

namespace orbitforge {

// xoshiro256** seeded from (master_seed, stream_id).
//
// The 256-bit state is filled by four successive SplitMix64 outputs whose
// initial state is mix64(master_seed ^ mix64(stream_id)), where mix64 is the
// SplitMix64 output finalizer. Frame i draws from stream i, so a frame's
// randomness does not depend on which worker renders it.
class DeterministicRng {
 public:
  using result_type = std::uint64_t;

  DeterministicRng(std::uint64_t master_seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next(); }

  std::uint64_t next();
  // 53-bit uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n) by rejection; n must be > 0.
  std::uint64_t bounded(std::uint64_t n);
  // Standard normal via Box-Muller; the second variate is cached.
  double normal();

 private:
  std::uint64_t s_[4];
  std::optional<double> spare_;
};

std::uint64_t mix64(std::uint64_t z);

// Stream ids reserved outside the per-frame pose range.
inline constexpr std::uint64_t kAugmentationStreamBase = 0x8000000000000000ULL;
inline constexpr std::uint64_t kFinalCapStream = 0x4000000000000001ULL;
inline constexpr std::uint64_t kSplitStream = 0x4000000000000002ULL;

}  // namespace orbitforge
