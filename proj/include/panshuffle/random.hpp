#pragma once

#include <cstdint>
#include <stdexcept>

namespace panshuffle {

/// Seedable deterministic randomness source (xoshiro256** seeded via
/// splitmix64). Every protocol operation takes one of these explicitly;
/// there is no hidden global generator, so any run is replayable from its
/// seed. A single instance must not be shared across concurrent callers;
/// derive children with distinct stream ids instead.
class RandomSource {
 public:
  explicit RandomSource(uint64_t seed, uint64_t stream = 0);

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }

  /// Next raw 64-bit word.
  uint64_t next_u64();

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_double();

  /// Uniform integer in [0, n), unbiased (rejection on the top range).
  uint64_t next_below(uint64_t n);

  /// Single fair bit, served from a buffered word.
  int next_bit();

  /// Independent child source keyed by id. Children of the same parent
  /// with distinct ids produce statistically independent sequences; the
  /// parent state is not consumed, so child(i) is the same source every
  /// time. Use for named public-randomness streams and per-trial seeding.
  RandomSource child(uint64_t stream_id) const;

  /// Independent source seeded from the parent's current state; advances
  /// the parent, so successive forks differ. Use inside loops that spawn
  /// a sub-computation per call.
  RandomSource fork();

 private:
  uint64_t seed_;
  uint64_t stream_;
  uint64_t s_[4];
  uint64_t bit_buf_ = 0;
  int bits_left_ = 0;
};

}  // namespace panshuffle
