#include "panshuffle/random.hpp"

namespace panshuffle {

namespace {

inline uint64_t splitmix64(uint64_t& x) {
  uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RandomSource::RandomSource(uint64_t seed, uint64_t stream)
    : seed_(seed), stream_(stream) {
  // Seed material mixes the seed and the stream id so that distinct
  // streams decorrelate even for adjacent seeds.
  uint64_t x = seed ^ (0x6a09e667f3bcc909ULL + stream * 0x100000001b3ULL);
  for (auto& w : s_) w = splitmix64(x);
  // xoshiro must not start in the all-zero state.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9e3779b97f4a7c15ULL;
}

uint64_t RandomSource::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RandomSource::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t RandomSource::next_below(uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  // Rejection sampling over a power-of-two superset keeps the draw unbiased.
  const uint64_t rem = (~uint64_t{0}) % n;
  const uint64_t limit = ~uint64_t{0} - rem;
  uint64_t v;
  do {
    v = next_u64();
  } while (v > limit);
  return v % n;
}

int RandomSource::next_bit() {
  if (bits_left_ == 0) {
    bit_buf_ = next_u64();
    bits_left_ = 64;
  }
  int b = static_cast<int>(bit_buf_ & 1);
  bit_buf_ >>= 1;
  --bits_left_;
  return b;
}

RandomSource RandomSource::child(uint64_t stream_id) const {
  uint64_t mixed = stream_ * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
  mixed ^= stream_id + 0x452821e638d01377ULL + (mixed << 6) + (mixed >> 2);
  return RandomSource(seed_, mixed);
}

RandomSource RandomSource::fork() {
  const uint64_t a = next_u64();
  const uint64_t b = next_u64();
  return RandomSource(seed_ ^ a, b);
}

}  // namespace panshuffle
