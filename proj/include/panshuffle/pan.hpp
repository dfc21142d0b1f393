#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "panshuffle/distinct.hpp"
#include "panshuffle/random.hpp"
#include "panshuffle/shuffle.hpp"
#include "panshuffle/uniformity.hpp"

namespace panshuffle {

/// ceil(20 ((e^eps+1)/(e^eps-1))^2 ln(2/delta)): noise scale under which
/// the noisy-counter sum is (eps, delta)-pan-private.
int64_t zsum_lambda(double eps, double delta);

struct ZsumResult {
  int64_t raw = 0;       // true sum + Bin(2 lambda, 1/2); error in [0, 2 lambda]
  double debiased = 0.0; // raw - lambda; symmetric error
};

/// Online noisy counter for binary sums: the state starts at Bin(lambda,
/// 1/2), counts stream bits deterministically, and a second Bin(lambda,
/// 1/2) draw is added on release. The state is exposable at any step
/// without perturbing the run.
class ZsumCounter {
 public:
  ZsumCounter(int64_t lambda, RandomSource& rng);

  void push(int bit);
  int64_t state() const { return state_; }
  size_t elements_seen() const { return seen_; }
  ZsumResult finish(RandomSource& rng) const;

 private:
  int64_t lambda_;
  int64_t state_;
  size_t seen_ = 0;
};

ZsumResult zsum_run(const std::vector<int>& stream, int64_t lambda,
                    RandomSource& rng);

/// Runs the counter with one intrusion at time t (0 <= t <= stream
/// length); returns the observed state snapshot and the final result.
/// Throws when t is past the end of the stream.
std::pair<int64_t, ZsumResult> zsum_run_with_intrusion(
    const std::vector<int>& stream, int64_t lambda, size_t t,
    RandomSource& rng);

struct PanHistogramResult {
  std::vector<int64_t> raw;      // per bin: true count + Bin(2 lambda, 1/2)
  std::vector<double> debiased;  // raw - lambda
};

/// One noisy counter per domain element; changing one stream element moves
/// at most two bins' true counts.
class PanHistogram {
 public:
  PanHistogram(uint32_t k, int64_t lambda, RandomSource& rng);

  void push(uint32_t x);
  const std::vector<int64_t>& state() const { return counters_; }
  size_t elements_seen() const { return seen_; }
  PanHistogramResult finish(RandomSource& rng) const;

 private:
  uint32_t k_;
  int64_t lambda_;
  std::vector<int64_t> counters_;
  size_t seen_ = 0;
};

PanHistogramResult pan_histogram(const std::vector<uint32_t>& stream,
                                 uint32_t k, int64_t lambda,
                                 RandomSource& rng);

/// Shuffle-to-pan transformation for distinct elements: the internal state
/// is a growing message pool seeded with n/3 dummy randomizer outputs on
/// element 1, fed one randomizer output per stream element, padded with
/// another n/3 dummies at the end, and analyzed. The protocol must be
/// instantiated for n = 3 * stream length. The pool is stored unordered
/// and shuffled lazily at analysis time.
class PanShuffleDeRun {
 public:
  PanShuffleDeRun(DeProtocol protocol, size_t stream_len, RandomSource& rng);

  void push(uint32_t x);
  /// Canonical (sorted-multiset) snapshot of the message pool.
  Transcript state() const;
  size_t elements_seen() const { return seen_; }
  double finish();

 private:
  void append(uint32_t x);

  DeProtocol protocol_;
  size_t stream_len_;
  RandomSource rng_;
  RandomSource dummy_rng_;
  std::vector<LabeledMessage> pool_;
  size_t seen_ = 0;
};

double pan_from_shuffle_de(const std::vector<uint32_t>& stream,
                           const DeProtocol& protocol, RandomSource& rng);

/// Shuffle-to-pan transformation for uniformity testing: dummies are
/// uniform samples, and only the first min(Bin(n, 2/9), n/3) stream
/// elements enter as real data; the rest are replaced by uniform draws.
/// Dummy draws come from a distinct child stream of the supplied source.
class PanShuffleUtRun {
 public:
  PanShuffleUtRun(UtProtocol protocol, size_t stream_len, RandomSource& rng);

  void push(uint32_t x);
  Transcript state() const;
  size_t elements_seen() const { return seen_; }
  /// Number of stream positions treated as real data, after clamping.
  int64_t real_count() const { return real_count_; }
  Decision finish();

 private:
  void append(uint32_t x);
  uint32_t draw_dummy();

  UtProtocol protocol_;
  size_t stream_len_;
  RandomSource rng_;
  RandomSource dummy_rng_;
  int64_t real_count_ = 0;
  std::vector<LabeledMessage> pool_;
  size_t seen_ = 0;
};

Decision pan_from_shuffle_ut(const std::vector<uint32_t>& stream,
                             const UtProtocol& protocol, RandomSource& rng);

}  // namespace panshuffle
