#pragma once

#include <cstdint>
#include <vector>

#include "panshuffle/audit.hpp"
#include "panshuffle/random.hpp"
#include "panshuffle/shuffle.hpp"

namespace panshuffle {

/// Parameters of the robustly shuffle private distinct-elements protocol.
struct DeParams {
  uint32_t k = 0;
  int64_t n = 0;
  double eps = 1.0;
  double delta = 0.1;

  void validate() const;

  /// Per-user flip probability for absent labels:
  /// (1 - (1 - e^{-eps})^{1/n}) / 2, always in (0, 1/2).
  double p_prime() const;
  /// Security parameter sigma = log2((e^eps + 1) / delta).
  double sigma() const;
  /// One-bit shares emitted per label per user.
  int shares_per_label() const;
};

/// Distinct-elements shuffle protocol: per label, draw a bit (fair when the
/// label matches the datum, Ber(p') otherwise) and emit its parity shares
/// as labeled one-bit messages. The analyzer XORs each label pool and
/// de-biases the sum of parities.
struct DeProtocol {
  DeParams params;

  std::vector<LabeledMessage> randomize(uint32_t x, RandomSource& rng) const;
  double analyze(const Transcript& t) const;
};

std::vector<LabeledMessage> de_randomize(uint32_t x, const DeParams& params,
                                         RandomSource& rng);

/// Raw de-biased estimate z = (2 C e^eps - k) / (e^eps - 1). Unbiased for
/// the distinct count; may be non-integral or fall outside [0, k].
double de_analyze(const Transcript& t, const DeParams& params);

/// Consumer-facing value: round(z) clamped to [0, k].
int64_t de_estimate_clamped(double z, uint32_t k);

/// High-probability error radius e^eps/(e^eps - 1) * sqrt(2 k ln(2/beta)).
double de_error_bound(uint32_t k, double eps, double beta);

/// Privacy degradation under a gamma fraction of honest users.
struct EpsGammaBound {
  double eps_exact;       // ln(1 / (1 - (1 - e^{-eps})^gamma))
  double bound_general;   // eps + ln(1/gamma), valid for all eps
  double bound_small;     // 2 eps^gamma / gamma, valid for eps <= ln 2
};

EpsGammaBound eps_gamma_bound(double eps, double gamma);

/// Parity of gamma*n i.i.d. Ber(p') bits where p' is derived from p:
/// returns (1 - (1 - 2p)^gamma) / 2. Requires p in [0, 1/2], gamma in (0,1].
double parity_bias(double p, double gamma);

/// Carter-Wegman 2-universal hash x -> ((a x + b) mod p) mod k', mapping
/// [k] to [k'] (both 1-based).
class UniversalHash {
 public:
  UniversalHash(uint64_t a, uint64_t b, uint64_t prime_modulus,
                uint32_t range);

  uint64_t multiplier() const { return a_; }
  uint64_t offset() const { return b_; }
  uint64_t modulus() const { return p_; }
  uint32_t range() const { return range_; }

  uint32_t apply(uint64_t x) const;

 private:
  uint64_t a_, b_, p_;
  uint32_t range_;
};

/// Uniform draw from the hash family with the modulus fixed to the
/// smallest prime exceeding max(k, 2^31).
UniversalHash sample_hash(uint64_t k, uint32_t k_prime, RandomSource& rng);

bool is_prime_u64(uint64_t x);
uint64_t next_prime_above(uint64_t x);

/// Result of the hashed large-universe protocol.
struct HdeResult {
  double estimate = 0.0;
  uint32_t hashed_range = 0;
  bool fell_back = false;  // k below the hashed range; plain protocol used
};

/// Hash the domain down to ceil(c * n^{4/3}) and run the distinct-elements
/// protocol there. Falls back to the plain protocol when k is already below
/// the hashed range.
HdeResult hde_run(const std::vector<uint32_t>& inputs, uint32_t k, double c,
                  double eps, double delta, RandomSource& rng);

/// Error radius of the hashed protocol:
/// 2 n^{2/3} / (c beta) + e^eps/(e^eps-1) * sqrt(2 (n^{4/3}+1) ln(4/beta)).
double hde_error_bound(int64_t n, double c, double eps, double beta);

/// Exact pooled ones-count law of parity shares from users whose parity
/// bits are Ber(qs[i]), each split into m one-bit shares. Index c of the
/// returned vector is P[pool has c ones].
std::vector<double> exact_parity_pool_pmf(const std::vector<double>& qs,
                                          int m);

/// Exact distribution of the canonical transcript encoding for an honest
/// pool of distinct-elements randomizer runs on the given inputs (labels
/// are independent given the inputs, so the joint is a product).
EmpiricalDist de_exact_transcript_dist(const std::vector<uint32_t>& inputs,
                                       const DeParams& params);

/// Robust binary-sum protocol: each user reports the true bit and one
/// Ber(p) noise bit with p = 1 - (10/n) ((e^eps+1)/(e^eps-1))^2 ln(2/delta).
double zsum_shuffle_p(int64_t n, double eps, double delta);

struct ZsumShuffleProtocol {
  int64_t n = 0;
  double eps = 1.0;
  double delta = 0.1;

  void validate() const;  // enforces n >= 20 ((e^eps+1)/(e^eps-1))^2 ln(2/delta)

  std::vector<LabeledMessage> randomize(uint32_t bit, RandomSource& rng) const;
  /// De-biased estimate of the bit sum: (count of ones) - n * p.
  double analyze(const Transcript& t) const;
};

}  // namespace panshuffle
