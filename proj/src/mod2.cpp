#include "panshuffle/mod2.hpp"

#include <cmath>
#include <stdexcept>

namespace panshuffle {

int share_count(double sigma, int64_t n) {
  if (!(sigma > 0.0)) throw std::invalid_argument("share_count: sigma <= 0");
  if (n < 1) throw std::invalid_argument("share_count: n < 1");
  const double n_eff = static_cast<double>(std::max<int64_t>(n, 2));
  return static_cast<int>(std::ceil(sigma)) +
         static_cast<int>(std::ceil(std::log2(n_eff))) + 1;
}

ParityShares mod2_randomize(int bit, double sigma, int64_t n,
                            RandomSource& rng) {
  if (bit != 0 && bit != 1)
    throw std::invalid_argument("mod2_randomize: bit must be 0 or 1");
  const int m = share_count(sigma, n);
  ParityShares shares(static_cast<size_t>(m));
  int parity = 0;
  for (int i = 0; i + 1 < m; ++i) {
    shares[static_cast<size_t>(i)] = static_cast<uint8_t>(rng.next_bit());
    parity ^= shares[static_cast<size_t>(i)];
  }
  shares[static_cast<size_t>(m - 1)] = static_cast<uint8_t>(bit ^ parity);
  return shares;
}

int mod2_analyze(const std::vector<uint8_t>& all_shares) {
  int parity = 0;
  for (uint8_t b : all_shares) parity ^= (b & 1);
  return parity;
}

namespace {

// Pool of shuffled one-bit shares is equivalent to its ones count.
Outcome pool_ones_outcome(const std::vector<int>& bits, double sigma,
                          int64_t n, RandomSource& rng) {
  int64_t ones = 0;
  for (int b : bits) {
    auto shares = mod2_randomize(b, sigma, n, rng);
    for (uint8_t s : shares) ones += s;
  }
  return Outcome{ones};
}

}  // namespace

AuditReport mod2_security_probe(const std::vector<int>& honest_bits,
                                double sigma, int64_t trials,
                                RandomSource& rng) {
  const int64_t n = static_cast<int64_t>(honest_bits.size());
  if (n < 2)
    throw std::invalid_argument(
        "mod2_security_probe: need at least 2 honest users");
  int parity = 0;
  for (int b : honest_bits) {
    if (b != 0 && b != 1)
      throw std::invalid_argument("mod2_security_probe: bits must be 0/1");
    parity ^= b;
  }
  std::vector<int> collapsed(honest_bits.size(), 0);
  collapsed[0] = parity;

  RandomSource rng_p = rng.fork();
  RandomSource rng_q = rng.fork();
  EmpiricalDist dist_h = empirical_dist(
      [&](RandomSource& r) { return pool_ones_outcome(honest_bits, sigma, n, r); },
      trials, rng_p);
  EmpiricalDist dist_w = empirical_dist(
      [&](RandomSource& r) { return pool_ones_outcome(collapsed, sigma, n, r); },
      trials, rng_q);
  return tv_report(dist_h, dist_w);
}

}  // namespace panshuffle
