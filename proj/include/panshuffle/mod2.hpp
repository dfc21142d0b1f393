#pragma once

#include <cstdint>
#include <vector>

#include "panshuffle/audit.hpp"
#include "panshuffle/random.hpp"

namespace panshuffle {

/// One user's additive parity shares: m one-bit messages whose XOR equals
/// the user's input bit.
using ParityShares = std::vector<uint8_t>;

/// Number of one-bit shares each user sends:
/// ceil(sigma) + ceil(log2(max(n, 2))) + 1. Always at least 3.
int share_count(double sigma, int64_t n);

/// Additive sharing of one bit: m-1 uniform bits plus one bit forcing the
/// XOR to the input. Any strict subset of the shares is i.i.d. Ber(1/2).
ParityShares mod2_randomize(int bit, double sigma, int64_t n,
                            RandomSource& rng);

/// XOR (sum mod 2) of a pooled bit multiset. Empty pool decodes to 0.
int mod2_analyze(const std::vector<uint8_t>& all_shares);

/// Monte Carlo estimate of the total variation distance between the
/// shuffled share pool of the honest inputs h and of the collapsed vector
/// w = (XOR(h), 0, ..., 0). Requires at least two honest users. Returns a
/// tv estimate with confidence half-width.
AuditReport mod2_security_probe(const std::vector<int>& honest_bits,
                                double sigma, int64_t trials,
                                RandomSource& rng);

}  // namespace panshuffle
