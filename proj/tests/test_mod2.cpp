#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <vector>

#include "panshuffle/mod2.hpp"

using namespace panshuffle;

TEST_CASE("share_count examples") {
  CHECK(share_count(1.0, 2) == 3);
  CHECK(share_count(10.0, 1024) == 21);
  CHECK(share_count(1.0, 1) == 3);  // log term floors at log2(2)
  CHECK_THROWS_AS(share_count(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(share_count(1.0, 0), std::invalid_argument);
}

TEST_CASE("share_count monotone in sigma") {
  for (double s = 1.0; s < 20.0; s += 1.0)
    CHECK(share_count(s + 1.0, 64) >= share_count(s, 64));
}

TEST_CASE("shares always XOR to the input bit") {
  RandomSource rng(1);
  for (int bit : {0, 1}) {
    for (int i = 0; i < 2000; ++i) {
      ParityShares s = mod2_randomize(bit, 6.0, 32, rng);
      CHECK(static_cast<int>(s.size()) == share_count(6.0, 32));
      int parity = 0;
      for (uint8_t b : s) parity ^= b;
      CHECK(parity == bit);
    }
  }
  CHECK_THROWS_AS(mod2_randomize(2, 6.0, 32, rng), std::invalid_argument);
}

TEST_CASE("single-share marginal is a fair coin") {
  RandomSource rng(2);
  const int trials = 100000;
  int64_t ones = 0;
  for (int i = 0; i < trials; ++i)
    ones += mod2_randomize(1, 4.0, 8, rng)[0];
  const double mean = static_cast<double>(ones) / trials;
  CHECK(std::fabs(mean - 0.5) < 0.005);
}

TEST_CASE("strict share subsets are uniform (exhaustive, m <= 4)") {
  // With m-1 free bits the share vector is uniform over the parity class;
  // dropping any one coordinate leaves a uniform distribution on the rest.
  // share_count never goes below 3.
  for (int m = 3; m <= 4; ++m) {
    const double sigma = m - 2.5;  // share_count(sigma, 1) == m
    REQUIRE(share_count(sigma, 1) == m);
    for (int bit : {0, 1}) {
      // Enumerate the 2^{m-1} equally likely share vectors by replaying
      // every possible random-bit pattern through a counting source.
      std::vector<int64_t> subset_counts(
          static_cast<size_t>(m) << (m - 1), 0);
      for (uint32_t pattern = 0; pattern < (1u << (m - 1)); ++pattern) {
        std::vector<uint8_t> shares(static_cast<size_t>(m));
        int parity = 0;
        for (int i = 0; i < m - 1; ++i) {
          shares[static_cast<size_t>(i)] = (pattern >> i) & 1;
          parity ^= shares[static_cast<size_t>(i)];
        }
        shares[static_cast<size_t>(m - 1)] =
            static_cast<uint8_t>(bit ^ parity);
        // For each left-out coordinate, record the value pattern of the
        // remaining m-1 shares.
        for (int skip = 0; skip < m; ++skip) {
          uint32_t value = 0;
          int pos = 0;
          for (int i = 0; i < m; ++i) {
            if (i == skip) continue;
            value |= static_cast<uint32_t>(shares[static_cast<size_t>(i)])
                     << pos;
            ++pos;
          }
          ++subset_counts[static_cast<size_t>(skip) << (m - 1) | value];
        }
      }
      // Every (skip, value) pattern must appear exactly once among the
      // 2^{m-1} share vectors: uniform marginal on any m-1 coordinates.
      for (int64_t c : subset_counts) CHECK(c == 1);
    }
  }
}

TEST_CASE("mod2_analyze basics") {
  CHECK(mod2_analyze({}) == 0);
  CHECK(mod2_analyze({1, 1, 0}) == 0);
  CHECK(mod2_analyze({1, 0, 0, 1, 1}) == 1);
}

TEST_CASE("honest execution decodes the XOR of inputs, exhaustively") {
  RandomSource rng(3);
  for (int n = 1; n <= 4; ++n) {
    for (double sigma : {1.0, 2.5, 4.0}) {
      for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        int want = 0;
        std::vector<uint8_t> pool;
        for (int i = 0; i < n; ++i) {
          const int bit = (mask >> i) & 1;
          want ^= bit;
          ParityShares s = mod2_randomize(bit, sigma, n, rng);
          pool.insert(pool.end(), s.begin(), s.end());
        }
        CHECK(mod2_analyze(pool) == want);
      }
    }
  }
}

TEST_CASE("security probe: collapsed vector equals input when h=(1,0)") {
  RandomSource rng(4);
  AuditReport r = mod2_security_probe({1, 0}, 8.0, 20000, rng);
  CHECK(r.tv_hat <= r.tv_half_width);
}

TEST_CASE("security probe: two-user pool within the 2^-sigma bound") {
  RandomSource rng(5);
  AuditReport r = mod2_security_probe({1, 1}, 8.0, 100000, rng);
  CHECK(r.tv_hat <= std::pow(2.0, -8.0) + r.tv_half_width);
}

TEST_CASE("security probe estimate non-increasing in sigma") {
  RandomSource rng(6);
  AuditReport lo = mod2_security_probe({1, 1}, 1.0, 60000, rng);
  AuditReport hi = mod2_security_probe({1, 1}, 12.0, 60000, rng);
  CHECK(hi.tv_hat <= lo.tv_hat + lo.tv_half_width + hi.tv_half_width);
}

TEST_CASE("security probe requires two honest users") {
  RandomSource rng(7);
  CHECK_THROWS_AS(mod2_security_probe({1}, 4.0, 100, rng),
                  std::invalid_argument);
}
