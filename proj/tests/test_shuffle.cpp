#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "panshuffle/audit.hpp"
#include "panshuffle/distinct.hpp"
#include "panshuffle/shuffle.hpp"
#include "panshuffle/stats.hpp"

using namespace panshuffle;

TEST_CASE("shuffle of two singletons is a fair coin over orders") {
  RandomSource rng(1);
  const LabeledMessage a{1, 0}, b{2, 1};
  int64_t a_first = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    Transcript t = shuffle({{a}, {b}}, rng);
    REQUIRE(t.messages.size() == 2);
    if (t.messages[0] == a) ++a_first;
  }
  std::vector<int64_t> obs{a_first, trials - a_first};
  std::vector<double> expected{0.5, 0.5};
  CHECK(chi2_gof_pvalue(obs, expected) > 1e-3);
}

TEST_CASE("shuffle of nothing is empty") {
  RandomSource rng(2);
  Transcript t = shuffle({}, rng);
  CHECK(t.messages.empty());
  CHECK(t.participant_count == 0);
}

TEST_CASE("shuffle preserves the multiset exactly") {
  RandomSource rng(3);
  std::vector<LabeledMessage> v = {{1, 0}, {2, 1}, {3, 0}};
  for (int i = 0; i < 200; ++i) {
    Transcript t = shuffle({v}, rng);
    auto sorted = t.sorted_messages();
    auto ref = v;
    std::sort(ref.begin(), ref.end());
    CHECK(sorted == ref);
  }
}

TEST_CASE("run_protocol with identity randomizer and count-ones analyzer") {
  BasicProtocol<int> proto;
  proto.randomizer = [](uint32_t x, RandomSource&) {
    return std::vector<LabeledMessage>{{1, static_cast<uint8_t>(x)}};
  };
  proto.analyzer = [](const Transcript& t) {
    int ones = 0;
    for (const auto& m : t.messages) ones += m.payload;
    return ones;
  };
  RandomSource rng(4);
  CHECK(run_protocol(proto, {1, 0, 1}, rng) == 2);
  CHECK_THROWS_AS(run_protocol(proto, {}, rng), std::invalid_argument);
}

TEST_CASE("protocol output distribution is invariant to input order") {
  // P(x) vs P(pi(x)) for the distinct-elements protocol at tiny scale:
  // TV over 1e5 trials stays within sampling noise (true TV is 0).
  DeProtocol proto{DeParams{2, 4, 1.0, 0.2}};
  const std::vector<uint32_t> x{1, 1, 2, 2};
  const std::vector<uint32_t> pi_x{2, 1, 2, 1};
  const int64_t trials = 100000;
  RandomSource root(5);
  RandomSource r1 = root.child(1), r2 = root.child(2);
  EmpiricalDist d1 = empirical_dist(
      [&](RandomSource& r) {
        return Outcome{
            static_cast<int64_t>(std::llround(run_protocol(proto, x, r) * 1000.0))};
      },
      trials, r1);
  EmpiricalDist d2 = empirical_dist(
      [&](RandomSource& r) {
        return Outcome{static_cast<int64_t>(
            std::llround(run_protocol(proto, pi_x, r) * 1000.0))};
      },
      trials, r2);
  AuditReport tv = tv_report(d1, d2);
  CHECK(tv.tv_hat <= 0.02 + tv.tv_half_width);
}

TEST_CASE("analyzer is permutation invariant for shipped analyzers") {
  DeProtocol proto{DeParams{3, 5, 1.0, 0.1}};
  RandomSource rng(6);
  std::vector<LabeledMessage> pool;
  for (uint32_t x : {1u, 2u, 2u, 3u, 1u}) {
    auto v = proto.randomize(x, rng);
    pool.insert(pool.end(), v.begin(), v.end());
  }
  Transcript t1{pool, 5};
  shuffle_pool(t1.messages, rng);
  Transcript t2{pool, 5};
  shuffle_pool(t2.messages, rng);
  CHECK(proto.analyze(t1) == proto.analyze(t2));
}

TEST_CASE("run_with_dropout keeps only honest users' messages") {
  DeProtocol proto{DeParams{2, 8, 1.0, 0.1}};
  const std::vector<uint32_t> inputs(8, 1);
  std::vector<bool> mask(8, false);
  for (int i = 0; i < 4; ++i) mask[i] = true;
  RandomSource rng(7);
  Transcript t = run_with_dropout(proto, inputs, mask, rng);
  // Each honest user sends exactly k * shares_per_label messages.
  const size_t per_user =
      2 * static_cast<size_t>(proto.params.shares_per_label());
  CHECK(t.messages.size() == 4 * per_user);
  CHECK(t.participant_count == 4);

  CHECK_THROWS_AS(
      run_with_dropout(proto, inputs, std::vector<bool>(8, false), rng),
      std::invalid_argument);
  CHECK_THROWS_AS(run_with_dropout(proto, inputs, std::vector<bool>(3), rng),
                  std::invalid_argument);
}

TEST_CASE("all-honest dropout equals the plain shuffle stage in law") {
  DeProtocol proto{DeParams{2, 4, 1.0, 0.2}};
  const std::vector<uint32_t> inputs{1, 2, 1, 2};
  RandomSource rng(8);
  const int trials = 20000;
  RunningStats dropout_z, direct_z;
  for (int i = 0; i < trials; ++i) {
    Transcript t =
        run_with_dropout(proto, inputs, std::vector<bool>(4, true), rng);
    dropout_z.push(proto.analyze(t));
    direct_z.push(run_protocol(proto, inputs, rng));
  }
  CHECK(std::fabs(dropout_z.mean() - direct_z.mean()) <
        3.0 * (dropout_z.std_error() + direct_z.std_error()) + 1e-9);
}

TEST_CASE("appended messages only post-process the honest pool") {
  DeProtocol proto{DeParams{2, 4, 1.0, 0.2}};
  RandomSource rng(9);
  Transcript t =
      run_with_dropout(proto, {1, 1, 2, 2}, std::vector<bool>(4, true), rng);
  Outcome before = encode_transcript(t, 2);
  Transcript padded = t;
  padded.messages.push_back(LabeledMessage{1, 1});
  Outcome after = encode_transcript(padded, 2);
  CHECK(after[0] == before[0] + 1);  // only the injected message moved
  CHECK(after[1] == before[1] + 1);
  CHECK(after[2] == before[2]);
  CHECK(after[3] == before[3]);
}
