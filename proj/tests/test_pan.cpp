#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "panshuffle/audit.hpp"
#include "panshuffle/dist.hpp"
#include "panshuffle/pan.hpp"
#include "panshuffle/stats.hpp"

using namespace panshuffle;

TEST_CASE("zsum_lambda values") {
  CHECK(zsum_lambda(1.0, 0.1) == 281);
  CHECK(zsum_lambda(2.0, 0.1) < zsum_lambda(1.0, 0.1));
  CHECK(zsum_lambda(1.0, 0.01) > zsum_lambda(1.0, 0.1));
}

TEST_CASE("noise-free counter is exact") {
  RandomSource rng(1);
  ZsumResult r = zsum_run({1, 0, 1}, 0, rng);
  CHECK(r.raw == 2);
  CHECK(r.debiased == doctest::Approx(2.0));
}

TEST_CASE("raw error is one-sided and bounded by 2 lambda") {
  RandomSource rng(2);
  const int64_t lambda = 5;
  for (int i = 0; i < 10000; ++i) {
    std::vector<int> stream(37);
    int64_t truth = 0;
    for (auto& b : stream) {
      b = rng.next_bit();
      truth += b;
    }
    ZsumResult r = zsum_run(stream, lambda, rng);
    CHECK(r.raw - truth >= 0);
    CHECK(r.raw - truth <= 2 * lambda);
  }
}

TEST_CASE("all-zero stream mean at lambda=50") {
  RandomSource rng(3);
  const std::vector<int> zeros(64, 0);
  RunningStats raw;
  for (int i = 0; i < 10000; ++i)
    raw.push(static_cast<double>(zsum_run(zeros, 50, rng).raw));
  CHECK(std::fabs(raw.mean() - 50.0) < 3.0 * raw.std_error());
}

TEST_CASE("histogram with zero noise is the exact histogram") {
  RandomSource rng(4);
  std::vector<uint32_t> stream(6, 1);
  PanHistogramResult h = pan_histogram(stream, 3, 0, rng);
  CHECK(h.raw == std::vector<int64_t>{6, 0, 0});
}

TEST_CASE("histogram l-infinity error within 2 lambda on random streams") {
  RandomSource rng(5);
  const int64_t lambda = 7;
  const uint32_t k = 5;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<uint32_t> stream(100);
    std::vector<int64_t> truth(k, 0);
    for (auto& x : stream) {
      x = static_cast<uint32_t>(rng.next_below(k)) + 1;
      ++truth[x - 1];
    }
    PanHistogramResult h = pan_histogram(stream, k, lambda, rng);
    for (uint32_t j = 0; j < k; ++j) {
      CHECK(h.raw[j] - truth[j] >= 0);
      CHECK(h.raw[j] - truth[j] <= 2 * lambda);
    }
  }
}

TEST_CASE("de-biased histogram estimator is centered per bin") {
  RandomSource rng(6);
  const uint32_t k = 3;
  const int64_t lambda = 20;
  std::vector<uint32_t> stream{1, 1, 2, 3, 3, 3};
  std::vector<RunningStats> bins(k);
  for (int i = 0; i < 10000; ++i) {
    PanHistogramResult h = pan_histogram(stream, k, lambda, rng);
    for (uint32_t j = 0; j < k; ++j) bins[j].push(h.debiased[j]);
  }
  const double truth[] = {2.0, 1.0, 3.0};
  for (uint32_t j = 0; j < k; ++j)
    CHECK(std::fabs(bins[j].mean() - truth[j]) < 3.0 * bins[j].std_error());
}

TEST_CASE("changing one stream element moves at most two histogram bins") {
  std::vector<uint32_t> a{1, 2, 2, 3};
  std::vector<uint32_t> b{1, 2, 1, 3};  // third element 2 -> 1
  std::vector<int64_t> ha(3, 0), hb(3, 0);
  for (uint32_t x : a) ++ha[x - 1];
  for (uint32_t x : b) ++hb[x - 1];
  int moved = 0;
  for (int j = 0; j < 3; ++j)
    if (ha[j] != hb[j]) ++moved;
  CHECK(moved == 2);
}

TEST_CASE("zsum intrusion snapshots") {
  RandomSource rng(7);
  // t = 0 snapshot is the initial Bin(lambda, 1/2) draw.
  const int64_t lambda = 100;
  RunningStats init;
  for (int i = 0; i < 20000; ++i) {
    auto [state, result] = zsum_run_with_intrusion({1, 1, 0}, lambda, 0, rng);
    init.push(static_cast<double>(state));
    (void)result;
  }
  CHECK(std::fabs(init.mean() - 50.0) < 3.0 * init.std_error());

  CHECK_THROWS_AS(zsum_run_with_intrusion({1, 0}, 5, 3, rng),
                  std::invalid_argument);
}

TEST_CASE("snapshots do not perturb the run") {
  const std::vector<int> stream{1, 0, 1, 1};
  RandomSource a(42), b(42);
  auto [state, with_snap] = zsum_run_with_intrusion(stream, 10, 2, a);
  ZsumResult without = zsum_run(stream, 10, b);
  CHECK(with_snap.raw == without.raw);
  (void)state;
}

TEST_CASE("de transformation matches the direct protocol in distribution") {
  // Q_P(x) and P(w) with w = (1, 1, x1, x2, 1, 1): TV within sampling noise
  // at k=2, L=2 over 1e5 trials.
  const size_t len = 2;
  DeProtocol proto{DeParams{2, static_cast<int64_t>(3 * len), 1.0, 0.2}};
  const std::vector<uint32_t> stream{2, 2};
  const std::vector<uint32_t> w{1, 1, 2, 2, 1, 1};
  const int64_t trials = 100000;
  RandomSource root(8);
  RandomSource r1 = root.child(1), r2 = root.child(2);
  EmpiricalDist qp = empirical_dist(
      [&](RandomSource& r) {
        return Outcome{static_cast<int64_t>(
            std::llround(pan_from_shuffle_de(stream, proto, r) * 1000.0))};
      },
      trials, r1);
  EmpiricalDist pw = empirical_dist(
      [&](RandomSource& r) {
        return Outcome{static_cast<int64_t>(
            std::llround(run_protocol(proto, w, r) * 1000.0))};
      },
      trials, r2);
  AuditReport tv = tv_report(qp, pw);
  CHECK(tv.tv_hat <= 2.0 * tv.tv_half_width);
}

TEST_CASE("de transformation accuracy on a constant stream") {
  // Stream of all-1s makes w all-ones, so D(w) = 1; the estimate should
  // land within the protocol error bound most of the time.
  const size_t len = 8;
  DeProtocol proto{DeParams{4, static_cast<int64_t>(3 * len), 1.0, 0.1}};
  const std::vector<uint32_t> stream(len, 1);
  const double bound = de_error_bound(4, 1.0, 0.1);
  RandomSource rng(9);
  int within = 0;
  const int trials = 300;
  for (int i = 0; i < trials; ++i) {
    RandomSource r = rng.child(static_cast<uint64_t>(i));
    if (std::fabs(pan_from_shuffle_de(stream, proto, r) - 1.0) <= bound)
      ++within;
  }
  CHECK(within >= trials * 85 / 100);
}

TEST_CASE("de transformation requires n = 3L") {
  DeProtocol proto{DeParams{2, 5, 1.0, 0.1}};
  RandomSource rng(10);
  CHECK_THROWS_AS(pan_from_shuffle_de({1, 1}, proto, rng),
                  std::invalid_argument);
}

TEST_CASE("de transformation intrusion view grows with the stream") {
  const size_t len = 3;
  DeProtocol proto{DeParams{2, 9, 1.0, 0.2}};
  RandomSource rng(11);
  PanShuffleDeRun run(proto, len, rng);
  const size_t per_user =
      2 * static_cast<size_t>(proto.params.shares_per_label());
  CHECK(run.state().messages.size() == len * per_user);
  run.push(1);
  CHECK(run.state().messages.size() == (len + 1) * per_user);
  run.push(2);
  run.push(2);
  CHECK_THROWS_AS(run.push(1), std::invalid_argument);
  (void)run.finish();
}

TEST_CASE("ut transformation clamps the real-sample count") {
  const size_t len = 12;
  UtParams p = UtParams::from_privacy(4, static_cast<int64_t>(3 * len),
                                      static_cast<int64_t>(3 * len), 0.3, 1.0,
                                      0.05);
  UtProtocol proto{p};
  RandomSource rng(12);
  for (int i = 0; i < 200; ++i) {
    RandomSource r = rng.child(static_cast<uint64_t>(i));
    PanShuffleUtRun run(proto, len, r);
    CHECK(run.real_count() >= 0);
    CHECK(run.real_count() <= static_cast<int64_t>(len));
  }
}

TEST_CASE("ut transformation real-count law matches min(Bin(n,2/9), n/3)") {
  const size_t len = 6;
  const int64_t n = 18;
  UtParams p =
      UtParams::from_privacy(2, n, n, 0.3, 1.0, 0.05);
  UtProtocol proto{p};
  RandomSource rng(13);
  const int trials = 30000;
  std::vector<int64_t> counts(len + 1, 0);
  for (int i = 0; i < trials; ++i) {
    RandomSource r = rng.child(static_cast<uint64_t>(i));
    PanShuffleUtRun run(proto, len, r);
    ++counts[static_cast<size_t>(run.real_count())];
  }
  // Exact law of min(Bin(18, 2/9), 6).
  std::vector<double> expected(len + 1, 0.0);
  double c = 1.0;
  const double q = 2.0 / 9.0;
  for (int64_t j = 0; j <= n; ++j) {
    const double pj = c * std::pow(q, static_cast<double>(j)) *
                      std::pow(1.0 - q, static_cast<double>(n - j));
    expected[static_cast<size_t>(std::min<int64_t>(j, len))] += pj;
    c = c * static_cast<double>(n - j) / static_cast<double>(j + 1);
  }
  CHECK(chi2_gof_pvalue(counts, expected) > 1e-3);
}

TEST_CASE("adding cover elements moves the distinct count by at most one") {
  // The padded input w adds copies of element 1 only.
  auto distinct = [](const std::vector<uint32_t>& v) {
    return static_cast<int64_t>(std::set<uint32_t>(v.begin(), v.end()).size());
  };
  const std::vector<uint32_t> with_one{1, 3, 3, 7};
  const std::vector<uint32_t> without_one{2, 3, 3, 7};
  std::vector<uint32_t> w1 = with_one;
  std::vector<uint32_t> w2 = without_one;
  for (int i = 0; i < 4; ++i) {
    w1.push_back(1);
    w2.push_back(1);
  }
  CHECK(distinct(w1) - distinct(with_one) == 0);
  CHECK(distinct(w2) - distinct(without_one) == 1);
}

TEST_CASE("ut transformation detects streams far from uniform") {
  // Stream at distance 9a/2 from uniform: the transformation dilutes it to
  // distance a, which the tester at this sample size still flags in at
  // least half of the runs.
  const uint32_t k = 10;
  const double alpha = 0.2;
  const size_t len = 334;
  const int64_t n = 3 * static_cast<int64_t>(len);
  UtParams p = UtParams::from_privacy(k, n, n, alpha, 1.0, 0.05);
  UtProtocol proto{p};
  const CategoricalDist far = CategoricalDist::spike(k, 9.0 * alpha / 2.0);
  RandomSource rng(15);
  const int trials = 1000;
  int flagged = 0;
  for (int i = 0; i < trials; ++i) {
    RandomSource r = rng.child(static_cast<uint64_t>(i));
    std::vector<uint32_t> stream(len);
    for (auto& x : stream) x = far.sample(r);
    if (pan_from_shuffle_ut(stream, proto, r) == Decision::kNotUniform)
      ++flagged;
  }
  CHECK(flagged >= trials / 2);
}

TEST_CASE("ut transformation on uniform streams matches the direct tester") {
  // Q_P(U^L) has the same law as P(U^{3L}); compare "uniform" rates.
  const size_t len = 30;
  const int64_t n = 3 * static_cast<int64_t>(len);
  UtParams p = UtParams::from_privacy(4, n, n, 0.4, 1.0, 0.05);
  UtProtocol proto{p};
  RandomSource rng(14);
  const int trials = 400;
  int transformed = 0, direct = 0;
  for (int i = 0; i < trials; ++i) {
    RandomSource r1 = rng.child(2 * static_cast<uint64_t>(i));
    RandomSource r2 = rng.child(2 * static_cast<uint64_t>(i) + 1);
    std::vector<uint32_t> stream(len);
    for (auto& x : stream) x = static_cast<uint32_t>(r1.next_below(4)) + 1;
    if (pan_from_shuffle_ut(stream, proto, r1) == Decision::kUniform)
      ++transformed;
    std::vector<uint32_t> direct_inputs(static_cast<size_t>(n));
    for (auto& x : direct_inputs)
      x = static_cast<uint32_t>(r2.next_below(4)) + 1;
    if (run_protocol(proto, direct_inputs, r2) == Decision::kUniform)
      ++direct;
  }
  const double rt = static_cast<double>(transformed) / trials;
  const double rd = static_cast<double>(direct) / trials;
  CHECK(std::fabs(rt - rd) < 0.15);
  CHECK(rt >= 2.0 / 3.0);
}
