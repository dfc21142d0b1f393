#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "panshuffle/dist.hpp"
#include "panshuffle/random.hpp"
#include "panshuffle/shuffle.hpp"

namespace panshuffle {

enum class Decision { kUniform, kNotUniform };

/// Parameters of the preliminary private uniformity tester.
struct UtParams {
  uint32_t k = 0;     // domain size the tester runs on
  int64_t n = 0;      // number of users (realized sample count)
  int64_t m = 0;      // target sample complexity (drives the statistic)
  int64_t lambda = 0; // per-element noise rate
  double alpha = 0.0; // testing distance
  double tau = 0.0;   // decision threshold

  void validate() const;

  /// lambda and tau derived from the privacy parameters:
  /// lambda = ceil(40 ((e^eps+1)/(e^eps-1))^2 ln(2k/delta)), tau from
  /// ut_tau.
  static UtParams from_privacy(uint32_t k, int64_t n, int64_t m, double alpha,
                               double eps, double delta);
};

/// ceil(40 ((e^eps+1)/(e^eps-1))^2 ln(2 k / delta)).
int64_t ut_lambda(double eps, double delta, uint32_t k);

/// Decision threshold
/// 3 a^2 m / 250 + k^2 L / (2m) + 5 k^{3/2} L / m + 10 k L^{1/2} / m^{1/2}
///   + 5 k^{3/2} L^{1/2} / m, with L = lambda.
double ut_tau(double alpha, int64_t m, uint32_t k, int64_t lambda);

/// Per-user randomizer: one data message (j, 1{x=j}) per label, plus
/// Pois(lambda/n) fair-coin noise messages per label.
std::vector<LabeledMessage> ut_randomize(uint32_t x, const UtParams& params,
                                         RandomSource& rng);

/// Z' statistic from per-label (total, ones) counts recovered from the
/// transcript: l_j = total_j - n, c_j = -l_j/2 + ones_j,
/// Z' = (k/m) sum_j [(c_j - m/k)^2 - c_j].
double ut_statistic(const Transcript& t, const UtParams& params);

/// "not uniform" iff Z' > tau; ties decide "uniform".
Decision ut_analyze(const Transcript& t, const UtParams& params);

struct UtProtocol {
  UtParams params;
  std::vector<LabeledMessage> randomize(uint32_t x, RandomSource& rng) const {
    return ut_randomize(x, params, rng);
  }
  Decision analyze(const Transcript& t) const { return ut_analyze(t, params); }
};

/// A partition of [k] into k_hat groups, as a map element -> group index.
struct Partition {
  std::vector<uint32_t> group_of;  // index x-1, values in [k_hat]
  uint32_t k_hat = 0;

  uint32_t k() const { return static_cast<uint32_t>(group_of.size()); }
  std::vector<int64_t> group_sizes() const;
};

/// Each element assigned to a uniformly random group, independently
/// (multinomial occupancy).
Partition sample_partition(uint32_t k, uint32_t k_hat, RandomSource& rng);

/// Uniformly random partition with group sizes as equal as possible
/// (differing by at most one): a random permutation dealt round-robin.
/// This is the variant the full tester uses, since it maps the uniform
/// distribution to (near-)uniform.
Partition sample_balanced_partition(uint32_t k, uint32_t k_hat,
                                    RandomSource& rng);

/// Deterministic balanced partition x -> ((x-1) mod k_hat) + 1.
Partition round_robin_partition(uint32_t k, uint32_t k_hat);

uint32_t compress(const Partition& partition, uint32_t x);

/// Induced distribution on groups: P[G = g] = sum_{x in g} P[D = x].
CategoricalDist compressed_dist(const Partition& partition,
                                const CategoricalDist& d);

/// Compressed-domain size rule: clamp(round(k^{2/3} eps^{4/3} /
/// alpha^{4/3}), 2, k).
uint32_t khat_rule(uint32_t k, double eps, double alpha);

/// ceil(C_m (k^{2/3}/(alpha^{4/3} eps^{2/3}) + k^{1/2}/(alpha eps)
///   + k^{1/2}/alpha^2) sqrt(ln(k/delta))).
int64_t ut_sample_complexity(uint32_t k, double alpha, double eps,
                             double delta, double c_m);

/// Closed-form moments of the noise terms in the decomposition
/// Z' = Z + A + B - C, used as test oracles.
struct UtMoments {
  double e_a = 0.0;         // E[A] = (k/4m) sum l_j
  double var_a_bound = 0.0; // Var[A] <= (k^2/8m^2) sum l_j^2
  double var_c = 0.0;       // Var[C] = (k^2/4m^2) sum l_j
};

UtMoments moment_oracle(const std::vector<int64_t>& ells, int64_t m,
                        uint32_t k);

/// Z' from sufficient statistics: per-label true-data counts plus noise
/// (total noisy messages and how many of them carried a one).
double ut_zprime_from_counts(const std::vector<int64_t>& data_counts,
                             const std::vector<int64_t>& noise_totals,
                             const std::vector<int64_t>& noise_ones,
                             int64_t m);

/// One Poissonized run of the tester against an explicit distribution,
/// using per-label counts directly (same law as the message path, since
/// the analyzer only reads per-label counts). Returns the decision.
Decision ut_run_counts(const CategoricalDist& d, const UtParams& params,
                       RandomSource& rng);

/// Configuration of the amplified final tester.
struct UtFullConfig {
  uint32_t k = 0;
  double alpha = 0.0;
  double eps = 1.0;
  double delta = 0.01;
  int64_t m = 0;     // per-repetition target sample count; 0 derives it
  double c_m = 1.0;  // calibration constant used when m == 0
  int reps = 19;
  double rho = 0.25; // flag fraction needed to output "not uniform"

  void validate() const;
  int64_t resolved_m() const;
};

/// Amplified tester: `reps` independent repetitions, each with a fresh
/// balanced public partition into khat_rule groups and n ~ Pois(m)
/// samples; outputs "not uniform" iff more than rho * reps repetitions
/// flag. With reps = 1 this is a single preliminary test on the compressed
/// domain.
Decision ut_full_test(const std::function<uint32_t(RandomSource&)>& source,
                      const UtFullConfig& cfg, RandomSource& rng);

/// Same tester against an explicit distribution via the counts path.
Decision ut_full_test(const CategoricalDist& d, const UtFullConfig& cfg,
                      RandomSource& rng);

}  // namespace panshuffle
