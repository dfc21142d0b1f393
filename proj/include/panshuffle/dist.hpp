#pragma once

#include <cstdint>
#include <vector>

#include "panshuffle/random.hpp"

namespace panshuffle {

/// Shared privacy parameters: epsilon, delta, and the honest fraction gamma.
struct PrivacyParams {
  double eps = 1.0;
  double delta = 0.1;
  double gamma = 1.0;

  /// Throws std::invalid_argument unless eps > 0, delta in (0,1) and
  /// gamma in (0,1].
  void validate() const;
};

/// One draw from Ber(p). p must lie in [0,1] exactly; no tolerance.
int bernoulli(double p, RandomSource& rng);

/// One draw from Bin(l, p). Exact popcount path for p = 1/2, inversion
/// otherwise.
int64_t binomial(int64_t l, double p, RandomSource& rng);

/// One draw from Pois(lambda). Exact inversion for lambda <= 30, PTRS
/// transformed rejection above.
int64_t poisson(double lambda, RandomSource& rng);

/// value + Bin(l, p). Never decreases value; never adds more than l.
int64_t binomial_mechanism(int64_t value, int64_t l, double p,
                           RandomSource& rng);

/// True iff l * min(p, 1-p) >= 10 * ((e^eps+1)/(e^eps-1))^2 * ln(2/delta),
/// the condition under which value + Bin(l, p) is (eps, delta)-DP for a
/// 1-sensitive value.
bool binomial_privacy_ok(int64_t l, double p, double eps, double delta);

/// Smallest eps for which binomial_privacy_ok(l, p, eps, delta) holds.
/// Throws std::invalid_argument when no finite eps works (the noise budget
/// l * min(p,1-p) is below 10 * ln(2/delta)).
double binomial_privacy_min_eps(int64_t l, double p, double delta);

/// (e^eps + 1) / (e^eps - 1), the factor appearing in every binomial noise
/// budget in this library.
double eps_ratio(double eps);

/// A probability vector over [k] (1-based domain), sampled by inverse CDF.
class CategoricalDist {
 public:
  explicit CategoricalDist(std::vector<double> probs);

  static CategoricalDist uniform(uint32_t k);
  /// First half of the domain gets mass (1+2a)/k, second half (1-2a)/k;
  /// total variation distance from uniform is exactly a. Requires even k
  /// and a in [0, 1/2].
  static CategoricalDist half_flat(uint32_t k, double a);
  /// Element 1 carries mass 1/k + d, the rest share the remainder evenly;
  /// distance from uniform is exactly d. Requires d <= (k-1)/k.
  static CategoricalDist spike(uint32_t k, double d);

  uint32_t k() const { return static_cast<uint32_t>(probs_.size()); }
  double prob(uint32_t x) const { return probs_[x - 1]; }
  const std::vector<double>& probs() const { return probs_; }

  /// One sample in [k].
  uint32_t sample(RandomSource& rng) const;

 private:
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

}  // namespace panshuffle
