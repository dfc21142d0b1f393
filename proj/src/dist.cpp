#include "panshuffle/dist.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace panshuffle {

void PrivacyParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps))
    throw std::invalid_argument("PrivacyParams: eps must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("PrivacyParams: delta must be in (0,1)");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("PrivacyParams: gamma must be in (0,1]");
}

int bernoulli(double p, RandomSource& rng) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("bernoulli: p must be in [0,1]");
  if (p == 0.0) return 0;
  if (p == 1.0) return 1;
  if (p == 0.5) return rng.next_bit();
  return rng.next_double() < p ? 1 : 0;
}

namespace {

// Bin(l, 1/2) as the popcount of l random bits.
int64_t binomial_half(int64_t l, RandomSource& rng) {
  int64_t total = 0;
  int64_t full = l / 64;
  for (int64_t i = 0; i < full; ++i) total += std::popcount(rng.next_u64());
  int rest = static_cast<int>(l % 64);
  if (rest > 0) {
    uint64_t mask = (rest == 64) ? ~uint64_t{0} : ((uint64_t{1} << rest) - 1);
    total += std::popcount(rng.next_u64() & mask);
  }
  return total;
}

// BINV inversion; expected cost O(1 + l*p).
int64_t binomial_inversion(int64_t l, double p, RandomSource& rng) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(l + 1) * s;
  double f = std::pow(q, static_cast<double>(l));
  if (f <= 0.0) {
    // q^l underflows for very large l; fall back to a sum of two halves.
    int64_t lo = l / 2;
    return binomial_inversion(lo, p, rng) + binomial_inversion(l - lo, p, rng);
  }
  while (true) {
    double u = rng.next_double();
    double fx = f;
    for (int64_t x = 0; x <= l; ++x) {
      if (u < fx) return x;
      u -= fx;
      fx *= (a / static_cast<double>(x + 1) - s);
    }
    // Rounding pushed u past the total mass; retry.
  }
}

// Poisson by sequential inversion; suitable for small lambda.
int64_t poisson_inversion(double lambda, RandomSource& rng) {
  double u = rng.next_double();
  double pk = std::exp(-lambda);
  int64_t x = 0;
  while (u >= pk) {
    u -= pk;
    ++x;
    pk *= lambda / static_cast<double>(x);
    if (pk <= 0.0) return x;  // exhausted double precision in the far tail
  }
  return x;
}

// PTRS transformed rejection (Hormann 1993); exact for lambda >= 10.
int64_t poisson_ptrs(double lambda, RandomSource& rng) {
  const double slam = std::sqrt(lambda);
  const double llam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  while (true) {
    double u = rng.next_double() - 0.5;
    double v = rng.next_double();
    double us = 0.5 - std::fabs(u);
    double kd = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<int64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    double rhs = kd * llam - lambda - std::lgamma(kd + 1.0);
    if (lhs <= rhs) return static_cast<int64_t>(kd);
  }
}

}  // namespace

int64_t binomial(int64_t l, double p, RandomSource& rng) {
  if (l < 0) throw std::invalid_argument("binomial: l must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("binomial: p must be in [0,1]");
  if (l == 0 || p == 0.0) return 0;
  if (p == 1.0) return l;
  if (p == 0.5) return binomial_half(l, rng);
  if (p > 0.5) return l - binomial_inversion(l, 1.0 - p, rng);
  return binomial_inversion(l, p, rng);
}

int64_t poisson(double lambda, RandomSource& rng) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("poisson: lambda must be nonnegative");
  if (lambda == 0.0) return 0;
  if (lambda <= 30.0) return poisson_inversion(lambda, rng);
  return poisson_ptrs(lambda, rng);
}

int64_t binomial_mechanism(int64_t value, int64_t l, double p,
                           RandomSource& rng) {
  return value + binomial(l, p, rng);
}

double eps_ratio(double eps) {
  // (e^x+1)/(e^x-1) = 1/tanh(x/2); the tanh form is stable for small eps.
  return 1.0 / std::tanh(eps / 2.0);
}

bool binomial_privacy_ok(int64_t l, double p, double eps, double delta) {
  if (l < 0) throw std::invalid_argument("binomial_privacy_ok: l < 0");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("binomial_privacy_ok: p must be in [0,1]");
  PrivacyParams{eps, delta, 1.0}.validate();
  const double r = eps_ratio(eps);
  const double budget = static_cast<double>(l) * std::min(p, 1.0 - p);
  return budget >= 10.0 * r * r * std::log(2.0 / delta);
}

double binomial_privacy_min_eps(int64_t l, double p, double delta) {
  if (l < 0) throw std::invalid_argument("binomial_privacy_min_eps: l < 0");
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("binomial_privacy_min_eps: p must be in (0,1)");
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("binomial_privacy_min_eps: bad delta");
  const double budget = static_cast<double>(l) * std::min(p, 1.0 - p);
  const double r2 = budget / (10.0 * std::log(2.0 / delta));
  if (!(r2 > 1.0))
    throw std::invalid_argument(
        "binomial_privacy_min_eps: no finite eps satisfies the bound");
  const double r = std::sqrt(r2);
  return std::log((r + 1.0) / (r - 1.0));
}

CategoricalDist::CategoricalDist(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty())
    throw std::invalid_argument("CategoricalDist: empty support");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0))
      throw std::invalid_argument("CategoricalDist: negative probability");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("CategoricalDist: probabilities must sum to 1");
  cdf_.resize(probs_.size());
  double acc = 0.0;
  for (size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    cdf_[i] = acc;
  }
  cdf_.back() = 1.0;
}

CategoricalDist CategoricalDist::uniform(uint32_t k) {
  if (k == 0) throw std::invalid_argument("uniform: k must be positive");
  return CategoricalDist(std::vector<double>(k, 1.0 / k));
}

CategoricalDist CategoricalDist::half_flat(uint32_t k, double a) {
  if (k == 0 || k % 2 != 0)
    throw std::invalid_argument("half_flat: k must be positive and even");
  if (!(a >= 0.0 && a <= 0.5))
    throw std::invalid_argument("half_flat: a must be in [0, 1/2]");
  std::vector<double> p(k);
  for (uint32_t i = 0; i < k; ++i)
    p[i] = (i < k / 2 ? 1.0 + 2.0 * a : 1.0 - 2.0 * a) / k;
  return CategoricalDist(std::move(p));
}

CategoricalDist CategoricalDist::spike(uint32_t k, double d) {
  if (k < 2) throw std::invalid_argument("spike: k must be at least 2");
  if (!(d >= 0.0 && d <= (k - 1.0) / k))
    throw std::invalid_argument("spike: d must be in [0, (k-1)/k]");
  std::vector<double> p(k, (1.0 - (1.0 / k + d)) / (k - 1));
  p[0] = 1.0 / k + d;
  return CategoricalDist(std::move(p));
}

uint32_t CategoricalDist::sample(RandomSource& rng) const {
  double u = rng.next_double();
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<uint32_t>(it - cdf_.begin()) + 1;
}

}  // namespace panshuffle
