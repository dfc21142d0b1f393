#include "panshuffle/audit.hpp"

#include <cmath>
#include <stdexcept>

namespace panshuffle {

double EmpiricalDist::total_mass() const {
  double s = 0.0;
  for (const auto& [o, p] : probs) s += p;
  return s;
}

double EmpiricalDist::l1_half_width(double alpha) const {
  if (exact || trials <= 0) return 0.0;
  const double t = static_cast<double>(trials);
  double expected_l1 = 0.0;
  for (const auto& [o, p] : probs)
    expected_l1 += std::sqrt(p * (1.0 - p) / t);
  const double deviation = std::sqrt(2.0 * std::log(2.0 / alpha) / t);
  return expected_l1 + deviation;
}

namespace {

void check_compatible(const EmpiricalDist& p, const EmpiricalDist& q) {
  if (p.probs.empty() || q.probs.empty())
    throw std::invalid_argument("audit: empty distribution");
  if (p.probs.begin()->first.size() != q.probs.begin()->first.size())
    throw std::invalid_argument("audit: mismatched outcome encodings");
}

}  // namespace

double hockey_stick(const EmpiricalDist& p, const EmpiricalDist& q,
                    double eps) {
  check_compatible(p, q);
  const double e = std::exp(eps);
  double div = 0.0;
  for (const auto& [o, pp] : p.probs) {
    auto it = q.probs.find(o);
    const double qq = (it == q.probs.end()) ? 0.0 : it->second;
    const double gap = pp - e * qq;
    if (gap > 0.0) div += gap;
  }
  return div;
}

double tv_distance(const EmpiricalDist& p, const EmpiricalDist& q) {
  return hockey_stick(p, q, 0.0);
}

AuditReport hockey_stick_report(const EmpiricalDist& p,
                                const EmpiricalDist& q, double eps,
                                double alpha) {
  AuditReport r;
  r.eps_tested = eps;
  r.delta_hat = hockey_stick(p, q, eps);
  r.delta_half_width =
      p.l1_half_width(alpha) + std::exp(eps) * q.l1_half_width(alpha);
  r.trials = std::min(p.trials, q.trials);
  r.exact = p.exact && q.exact;
  return r;
}

AuditReport tv_report(const EmpiricalDist& p, const EmpiricalDist& q,
                      double alpha) {
  AuditReport r = hockey_stick_report(p, q, 0.0, alpha);
  r.tv_hat = r.delta_hat;
  r.tv_half_width = r.delta_half_width;
  return r;
}

EmpiricalDist empirical_dist(
    const std::function<Outcome(RandomSource&)>& sampler, int64_t trials,
    RandomSource& rng, size_t max_support) {
  if (trials <= 0) throw std::invalid_argument("empirical_dist: trials <= 0");
  std::map<Outcome, int64_t> counts;
  for (int64_t i = 0; i < trials; ++i) {
    Outcome o = sampler(rng);
    auto [it, inserted] = counts.try_emplace(std::move(o), 0);
    ++it->second;
    if (inserted && counts.size() > max_support)
      throw std::runtime_error(
          "empirical_dist: outcome space exceeds cap; use exact mode");
  }
  EmpiricalDist d;
  d.trials = trials;
  d.exact = false;
  for (const auto& [o, c] : counts)
    d.probs[o] = static_cast<double>(c) / static_cast<double>(trials);
  return d;
}

Outcome encode_transcript(const Transcript& t, uint32_t k) {
  Outcome out(2 * static_cast<size_t>(k), 0);
  for (const auto& m : t.messages) {
    if (m.label < 1 || m.label > k)
      throw std::runtime_error("encode_transcript: label outside domain");
    out[2 * (m.label - 1)] += 1;
    out[2 * (m.label - 1) + 1] += m.payload;
  }
  return out;
}

std::vector<double> binomial_half_pmf(int64_t l) {
  if (l < 0) throw std::invalid_argument("binomial_half_pmf: l < 0");
  std::vector<double> pmf(static_cast<size_t>(l) + 1);
  if (l <= 50) {
    // C(l, j) fits in a double exactly for l <= 50, so these values are
    // exact dyadic rationals.
    const double scale = std::ldexp(1.0, -static_cast<int>(l));
    double c = 1.0;
    for (int64_t j = 0; j <= l; ++j) {
      pmf[static_cast<size_t>(j)] = c * scale;
      c = c * static_cast<double>(l - j) / static_cast<double>(j + 1);
    }
  } else {
    const double lg = std::lgamma(static_cast<double>(l) + 1.0);
    const double ln_half = -std::log(2.0) * static_cast<double>(l);
    for (int64_t j = 0; j <= l; ++j) {
      double lp = lg - std::lgamma(static_cast<double>(j) + 1.0) -
                  std::lgamma(static_cast<double>(l - j) + 1.0) + ln_half;
      pmf[static_cast<size_t>(j)] = std::exp(lp);
    }
  }
  return pmf;
}

double shifted_binpois_delta_exact(double pois_rate, double eps) {
  if (!(pois_rate >= 0.0))
    throw std::invalid_argument("shifted_binpois_delta_exact: bad rate");
  const double e = std::exp(eps);
  // Truncate the Poisson far enough that the discarded mass is below the
  // precision of the answer.
  const int64_t n_max = static_cast<int64_t>(
      pois_rate + 14.0 * std::sqrt(pois_rate + 1.0) + 40.0);
  double delta = 0.0;
  double tail = 1.0;  // Poisson mass not yet visited
  for (int64_t n = 0; n <= n_max; ++n) {
    const double lp = -pois_rate +
                      static_cast<double>(n) * std::log(pois_rate + 1e-300) -
                      std::lgamma(static_cast<double>(n) + 1.0);
    const double pn = (pois_rate == 0.0) ? (n == 0 ? 1.0 : 0.0) : std::exp(lp);
    tail -= pn;
    const auto pmf = binomial_half_pmf(n);
    double inner = 0.0;
    for (int64_t o = 0; o <= n; ++o) {
      const double prev = (o == 0) ? 0.0 : pmf[static_cast<size_t>(o - 1)];
      const double gap = pmf[static_cast<size_t>(o)] - e * prev;
      if (gap > 0.0) inner += gap;
    }
    delta += pn * inner;
  }
  return delta + std::max(0.0, tail);
}

EmpiricalDist exact_joint_zsum(const std::vector<int>& stream, int64_t lambda,
                               size_t t, size_t max_support) {
  if (lambda < 0) throw std::invalid_argument("exact_joint_zsum: lambda < 0");
  if (t > stream.size())
    throw std::invalid_argument("exact_joint_zsum: t beyond stream");
  const size_t support =
      (static_cast<size_t>(lambda) + 1) * (static_cast<size_t>(lambda) + 1);
  if (support > max_support)
    throw std::runtime_error("exact_joint_zsum: support cap exceeded");

  int64_t prefix = 0;
  for (size_t i = 0; i < t; ++i) {
    if (stream[i] != 0 && stream[i] != 1)
      throw std::invalid_argument("exact_joint_zsum: stream bits only");
    prefix += stream[i];
  }
  int64_t total = prefix;
  for (size_t i = t; i < stream.size(); ++i) {
    if (stream[i] != 0 && stream[i] != 1)
      throw std::invalid_argument("exact_joint_zsum: stream bits only");
    total += stream[i];
  }

  // State at t is prefix + eta0; output is total + eta0 + eta1 with the
  // same eta0, so the joint factorizes over (eta0, eta1).
  const auto pmf = binomial_half_pmf(lambda);
  EmpiricalDist d;
  d.exact = true;
  for (int64_t e0 = 0; e0 <= lambda; ++e0) {
    for (int64_t e1 = 0; e1 <= lambda; ++e1) {
      Outcome o{prefix + e0, total + e0 + e1};
      d.probs[o] += pmf[static_cast<size_t>(e0)] * pmf[static_cast<size_t>(e1)];
    }
  }
  return d;
}

}  // namespace panshuffle
