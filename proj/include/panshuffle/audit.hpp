#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "panshuffle/random.hpp"
#include "panshuffle/shuffle.hpp"

namespace panshuffle {

/// Canonical encoding of one observable outcome. Transcripts encode as
/// per-label (total, ones) count pairs, which is permutation-invariant.
using Outcome = std::vector<int64_t>;

/// A distribution over canonically encoded outcomes, either exact or
/// estimated from Monte Carlo trials.
struct EmpiricalDist {
  std::map<Outcome, double> probs;
  int64_t trials = 0;   // 0 in exact mode
  bool exact = false;

  double total_mass() const;
  /// Plug-in bound on the L1 estimation error at confidence 1 - alpha
  /// (expected L1 error plus a McDiarmid deviation term). Zero in exact
  /// mode.
  double l1_half_width(double alpha = 0.01) const;
};

/// Empirical privacy / distance report. Half-widths are at the stated
/// confidence (default 99%); exact-mode reports carry zero widths.
struct AuditReport {
  double eps_tested = 0.0;
  double delta_hat = 0.0;
  double delta_half_width = 0.0;
  double tv_hat = 0.0;
  double tv_half_width = 0.0;
  int64_t trials = 0;
  bool exact = false;
};

/// Hockey-stick divergence sum_o max(0, P(o) - e^eps * Q(o)): the smallest
/// delta for which P <= e^eps * Q + delta event-wise.
double hockey_stick(const EmpiricalDist& p, const EmpiricalDist& q,
                    double eps);

/// Total variation distance (hockey-stick at eps = 0).
double tv_distance(const EmpiricalDist& p, const EmpiricalDist& q);

/// Divergence estimate with a confidence half-width combining both sides'
/// L1 errors (the Q side scaled by e^eps).
AuditReport hockey_stick_report(const EmpiricalDist& p,
                                const EmpiricalDist& q, double eps,
                                double alpha = 0.01);

AuditReport tv_report(const EmpiricalDist& p, const EmpiricalDist& q,
                      double alpha = 0.01);

/// Frequency table over `trials` draws of the sampler. Throws when the
/// number of distinct outcomes exceeds max_support (suggesting exact mode).
EmpiricalDist empirical_dist(
    const std::function<Outcome(RandomSource&)>& sampler, int64_t trials,
    RandomSource& rng, size_t max_support = 1 << 22);

/// Canonical transcript encoding: for each label in [k], the total message
/// count and the count of payload-1 messages.
Outcome encode_transcript(const Transcript& t, uint32_t k);

/// Bin(l, 1/2) probability mass function, index 0..l. Exact dyadic values
/// for l <= 50, lgamma-based beyond.
std::vector<double> binomial_half_pmf(int64_t l);

/// Exact joint distribution of (internal state at time t, final output)
/// for the noisy-counter binary-sum algorithm with noise scale lambda on
/// the given bit stream. Computed by convolving the two Bin(lambda, 1/2)
/// noise draws around the deterministic counter path.
EmpiricalDist exact_joint_zsum(const std::vector<int>& stream, int64_t lambda,
                               size_t t, size_t max_support = 1 << 22);

/// Exact hockey-stick divergence between c + Bin(N, 1/2) and
/// (c+1) + Bin(N, 1/2) where N ~ Pois(pois_rate): the per-label privacy
/// law of the Poisson-noise uniformity randomizer. Symmetric in direction.
double shifted_binpois_delta_exact(double pois_rate, double eps);

}  // namespace panshuffle
