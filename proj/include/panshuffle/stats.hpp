#pragma once

#include <cstdint>
#include <vector>

namespace panshuffle {

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Upper tail of the chi-square distribution with df degrees of freedom.
double chi2_sf(double stat, int df);

/// Pearson chi-square test of observed counts against expected counts
/// (expected need not be normalized; it is scaled to the observed total).
/// Cells with expected mass below min_expected are pooled into their
/// neighbor. Returns the p-value.
double chi2_gof_pvalue(const std::vector<int64_t>& observed,
                       const std::vector<double>& expected,
                       double min_expected = 5.0);

/// Running mean/variance accumulator (Welford).
class RunningStats {
 public:
  void push(double x);
  int64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;        // sample variance
  double std_error() const;       // of the mean
 private:
  int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Bernstein-style confidence half-width for a Bernoulli mean estimated
/// from `trials` draws with empirical rate `p_hat`, at confidence
/// 1 - alpha.
double bernoulli_half_width(double p_hat, int64_t trials, double alpha = 0.01);

}  // namespace panshuffle
