#include "panshuffle/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace panshuffle {

namespace {

// Series expansion of P(a,x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) (Lentz), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0)
    throw std::invalid_argument("gamma_p: need a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi2_sf(double stat, int df) {
  if (df <= 0) throw std::invalid_argument("chi2_sf: df must be positive");
  if (stat <= 0.0) return 1.0;
  return 1.0 - gamma_p(df / 2.0, stat / 2.0);
}

double chi2_gof_pvalue(const std::vector<int64_t>& observed,
                       const std::vector<double>& expected,
                       double min_expected) {
  if (observed.size() != expected.size() || observed.empty())
    throw std::invalid_argument("chi2_gof_pvalue: size mismatch");
  int64_t total = 0;
  double exp_total = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    total += observed[i];
    exp_total += expected[i];
  }
  if (total <= 0 || exp_total <= 0.0)
    throw std::invalid_argument("chi2_gof_pvalue: empty data");
  const double scale = static_cast<double>(total) / exp_total;

  // Pool sparse cells left to right so every cell meets min_expected.
  std::vector<double> exp_pooled;
  std::vector<double> obs_pooled;
  double e_acc = 0.0, o_acc = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    e_acc += expected[i] * scale;
    o_acc += static_cast<double>(observed[i]);
    if (e_acc >= min_expected) {
      exp_pooled.push_back(e_acc);
      obs_pooled.push_back(o_acc);
      e_acc = o_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (exp_pooled.empty()) {
      exp_pooled.push_back(e_acc);
      obs_pooled.push_back(o_acc);
    } else {
      exp_pooled.back() += e_acc;
      obs_pooled.back() += o_acc;
    }
  }
  if (exp_pooled.size() < 2) return 1.0;

  double stat = 0.0;
  for (size_t i = 0; i < exp_pooled.size(); ++i) {
    double d = obs_pooled[i] - exp_pooled[i];
    stat += d * d / exp_pooled[i];
  }
  return chi2_sf(stat, static_cast<int>(exp_pooled.size()) - 1);
}

void RunningStats::push(double x) {
  ++n_;
  double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::variance() const {
  if (n_ < 2) return 0.0;
  return m2_ / static_cast<double>(n_ - 1);
}

double RunningStats::std_error() const {
  if (n_ < 1) return 0.0;
  return std::sqrt(variance() / static_cast<double>(n_));
}

double bernoulli_half_width(double p_hat, int64_t trials, double alpha) {
  if (trials <= 0) return 1.0;
  const double L = std::log(2.0 / alpha);
  const double t = static_cast<double>(trials);
  return std::sqrt(2.0 * p_hat * (1.0 - p_hat) * L / t) + 2.0 * L / (3.0 * t);
}

}  // namespace panshuffle
