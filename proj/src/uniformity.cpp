#include "panshuffle/uniformity.hpp"

#include <cmath>
#include <stdexcept>

namespace panshuffle {

void UtParams::validate() const {
  if (k < 1) throw std::invalid_argument("UtParams: k must be >= 1");
  if (n < 1) throw std::invalid_argument("UtParams: n must be >= 1");
  if (m < 1) throw std::invalid_argument("UtParams: m must be >= 1");
  if (lambda < 0) throw std::invalid_argument("UtParams: lambda < 0");
}

UtParams UtParams::from_privacy(uint32_t k, int64_t n, int64_t m, double alpha,
                                double eps, double delta) {
  UtParams p;
  p.k = k;
  p.n = n;
  p.m = m;
  p.alpha = alpha;
  p.lambda = ut_lambda(eps, delta, k);
  p.tau = ut_tau(alpha, m, k, p.lambda);
  p.validate();
  return p;
}

int64_t ut_lambda(double eps, double delta, uint32_t k) {
  PrivacyParams{eps, delta, 1.0}.validate();
  if (k < 1) throw std::invalid_argument("ut_lambda: k must be >= 1");
  const double r = eps_ratio(eps);
  return static_cast<int64_t>(
      std::ceil(40.0 * r * r * std::log(2.0 * k / delta)));
}

double ut_tau(double alpha, int64_t m, uint32_t k, int64_t lambda) {
  if (m < 1) throw std::invalid_argument("ut_tau: m must be >= 1");
  const double md = static_cast<double>(m);
  const double kd = static_cast<double>(k);
  const double ld = static_cast<double>(lambda);
  return 3.0 * alpha * alpha * md / 250.0 + kd * kd * ld / (2.0 * md) +
         5.0 * std::pow(kd, 1.5) * ld / md +
         10.0 * kd * std::sqrt(ld) / std::sqrt(md) +
         5.0 * std::pow(kd, 1.5) * std::sqrt(ld) / md;
}

std::vector<LabeledMessage> ut_randomize(uint32_t x, const UtParams& params,
                                         RandomSource& rng) {
  params.validate();
  if (x < 1 || x > params.k)
    throw std::invalid_argument("ut_randomize: datum outside [k]");
  const double rate =
      static_cast<double>(params.lambda) / static_cast<double>(params.n);
  std::vector<LabeledMessage> out;
  out.reserve(params.k);
  for (uint32_t j = 1; j <= params.k; ++j) {
    out.push_back(LabeledMessage{j, static_cast<uint8_t>(x == j ? 1 : 0)});
    const int64_t s = poisson(rate, rng);
    for (int64_t i = 0; i < s; ++i)
      out.push_back(LabeledMessage{j, static_cast<uint8_t>(rng.next_bit())});
  }
  return out;
}

double ut_statistic(const Transcript& t, const UtParams& params) {
  params.validate();
  std::vector<int64_t> totals(params.k, 0);
  std::vector<int64_t> ones(params.k, 0);
  for (const auto& msg : t.messages) {
    if (msg.label < 1 || msg.label > params.k)
      throw std::runtime_error("ut_statistic: malformed transcript label");
    totals[msg.label - 1] += 1;
    ones[msg.label - 1] += msg.payload & 1;
  }
  const double kd = static_cast<double>(params.k);
  const double md = static_cast<double>(params.m);
  double z = 0.0;
  for (uint32_t j = 0; j < params.k; ++j) {
    const double ell = static_cast<double>(totals[j] - params.n);
    const double cj = -ell / 2.0 + static_cast<double>(ones[j]);
    const double dev = cj - md / kd;
    z += dev * dev - cj;
  }
  return kd / md * z;
}

Decision ut_analyze(const Transcript& t, const UtParams& params) {
  return ut_statistic(t, params) > params.tau ? Decision::kNotUniform
                                              : Decision::kUniform;
}

std::vector<int64_t> Partition::group_sizes() const {
  std::vector<int64_t> sizes(k_hat, 0);
  for (uint32_t g : group_of) ++sizes[g - 1];
  return sizes;
}

namespace {

void check_partition_args(uint32_t k, uint32_t k_hat) {
  if (k_hat < 2) throw std::invalid_argument("partition: k_hat must be >= 2");
  if (k_hat > k) throw std::invalid_argument("partition: k_hat > k");
}

}  // namespace

Partition sample_partition(uint32_t k, uint32_t k_hat, RandomSource& rng) {
  check_partition_args(k, k_hat);
  Partition p;
  p.k_hat = k_hat;
  p.group_of.resize(k);
  for (uint32_t i = 0; i < k; ++i)
    p.group_of[i] = static_cast<uint32_t>(rng.next_below(k_hat)) + 1;
  return p;
}

Partition sample_balanced_partition(uint32_t k, uint32_t k_hat,
                                    RandomSource& rng) {
  check_partition_args(k, k_hat);
  std::vector<uint32_t> perm(k);
  for (uint32_t i = 0; i < k; ++i) perm[i] = i;
  for (uint32_t i = k; i > 1; --i) {
    uint32_t j = static_cast<uint32_t>(rng.next_below(i));
    std::swap(perm[i - 1], perm[j]);
  }
  Partition p;
  p.k_hat = k_hat;
  p.group_of.resize(k);
  for (uint32_t i = 0; i < k; ++i) p.group_of[perm[i]] = (i % k_hat) + 1;
  return p;
}

Partition round_robin_partition(uint32_t k, uint32_t k_hat) {
  check_partition_args(k, k_hat);
  Partition p;
  p.k_hat = k_hat;
  p.group_of.resize(k);
  for (uint32_t i = 0; i < k; ++i) p.group_of[i] = (i % k_hat) + 1;
  return p;
}

uint32_t compress(const Partition& partition, uint32_t x) {
  if (x < 1 || x > partition.k())
    throw std::invalid_argument("compress: element outside [k]");
  return partition.group_of[x - 1];
}

CategoricalDist compressed_dist(const Partition& partition,
                                const CategoricalDist& d) {
  if (d.k() != partition.k())
    throw std::invalid_argument("compressed_dist: domain mismatch");
  std::vector<double> mass(partition.k_hat, 0.0);
  for (uint32_t x = 1; x <= d.k(); ++x)
    mass[partition.group_of[x - 1] - 1] += d.prob(x);
  return CategoricalDist(std::move(mass));
}

uint32_t khat_rule(uint32_t k, double eps, double alpha) {
  if (k < 2) throw std::invalid_argument("khat_rule: k must be >= 2");
  if (!(eps > 0.0) || !(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("khat_rule: bad eps/alpha");
  const double raw = std::pow(static_cast<double>(k), 2.0 / 3.0) *
                     std::pow(eps, 4.0 / 3.0) / std::pow(alpha, 4.0 / 3.0);
  double rounded = std::round(raw);
  if (rounded < 2.0) return 2;
  if (rounded > static_cast<double>(k)) return k;
  return static_cast<uint32_t>(rounded);
}

int64_t ut_sample_complexity(uint32_t k, double alpha, double eps,
                             double delta, double c_m) {
  if (!(c_m > 0.0)) throw std::invalid_argument("ut_sample_complexity: C_m <= 0");
  PrivacyParams{eps, delta, 1.0}.validate();
  const double kd = static_cast<double>(k);
  const double t1 = std::pow(kd, 2.0 / 3.0) /
                    (std::pow(alpha, 4.0 / 3.0) * std::pow(eps, 2.0 / 3.0));
  const double t2 = std::sqrt(kd) / (alpha * eps);
  const double t3 = std::sqrt(kd) / (alpha * alpha);
  return static_cast<int64_t>(
      std::ceil(c_m * (t1 + t2 + t3) * std::sqrt(std::log(kd / delta))));
}

UtMoments moment_oracle(const std::vector<int64_t>& ells, int64_t m,
                        uint32_t k) {
  if (m < 1) throw std::invalid_argument("moment_oracle: m < 1");
  const double kd = static_cast<double>(k);
  const double md = static_cast<double>(m);
  double sum_l = 0.0, sum_l2 = 0.0;
  for (int64_t l : ells) {
    sum_l += static_cast<double>(l);
    sum_l2 += static_cast<double>(l) * static_cast<double>(l);
  }
  UtMoments mo;
  mo.e_a = kd / (4.0 * md) * sum_l;
  mo.var_a_bound = kd * kd / (8.0 * md * md) * sum_l2;
  mo.var_c = kd * kd / (4.0 * md * md) * sum_l;
  return mo;
}

double ut_zprime_from_counts(const std::vector<int64_t>& data_counts,
                             const std::vector<int64_t>& noise_totals,
                             const std::vector<int64_t>& noise_ones,
                             int64_t m) {
  const size_t k = data_counts.size();
  if (noise_totals.size() != k || noise_ones.size() != k || k == 0)
    throw std::invalid_argument("ut_zprime_from_counts: size mismatch");
  const double kd = static_cast<double>(k);
  const double md = static_cast<double>(m);
  double z = 0.0;
  for (size_t j = 0; j < k; ++j) {
    const double ell = static_cast<double>(noise_totals[j]);
    const double cj = static_cast<double>(data_counts[j] + noise_ones[j]) -
                      ell / 2.0;
    const double dev = cj - md / kd;
    z += dev * dev - cj;
  }
  return kd / md * z;
}

Decision ut_run_counts(const CategoricalDist& d, const UtParams& params,
                       RandomSource& rng) {
  params.validate();
  if (d.k() != params.k)
    throw std::invalid_argument("ut_run_counts: domain mismatch");
  std::vector<int64_t> data(params.k), totals(params.k), ones(params.k);
  const double md = static_cast<double>(params.m);
  for (uint32_t j = 0; j < params.k; ++j) {
    // Poissonized sampling makes per-label counts independent Poissons.
    data[j] = poisson(md * d.prob(j + 1), rng);
    totals[j] = poisson(static_cast<double>(params.lambda), rng);
    ones[j] = binomial(totals[j], 0.5, rng);
  }
  const double z = ut_zprime_from_counts(data, totals, ones, params.m);
  return z > params.tau ? Decision::kNotUniform : Decision::kUniform;
}

void UtFullConfig::validate() const {
  if (k < 2) throw std::invalid_argument("UtFullConfig: k must be >= 2");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("UtFullConfig: alpha must be in (0,1)");
  PrivacyParams{eps, delta, 1.0}.validate();
  if (reps < 1) throw std::invalid_argument("UtFullConfig: reps must be >= 1");
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("UtFullConfig: rho must be in (0,1)");
  if (m < 0) throw std::invalid_argument("UtFullConfig: m < 0");
}

int64_t UtFullConfig::resolved_m() const {
  if (m > 0) return m;
  return ut_sample_complexity(k, alpha, eps, delta, c_m);
}

namespace {

// Compression-loss distance the threshold is tuned for:
// alpha * sqrt(k_hat) / (477 sqrt(10 k)).
double alpha_hat(double alpha, uint32_t k, uint32_t k_hat) {
  return alpha * std::sqrt(static_cast<double>(k_hat)) /
         (477.0 * std::sqrt(10.0 * static_cast<double>(k)));
}

// One repetition via compressed Poisson counts against distribution d.
Decision full_test_rep_counts(const CategoricalDist& d, uint32_t k,
                              uint32_t k_hat, const UtParams& base,
                              RandomSource& rep_rng,
                              RandomSource& partition_rng) {
  Partition g = sample_balanced_partition(k, k_hat, partition_rng);
  CategoricalDist dg = compressed_dist(g, d);
  return ut_run_counts(dg, base, rep_rng);
}

Decision majority_decision(int flags, int reps, double rho) {
  return static_cast<double>(flags) > rho * static_cast<double>(reps)
             ? Decision::kNotUniform
             : Decision::kUniform;
}

}  // namespace

Decision ut_full_test(const CategoricalDist& d, const UtFullConfig& cfg,
                      RandomSource& rng) {
  cfg.validate();
  if (d.k() != cfg.k)
    throw std::invalid_argument("ut_full_test: domain mismatch");
  const uint32_t k_hat = khat_rule(cfg.k, cfg.eps, cfg.alpha);
  const int64_t m = cfg.resolved_m();
  UtParams base = UtParams::from_privacy(
      k_hat, /*n=*/m, m, alpha_hat(cfg.alpha, cfg.k, k_hat), cfg.eps,
      cfg.delta);
  RandomSource local = rng.fork();
  // Partition seeds are fixed up front; repetitions may then fan out.
  RandomSource partition_rng = local.child(0x70617274);
  int flags = 0;
  for (int r = 0; r < cfg.reps; ++r) {
    RandomSource rep_rng = local.child(0x72657000 + static_cast<uint64_t>(r));
    RandomSource part_rng = partition_rng.child(static_cast<uint64_t>(r));
    if (full_test_rep_counts(d, cfg.k, k_hat, base, rep_rng, part_rng) ==
        Decision::kNotUniform)
      ++flags;
  }
  return majority_decision(flags, cfg.reps, cfg.rho);
}

Decision ut_full_test(const std::function<uint32_t(RandomSource&)>& source,
                      const UtFullConfig& cfg, RandomSource& rng) {
  cfg.validate();
  const uint32_t k_hat = khat_rule(cfg.k, cfg.eps, cfg.alpha);
  const int64_t m = cfg.resolved_m();
  RandomSource local = rng.fork();
  RandomSource partition_rng = local.child(0x70617274);
  int flags = 0;
  for (int r = 0; r < cfg.reps; ++r) {
    RandomSource rep_rng = local.child(0x72657000 + static_cast<uint64_t>(r));
    RandomSource part_rng = partition_rng.child(static_cast<uint64_t>(r));
    Partition g = sample_balanced_partition(cfg.k, k_hat, part_rng);

    const int64_t n = std::max<int64_t>(
        1, poisson(static_cast<double>(m), rep_rng));
    std::vector<int64_t> data(k_hat, 0), totals(k_hat, 0), ones(k_hat, 0);
    for (int64_t i = 0; i < n; ++i) {
      uint32_t x = source(rep_rng);
      ++data[compress(g, x) - 1];
    }
    UtParams p = UtParams::from_privacy(
        k_hat, n, m, alpha_hat(cfg.alpha, cfg.k, k_hat), cfg.eps, cfg.delta);
    for (uint32_t j = 0; j < k_hat; ++j) {
      totals[j] = poisson(static_cast<double>(p.lambda), rep_rng);
      ones[j] = binomial(totals[j], 0.5, rep_rng);
    }
    const double z = ut_zprime_from_counts(data, totals, ones, m);
    if (z > p.tau) ++flags;
  }
  return majority_decision(flags, cfg.reps, cfg.rho);
}

}  // namespace panshuffle
