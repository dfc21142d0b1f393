#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "panshuffle/audit.hpp"
#include "panshuffle/dist.hpp"
#include "panshuffle/distinct.hpp"
#include "panshuffle/harness.hpp"
#include "panshuffle/mod2.hpp"
#include "panshuffle/pan.hpp"
#include "panshuffle/stats.hpp"
#include "panshuffle/uniformity.hpp"

namespace panshuffle {

namespace {

// ---------------------------------------------------------------- helpers

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string point_to_string(const GridPoint& p) {
  std::string out;
  for (const auto& [k, v] : p) {
    if (!out.empty()) out += ';';
    out += k + "=" + v;
  }
  return out;
}

double get_f(const GridPoint& p, const std::string& key, double def) {
  auto it = p.find(key);
  return it == p.end() ? def : std::stod(it->second);
}

int64_t get_i(const GridPoint& p, const std::string& key, int64_t def) {
  auto it = p.find(key);
  return it == p.end() ? def : std::stoll(it->second);
}

std::string get_s(const GridPoint& p, const std::string& key,
                  const std::string& def) {
  auto it = p.find(key);
  return it == p.end() ? def : it->second;
}

// Deterministic parallel map over trials: results land in a vector indexed
// by trial and are reduced sequentially afterwards, so --jobs never
// changes the output.
template <class T, class F>
std::vector<T> run_trials(int64_t trials, const RandomSource& root, int jobs,
                          F f) {
  std::vector<T> out(static_cast<size_t>(trials));
  if (jobs <= 1) {
    for (int64_t i = 0; i < trials; ++i) {
      RandomSource rng = root.child(static_cast<uint64_t>(i));
      out[static_cast<size_t>(i)] = f(i, rng);
    }
    return out;
  }
  std::atomic<int64_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(static_cast<size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&]() {
      for (int64_t i = next.fetch_add(1); i < trials; i = next.fetch_add(1)) {
        RandomSource rng = root.child(static_cast<uint64_t>(i));
        out[static_cast<size_t>(i)] = f(i, rng);
      }
    });
  }
  for (auto& w : workers) w.join();
  return out;
}

ResultRow make_row(const std::string& exp, const std::string& params,
                   const std::string& metric, double value, double ci,
                   int64_t trials) {
  ResultRow r;
  r.experiment = exp;
  r.params = params;
  r.metric = metric;
  r.value = value;
  r.ci_half_width = ci;
  r.trials = trials;
  return r;
}

std::vector<uint32_t> pattern_inputs(const std::string& pattern, uint32_t k,
                                     int64_t n) {
  const uint32_t base = pattern == "half-distinct"
                            ? std::max<uint32_t>(1, k / 2)
                            : k;
  std::vector<uint32_t> inputs(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i)
    inputs[static_cast<size_t>(i)] = static_cast<uint32_t>(i % base) + 1;
  return inputs;
}

int64_t distinct_count(const std::vector<uint32_t>& inputs) {
  return static_cast<int64_t>(
      std::set<uint32_t>(inputs.begin(), inputs.end()).size());
}

// ---------------------------------------------------- distinct-accuracy

void run_distinct_accuracy(const GridPoint& p, const ExperimentConfig& cfg,
                           std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const uint32_t k = static_cast<uint32_t>(get_i(p, "k", 10));
  const int64_t n = get_i(p, "n", 50);
  const double eps = get_f(p, "eps", 1.0);
  const double delta = get_f(p, "delta", 0.1);
  const double beta = get_f(p, "beta", 0.1);
  const std::string pattern = get_s(p, "pattern", "all-distinct");
  const int64_t trials =
      cfg.trials_override > 0 ? cfg.trials_override : get_i(p, "trials", 200);

  DeProtocol proto{DeParams{k, n, eps, delta}};
  proto.params.validate();
  const auto inputs = pattern_inputs(pattern, k, n);
  const double truth = static_cast<double>(distinct_count(inputs));
  const double bound = de_error_bound(k, eps, beta);

  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  auto errs = run_trials<double>(
      trials, root, cfg.jobs, [&](int64_t, RandomSource& rng) {
        return std::fabs(run_protocol(proto, inputs, rng) - truth);
      });

  int64_t within = 0;
  RunningStats abs_err;
  for (double e : errs) {
    if (e <= bound) ++within;
    abs_err.push(e);
  }
  const double rate =
      static_cast<double>(within) / static_cast<double>(trials);
  // Pass when the within-bound count clears (1-beta) trials minus three
  // binomial standard deviations.
  const double slack =
      3.0 * std::sqrt(static_cast<double>(trials) * beta * (1.0 - beta));
  const bool pass =
      static_cast<double>(within) >=
      (1.0 - beta) * static_cast<double>(trials) - slack;

  rows.push_back(make_row(cfg.experiment, params, "within_bound_rate", rate,
                          bernoulli_half_width(rate, trials), trials));
  rows.push_back(make_row(cfg.experiment, params, "mean_abs_error",
                          abs_err.mean(), 3.0 * abs_err.std_error(), trials));
  rows.push_back(make_row(cfg.experiment, params, "error_bound", bound, 0.0,
                          trials));
  all_pass = all_pass && pass;
}

// --------------------------------------------------------- hde-accuracy

void run_hde_accuracy(const GridPoint& p, const ExperimentConfig& cfg,
                      std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const uint32_t k = static_cast<uint32_t>(get_i(p, "k", 1000000));
  const int64_t n = get_i(p, "n", 60);
  const double c = get_f(p, "c", 1.0);
  const double eps = get_f(p, "eps", 1.0);
  const double delta = get_f(p, "delta", 0.1);
  const double beta = get_f(p, "beta", 0.2);
  const std::string pattern = get_s(p, "pattern", "all-distinct");
  const int64_t trials =
      cfg.trials_override > 0 ? cfg.trials_override : get_i(p, "trials", 100);

  std::vector<uint32_t> inputs(static_cast<size_t>(n));
  const int64_t span = pattern == "half-distinct" ? (n + 1) / 2 : n;
  for (int64_t i = 0; i < n; ++i)
    inputs[static_cast<size_t>(i)] = static_cast<uint32_t>(i % span) + 1;
  const double truth = static_cast<double>(distinct_count(inputs));
  const double bound = hde_error_bound(n, c, eps, beta);

  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  struct TrialOut {
    double err;
    bool fell_back;
  };
  auto outs = run_trials<TrialOut>(
      trials, root, cfg.jobs, [&](int64_t, RandomSource& rng) {
        HdeResult hr = hde_run(inputs, k, c, eps, delta, rng);
        return TrialOut{std::fabs(hr.estimate - truth), hr.fell_back};
      });

  int64_t within = 0;
  int64_t fallbacks = 0;
  RunningStats abs_err;
  for (const TrialOut& o : outs) {
    if (o.err <= bound) ++within;
    if (o.fell_back) ++fallbacks;
    abs_err.push(o.err);
  }
  const double rate =
      static_cast<double>(within) / static_cast<double>(trials);
  const double slack =
      3.0 * std::sqrt(static_cast<double>(trials) * beta * (1.0 - beta));
  const bool pass =
      static_cast<double>(within) >=
      (1.0 - beta) * static_cast<double>(trials) - slack;

  rows.push_back(make_row(cfg.experiment, params, "within_bound_rate", rate,
                          bernoulli_half_width(rate, trials), trials));
  rows.push_back(make_row(cfg.experiment, params, "mean_abs_error",
                          abs_err.mean(), 3.0 * abs_err.std_error(), trials));
  rows.push_back(make_row(cfg.experiment, params, "error_bound", bound, 0.0,
                          trials));
  rows.push_back(make_row(cfg.experiment, params, "fallback_rate",
                          static_cast<double>(fallbacks) /
                              static_cast<double>(trials),
                          0.0, trials));
  all_pass = all_pass && pass;
}

// ------------------------------------------------------------- ut-power

void run_ut_power(const GridPoint& p, const ExperimentConfig& cfg,
                  std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const uint32_t k = static_cast<uint32_t>(get_i(p, "k", 20));
  const double alpha = get_f(p, "alpha", 0.5);
  const double eps = get_f(p, "eps", 1.0);
  const double delta = get_f(p, "delta", 0.01);
  const int reps = static_cast<int>(get_i(p, "reps", 19));
  const double target = get_f(p, "target", 2.0 / 3.0);
  int64_t m = get_i(p, "m", 0);
  const int64_t trials =
      cfg.trials_override > 0 ? cfg.trials_override : get_i(p, "trials", 500);

  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  double c_m = 0.0;
  if (m == 0) {
    RandomSource cal_rng = root.child(0xca11);
    CalibrationResult cal =
        calibrate_ut(k, alpha, eps, delta, target, cal_rng);
    m = cal.m_star;
    c_m = cal.c_m;
  } else {
    c_m = static_cast<double>(m) /
          static_cast<double>(ut_sample_complexity(k, alpha, eps, delta, 1.0));
  }

  UtFullConfig fc;
  fc.k = k;
  fc.alpha = alpha;
  fc.eps = eps;
  fc.delta = delta;
  fc.m = m;
  fc.reps = reps;

  const CategoricalDist u = CategoricalDist::uniform(k);
  const CategoricalDist far = CategoricalDist::half_flat(k, alpha);

  RandomSource unif_root = root.child(1);
  auto unif_hits = run_trials<int>(
      trials, unif_root, cfg.jobs, [&](int64_t, RandomSource& rng) {
        return ut_full_test(u, fc, rng) == Decision::kUniform ? 1 : 0;
      });
  RandomSource far_root = root.child(2);
  auto far_hits = run_trials<int>(
      trials, far_root, cfg.jobs, [&](int64_t, RandomSource& rng) {
        return ut_full_test(far, fc, rng) == Decision::kNotUniform ? 1 : 0;
      });

  int64_t u_ok = 0, f_ok = 0;
  for (int h : unif_hits) u_ok += h;
  for (int h : far_hits) f_ok += h;
  const double u_rate = static_cast<double>(u_ok) / static_cast<double>(trials);
  const double f_rate = static_cast<double>(f_ok) / static_cast<double>(trials);

  rows.push_back(make_row(cfg.experiment, params, "m_used",
                          static_cast<double>(m), 0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "c_m", c_m, 0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "uniform_rate", u_rate,
                          bernoulli_half_width(u_rate, trials), trials));
  rows.push_back(make_row(cfg.experiment, params, "far_rate", f_rate,
                          bernoulli_half_width(f_rate, trials), trials));
  all_pass = all_pass && u_rate >= target && f_rate >= target;
}

// ------------------------------------------------------------ zsum-error

void run_zsum_error(const GridPoint& p, const ExperimentConfig& cfg,
                    std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const int64_t lambda = get_i(p, "lambda", 5);
  const int64_t len = get_i(p, "len", 100);
  const int64_t trials =
      cfg.trials_override > 0 ? cfg.trials_override : get_i(p, "trials", 10000);

  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  struct TrialOut {
    int64_t raw_err;
    double debiased_err;
  };
  auto outs = run_trials<TrialOut>(
      trials, root, cfg.jobs, [&](int64_t, RandomSource& rng) {
        std::vector<int> stream(static_cast<size_t>(len));
        int64_t truth = 0;
        for (auto& b : stream) {
          b = rng.next_bit();
          truth += b;
        }
        ZsumResult z = zsum_run(stream, lambda, rng);
        return TrialOut{z.raw - truth,
                        z.debiased - static_cast<double>(truth)};
      });

  int64_t min_err = outs.empty() ? 0 : outs.front().raw_err;
  int64_t max_err = min_err;
  RunningStats debiased;
  for (const auto& o : outs) {
    min_err = std::min(min_err, o.raw_err);
    max_err = std::max(max_err, o.raw_err);
    debiased.push(o.debiased_err);
  }
  const bool pass = min_err >= 0 && max_err <= 2 * lambda;

  rows.push_back(make_row(cfg.experiment, params, "max_abs_error_raw",
                          static_cast<double>(max_err), 0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "min_error_raw",
                          static_cast<double>(min_err), 0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "mean_debiased_error",
                          debiased.mean(), 3.0 * debiased.std_error(),
                          trials));
  rows.push_back(make_row(cfg.experiment, params, "error_limit",
                          static_cast<double>(2 * lambda), 0.0, trials));
  all_pass = all_pass && pass;
}

// ------------------------------------------------------- histogram-error

void run_histogram_error(const GridPoint& p, const ExperimentConfig& cfg,
                         std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const uint32_t k = static_cast<uint32_t>(get_i(p, "k", 10));
  const int64_t lambda = get_i(p, "lambda", 5);
  const int64_t len = get_i(p, "len", 200);
  const int64_t trials =
      cfg.trials_override > 0 ? cfg.trials_override : get_i(p, "trials", 200);

  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  struct TrialOut {
    int64_t linf;
    double debias_worst;
  };
  auto outs = run_trials<TrialOut>(
      trials, root, cfg.jobs, [&](int64_t, RandomSource& rng) {
        std::vector<uint32_t> stream(static_cast<size_t>(len));
        std::vector<int64_t> truth(k, 0);
        for (auto& x : stream) {
          x = static_cast<uint32_t>(rng.next_below(k)) + 1;
          ++truth[x - 1];
        }
        PanHistogramResult h = pan_histogram(stream, k, lambda, rng);
        int64_t linf = 0;
        double worst = 0.0;
        for (uint32_t j = 0; j < k; ++j) {
          linf = std::max<int64_t>(linf, std::llabs(h.raw[j] - truth[j]));
          worst = std::max(
              worst, std::fabs(h.debiased[j] - static_cast<double>(truth[j])));
        }
        return TrialOut{linf, worst};
      });

  int64_t linf_max = 0;
  RunningStats debias_worst;
  for (const auto& o : outs) {
    linf_max = std::max(linf_max, o.linf);
    debias_worst.push(o.debias_worst);
  }
  const bool pass = linf_max <= 2 * lambda;

  rows.push_back(make_row(cfg.experiment, params, "linf_raw_max",
                          static_cast<double>(linf_max), 0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "mean_debias_worst",
                          debias_worst.mean(), 3.0 * debias_worst.std_error(),
                          trials));
  rows.push_back(make_row(cfg.experiment, params, "error_limit",
                          static_cast<double>(2 * lambda), 0.0, trials));
  all_pass = all_pass && pass;
}

// --------------------------------------------------------------- audit-de

void run_audit_de(const GridPoint& p, const ExperimentConfig& cfg,
                  std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const uint32_t k = static_cast<uint32_t>(get_i(p, "k", 2));
  const int64_t n = get_i(p, "n", 8);
  const double gamma = get_f(p, "gamma", 0.5);
  const double eps = get_f(p, "eps", 1.0);
  const double delta = get_f(p, "delta", 0.1);
  const int64_t trials = cfg.trials_override > 0 ? cfg.trials_override
                                                 : get_i(p, "trials", 300000);
  if (k < 2) throw std::invalid_argument("audit-de: k must be >= 2");

  DeParams dp{k, n, eps, delta};
  dp.validate();
  const int64_t honest = static_cast<int64_t>(
      std::floor(gamma * static_cast<double>(n)));
  if (honest < 1) throw std::invalid_argument("audit-de: no honest users");

  // Neighboring honest inputs: first user holds 1 vs 2.
  std::vector<uint32_t> x(static_cast<size_t>(honest), 2);
  std::vector<uint32_t> x_prime = x;
  x[0] = 1;

  const double eps_prime = eps_gamma_bound(eps, gamma).eps_exact;
  const double eps_test = 2.0 * eps_prime;  // two labels change; composition
  const double bound = 4.0 * delta / gamma;

  // Closed-form per-label parity laws must satisfy the ratio bound.
  const double p_absent = parity_bias(1.0 / (2.0 * std::exp(eps)), gamma);
  bool ratio_ok = true;
  const double lo = std::exp(-eps_prime) - 1e-12;
  const double hi = std::exp(eps_prime) + 1e-12;
  for (double z : {1.0, 0.0}) {
    const double pr_present = z == 1.0 ? 0.5 : 0.5;
    const double pr_absent = z == 1.0 ? p_absent : 1.0 - p_absent;
    const double ratio = pr_present / pr_absent;
    if (ratio < lo || ratio > hi || 1.0 / ratio < lo || 1.0 / ratio > hi)
      ratio_ok = false;
  }

  // Exact transcript laws (product of per-label parity pools).
  EmpiricalDist exact_p = de_exact_transcript_dist(x, dp);
  EmpiricalDist exact_q = de_exact_transcript_dist(x_prime, dp);
  const double delta_exact =
      std::max(hockey_stick(exact_p, exact_q, eps_test),
               hockey_stick(exact_q, exact_p, eps_test));

  // Monte Carlo transcript-level estimate.
  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  auto sample_transcript = [&](const std::vector<uint32_t>& inputs,
                               RandomSource& rng) {
    std::vector<LabeledMessage> pool;
    for (uint32_t xi : inputs) {
      auto msgs = de_randomize(xi, dp, rng);
      pool.insert(pool.end(), msgs.begin(), msgs.end());
    }
    return encode_transcript(Transcript{std::move(pool), inputs.size()}, k);
  };
  RandomSource rng_p = root.child(1);
  RandomSource rng_q = root.child(2);
  EmpiricalDist mc_p = empirical_dist(
      [&](RandomSource& r) { return sample_transcript(x, r); }, trials, rng_p);
  EmpiricalDist mc_q = empirical_dist(
      [&](RandomSource& r) { return sample_transcript(x_prime, r); }, trials,
      rng_q);
  AuditReport mc = hockey_stick_report(mc_p, mc_q, eps_test);

  const bool pass = ratio_ok && delta_exact <= bound &&
                    mc.delta_hat + mc.delta_half_width <= bound;

  rows.push_back(make_row(cfg.experiment, params, "eps_prime", eps_prime, 0.0,
                          trials));
  rows.push_back(make_row(cfg.experiment, params, "eps_tested", eps_test, 0.0,
                          trials));
  rows.push_back(make_row(cfg.experiment, params, "ratio_ok",
                          ratio_ok ? 1.0 : 0.0, 0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "delta_exact", delta_exact,
                          0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "delta_hat_mc",
                          mc.delta_hat, mc.delta_half_width, trials));
  rows.push_back(
      make_row(cfg.experiment, params, "delta_bound", bound, 0.0, trials));
  all_pass = all_pass && pass;
}

// --------------------------------------------------------------- audit-ut

void run_audit_ut(const GridPoint& p, const ExperimentConfig& cfg,
                  std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const uint32_t k = static_cast<uint32_t>(get_i(p, "k", 2));
  const int64_t n = get_i(p, "n", 20);
  const double gamma = get_f(p, "gamma", 0.5);
  const double eps = get_f(p, "eps", 1.0);
  const double delta = get_f(p, "delta", 0.001);
  const int64_t trials = cfg.trials_override > 0 ? cfg.trials_override
                                                 : get_i(p, "trials", 200000);

  const int64_t lambda = ut_lambda(eps, delta, k);
  const int64_t honest = static_cast<int64_t>(
      std::floor(gamma * static_cast<double>(n)));
  if (honest < 1) throw std::invalid_argument("audit-ut: no honest users");
  const double pool_rate = static_cast<double>(honest) *
                           static_cast<double>(lambda) /
                           static_cast<double>(n);
  const double bound = 8.0 * std::pow(delta, gamma);

  // Exact per-label pool audit: counts differ by one between neighbors.
  const double delta_exact = shifted_binpois_delta_exact(pool_rate, eps);

  // Monte Carlo cross-check on the same label pool law.
  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  auto sample_pool = [&](int64_t data_count, RandomSource& rng) {
    const int64_t noise = poisson(pool_rate, rng);
    const int64_t ones = data_count + binomial(noise, 0.5, rng);
    return Outcome{honest + noise, ones};
  };
  RandomSource rng_p = root.child(1);
  RandomSource rng_q = root.child(2);
  EmpiricalDist mc_p = empirical_dist(
      [&](RandomSource& r) { return sample_pool(1, r); }, trials, rng_p);
  EmpiricalDist mc_q = empirical_dist(
      [&](RandomSource& r) { return sample_pool(0, r); }, trials, rng_q);
  AuditReport mc = hockey_stick_report(mc_p, mc_q, eps);

  const bool pass = delta_exact <= bound &&
                    mc.delta_hat <= bound + mc.delta_half_width;

  rows.push_back(make_row(cfg.experiment, params, "lambda",
                          static_cast<double>(lambda), 0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "delta_exact", delta_exact,
                          0.0, trials));
  rows.push_back(make_row(cfg.experiment, params, "delta_hat_mc",
                          mc.delta_hat, mc.delta_half_width, trials));
  rows.push_back(
      make_row(cfg.experiment, params, "delta_bound", bound, 0.0, trials));
  all_pass = all_pass && pass;
}

// ------------------------------------------------------------- audit-zsum

void run_audit_zsum(const GridPoint& p, const ExperimentConfig& cfg,
                    std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const int64_t lambda = get_i(p, "lambda", 20);
  const int64_t max_len = get_i(p, "len", 8);
  const double delta = get_f(p, "delta", 0.9);

  const double eps_star = binomial_privacy_min_eps(lambda, 0.5, delta);
  double max_excess = -1.0;
  double max_delta_hat = 0.0;
  int64_t cases = 0;

  for (int64_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> bases;
    bases.emplace_back(static_cast<size_t>(len), 0);
    std::vector<int> alt(static_cast<size_t>(len), 0);
    for (size_t i = 0; i < alt.size(); i += 2) alt[i] = 1;
    bases.push_back(alt);
    std::set<size_t> flips{0, static_cast<size_t>(len) / 2,
                           static_cast<size_t>(len - 1)};
    for (const auto& base : bases) {
      for (size_t flip : flips) {
        std::vector<int> neighbor = base;
        neighbor[flip] ^= 1;
        for (size_t t = 0; t <= static_cast<size_t>(len); ++t) {
          EmpiricalDist a = exact_joint_zsum(base, lambda, t);
          EmpiricalDist b = exact_joint_zsum(neighbor, lambda, t);
          const double d = std::max(hockey_stick(a, b, eps_star),
                                    hockey_stick(b, a, eps_star));
          max_delta_hat = std::max(max_delta_hat, d);
          max_excess = std::max(max_excess, d - delta);
          ++cases;
        }
      }
    }
  }

  const bool pass = max_excess <= 1e-12;
  rows.push_back(make_row(cfg.experiment, params, "eps_star", eps_star, 0.0,
                          cases));
  rows.push_back(make_row(cfg.experiment, params, "max_delta_hat",
                          max_delta_hat, 0.0, cases));
  rows.push_back(make_row(cfg.experiment, params, "max_delta_excess",
                          max_excess, 0.0, cases));
  all_pass = all_pass && pass;
}

// ----------------------------------------------------------- mod2-security

void run_mod2_security(const GridPoint& p, const ExperimentConfig& cfg,
                       std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const int64_t n_honest = get_i(p, "n_honest", 2);
  const double sigma = get_f(p, "sigma", 8.0);
  const std::string pattern = get_s(p, "pattern", "ones");
  const int64_t trials = cfg.trials_override > 0 ? cfg.trials_override
                                                 : get_i(p, "trials", 1000000);

  std::vector<int> h(static_cast<size_t>(n_honest), 0);
  if (pattern == "ones") {
    for (auto& b : h) b = 1;
  } else if (pattern == "single") {
    h[0] = 1;
  } else if (pattern == "alt") {
    for (size_t i = 0; i < h.size(); i += 2) h[i] = 1;
  } else {
    throw std::invalid_argument("mod2-security: unknown pattern " + pattern);
  }

  RandomSource root = RandomSource(cfg.seed).child(fnv1a(params));
  AuditReport r = mod2_security_probe(h, sigma, trials, root);
  const double bound = std::pow(2.0, -sigma);
  const bool pass = r.tv_hat <= bound + r.tv_half_width;

  rows.push_back(make_row(cfg.experiment, params, "tv_hat", r.tv_hat,
                          r.tv_half_width, trials));
  rows.push_back(
      make_row(cfg.experiment, params, "tv_bound", bound, 0.0, trials));
  all_pass = all_pass && pass;
}

// ------------------------------------------------------------ lemma-suite

void run_lemma_suite(const GridPoint& p, const ExperimentConfig& cfg,
                     std::vector<ResultRow>& rows, bool& all_pass) {
  const std::string params = point_to_string(p);
  const LemmaReport rep = [&]() {
    auto it = p.find("select");
    if (it == p.end()) return lemma_suite(cfg.seed);
    std::vector<std::string> selection;
    if (!it->second.empty()) selection.push_back(it->second);
    return lemma_suite(cfg.seed, &selection);
  }();
  for (const auto& c : rep.checks) {
    ResultRow r = make_row(cfg.experiment, params, c.name, c.pass ? 1.0 : 0.0,
                           0.0, 1);
    r.note = c.detail;
    rows.push_back(r);
  }
  all_pass = all_pass && rep.all_pass;
}

}  // namespace

// ------------------------------------------------------------ dispatch

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "distinct-accuracy", "hde-accuracy", "ut-power",
      "zsum-error",        "histogram-error", "audit-de",
      "audit-ut",          "audit-zsum",  "mod2-security",
      "lemma-suite"};
  return names;
}

std::vector<std::pair<std::string, std::vector<std::string>>> default_grid(
    const std::string& experiment) {
  using G = std::vector<std::pair<std::string, std::vector<std::string>>>;
  if (experiment == "distinct-accuracy")
    return G{{"k", {"10", "50"}},
             {"n", {"50", "200"}},
             {"eps", {"1.0"}},
             {"beta", {"0.1"}},
             {"pattern", {"all-distinct", "half-distinct"}},
             {"trials", {"200"}}};
  if (experiment == "hde-accuracy")
    return G{{"k", {"1000000"}}, {"n", {"60"}},      {"c", {"1.0"}},
             {"eps", {"1.0"}},   {"beta", {"0.2"}},  {"delta", {"0.1"}},
             {"pattern", {"all-distinct"}}, {"trials", {"100"}}};
  if (experiment == "ut-power")
    return G{{"k", {"20"}},
             {"alpha", {"0.5"}},
             {"eps", {"1.0"}},
             {"delta", {"0.01"}},
             {"trials", {"200"}}};
  if (experiment == "zsum-error")
    return G{{"lambda", {"0", "5", "281"}},
             {"len", {"100"}},
             {"trials", {"10000"}}};
  if (experiment == "histogram-error")
    return G{{"k", {"10"}},
             {"lambda", {"0", "5"}},
             {"len", {"200"}},
             {"trials", {"200"}}};
  if (experiment == "audit-de")
    return G{{"k", {"2"}},      {"n", {"8"}},
             {"gamma", {"0.5", "1.0"}}, {"eps", {"1.0"}},
             {"delta", {"0.1"}}, {"trials", {"1000000"}}};
  if (experiment == "audit-ut")
    return G{{"k", {"2"}},        {"n", {"20"}},
             {"gamma", {"0.5"}},  {"eps", {"1.0"}},
             {"delta", {"0.001"}}, {"trials", {"200000"}}};
  if (experiment == "audit-zsum")
    return G{{"lambda", {"20"}}, {"len", {"8"}}, {"delta", {"0.9"}}};
  if (experiment == "mod2-security")
    return G{{"n_honest", {"2"}},
             {"sigma", {"8"}},
             {"pattern", {"ones", "single"}},
             {"trials", {"1000000"}}};
  if (experiment == "lemma-suite") return G{};
  throw std::invalid_argument("unknown experiment: " + experiment);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  using Runner = void (*)(const GridPoint&, const ExperimentConfig&,
                          std::vector<ResultRow>&, bool&);
  static const std::map<std::string, Runner> registry{
      {"distinct-accuracy", run_distinct_accuracy},
      {"hde-accuracy", run_hde_accuracy},
      {"ut-power", run_ut_power},
      {"zsum-error", run_zsum_error},
      {"histogram-error", run_histogram_error},
      {"audit-de", run_audit_de},
      {"audit-ut", run_audit_ut},
      {"audit-zsum", run_audit_zsum},
      {"mod2-security", run_mod2_security},
      {"lemma-suite", run_lemma_suite},
  };
  auto it = registry.find(cfg.experiment);
  if (it == registry.end())
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);

  ExperimentConfig effective = cfg;
  if (effective.grid.empty()) effective.grid = default_grid(cfg.experiment);

  ExperimentResult result;
  for (const GridPoint& point : effective.expand_grid()) {
    const auto start = std::chrono::steady_clock::now();
    const size_t first_row = result.rows.size();
    try {
      it->second(point, effective, result.rows, result.all_pass);
    } catch (const std::exception& e) {
      ResultRow r = make_row(cfg.experiment, point_to_string(point),
                             "invalid_params", 0.0, 0.0, 0);
      r.ok = false;
      r.note = e.what();
      result.rows.push_back(r);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    for (size_t i = first_row; i < result.rows.size(); ++i)
      result.rows[i].wall_time_s = secs;
  }
  return result;
}

// ----------------------------------------------------------- calibration

namespace {

struct PowerEstimate {
  double unif_rate = 0.0;
  double far_rate = 0.0;
};

PowerEstimate measure_power(const UtFullConfig& fc, int64_t trials,
                            RandomSource root) {
  const CategoricalDist u = CategoricalDist::uniform(fc.k);
  const CategoricalDist far = CategoricalDist::half_flat(fc.k, fc.alpha);
  int64_t u_ok = 0, f_ok = 0;
  for (int64_t i = 0; i < trials; ++i) {
    RandomSource r1 = root.child(2 * static_cast<uint64_t>(i));
    RandomSource r2 = root.child(2 * static_cast<uint64_t>(i) + 1);
    if (ut_full_test(u, fc, r1) == Decision::kUniform) ++u_ok;
    if (ut_full_test(far, fc, r2) == Decision::kNotUniform) ++f_ok;
  }
  return PowerEstimate{
      static_cast<double>(u_ok) / static_cast<double>(trials),
      static_cast<double>(f_ok) / static_cast<double>(trials)};
}

}  // namespace

CalibrationResult calibrate_ut(uint32_t k, double alpha, double eps,
                               double delta, double target_power,
                               RandomSource& rng, int64_t probe_trials,
                               int64_t sample_cap) {
  if (!(target_power > 0.5 && target_power < 1.0))
    throw std::invalid_argument("calibrate_ut: target_power in (1/2, 1)");
  UtFullConfig fc;
  fc.k = k;
  fc.alpha = alpha;
  fc.eps = eps;
  fc.delta = delta;
  fc.validate();

  const double formula =
      static_cast<double>(ut_sample_complexity(k, alpha, eps, delta, 1.0));

  // Measured rates must clear the target at one-sided 80% confidence, so
  // the returned m carries a little real margin rather than sitting on the
  // noise floor of the probe.
  auto success = [&](int64_t m) {
    fc.m = m;
    PowerEstimate pe =
        measure_power(fc, probe_trials, rng.child(0xabcd0000 + static_cast<uint64_t>(m)));
    const double z = 1.2816;
    const double se_u = std::sqrt(pe.unif_rate * (1.0 - pe.unif_rate) /
                                  static_cast<double>(probe_trials));
    const double se_f = std::sqrt(pe.far_rate * (1.0 - pe.far_rate) /
                                  static_cast<double>(probe_trials));
    return pe.unif_rate >= target_power + z * se_u &&
           pe.far_rate >= target_power + z * se_f;
  };

  int64_t lo = 64, hi = 128;
  while (!success(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > sample_cap)
      throw std::runtime_error("calibrate_ut: sample cap exceeded");
  }
  while (hi - lo > std::max<int64_t>(16, lo / 8)) {
    const int64_t mid = lo + (hi - lo) / 2;
    if (success(mid))
      hi = mid;
    else
      lo = mid;
  }
  // Final verification; bump on failure rather than trusting a lucky probe.
  for (int attempt = 0; attempt < 4; ++attempt) {
    fc.m = hi;
    PowerEstimate pe = measure_power(
        fc, probe_trials,
        rng.child(0xfeed0000 + static_cast<uint64_t>(hi + attempt)));
    if (pe.unif_rate >= target_power && pe.far_rate >= target_power) {
      return CalibrationResult{hi, static_cast<double>(hi) / formula};
    }
    hi = hi + std::max<int64_t>(16, hi / 4);
    if (hi > sample_cap)
      throw std::runtime_error("calibrate_ut: sample cap exceeded");
  }
  throw std::runtime_error("calibrate_ut: verification failed");
}

// ----------------------------------------------------------- lemma suite

namespace {

LemmaCheck check_parity_law() {
  LemmaCheck c{"parity-law", true, ""};
  for (int64_t n = 1; n <= 16 && c.pass; ++n) {
    for (int64_t g = 1; g <= n && c.pass; ++g) {
      const double gamma = static_cast<double>(g) / static_cast<double>(n);
      for (double p : {0.0, 0.1, 0.25, 0.5}) {
        const double p_prime =
            (1.0 - std::pow(1.0 - 2.0 * p, 1.0 / static_cast<double>(n))) /
            2.0;
        // Enumerate all 2^g outcomes of the honest users' bits.
        double odd_mass = 0.0;
        for (uint64_t mask = 0; mask < (uint64_t{1} << g); ++mask) {
          const int ones = std::popcount(mask);
          const double w = std::pow(p_prime, ones) *
                           std::pow(1.0 - p_prime, static_cast<double>(g) -
                                                       ones);
          if (ones % 2 == 1) odd_mass += w;
        }
        const double expected = parity_bias(p, gamma);
        if (std::fabs(odd_mass - expected) > 1e-12) {
          c.pass = false;
          c.detail = "n=" + std::to_string(n) + " g=" + std::to_string(g) +
                     " p=" + std::to_string(p);
          break;
        }
      }
    }
  }
  return c;
}

LemmaCheck check_gamma_inequality() {
  LemmaCheck c{"gamma-inequality", true, ""};
  for (int i = 1; i <= 10000; ++i) {
    const double g = static_cast<double>(i) / 10000.0;
    const double lhs = std::pow(2.0, g) / (std::pow(2.0, g) - 1.0);
    if (lhs > 2.0 / g + 1e-12) {
      c.pass = false;
      c.detail = "gamma=" + std::to_string(g);
      break;
    }
  }
  return c;
}

LemmaCheck check_noise_moments(uint64_t seed) {
  LemmaCheck c{"noise-moments", true, ""};
  const uint32_t k = 10;
  const int64_t m = 2000;
  const int64_t trials = 100000;
  std::vector<int64_t> ells;
  for (uint32_t j = 1; j <= k; ++j) ells.push_back(10 * j);
  const UtMoments oracle = moment_oracle(ells, m, k);

  RandomSource root = RandomSource(seed).child(0x1a);
  RunningStats a_stats;
  RunningStats c_stats;
  std::vector<double> c_vals(static_cast<size_t>(trials));
  for (int64_t i = 0; i < trials; ++i) {
    RandomSource rng = root.child(static_cast<uint64_t>(i));
    double a = 0.0, cc = 0.0;
    for (int64_t l : ells) {
      const double e =
          static_cast<double>(binomial(l, 0.5, rng)) - static_cast<double>(l) / 2.0;
      a += e * e;
      cc += e;
    }
    a *= static_cast<double>(k) / static_cast<double>(m);
    cc *= static_cast<double>(k) / static_cast<double>(m);
    a_stats.push(a);
    c_stats.push(cc);
    c_vals[static_cast<size_t>(i)] = cc;
  }
  // E[A] within 3 standard errors of the closed form.
  if (std::fabs(a_stats.mean() - oracle.e_a) > 3.0 * a_stats.std_error()) {
    c.pass = false;
    c.detail = "E[A] off: " + std::to_string(a_stats.mean()) + " vs " +
               std::to_string(oracle.e_a);
    return c;
  }
  // Var[C] within 3 standard errors (asymptotic SE of a sample variance).
  const double var_c = c_stats.variance();
  double m4 = 0.0;
  for (double v : c_vals) {
    const double d = v - c_stats.mean();
    m4 += d * d * d * d;
  }
  m4 /= static_cast<double>(trials);
  const double se_var =
      std::sqrt(std::max(0.0, m4 - var_c * var_c) / static_cast<double>(trials));
  if (std::fabs(var_c - oracle.var_c) > 3.0 * se_var) {
    c.pass = false;
    c.detail = "Var[C] off: " + std::to_string(var_c) + " vs " +
               std::to_string(oracle.var_c);
    return c;
  }
  // Var[A] must respect its upper bound (with sampling tolerance).
  const double var_a = a_stats.variance();
  if (var_a > oracle.var_a_bound * 1.15) {
    c.pass = false;
    c.detail = "Var[A] above bound";
  }
  return c;
}

LemmaCheck check_noise_symmetry(uint64_t seed) {
  LemmaCheck c{"noise-symmetry", true, ""};
  // Monte Carlo: P[B >= 0] should be 1/2 for arbitrary fixed d_j.
  const uint32_t k = 10;
  const int64_t m = 2000;
  const int64_t trials = 100000;
  std::vector<int64_t> ells;
  std::vector<double> ds;
  for (uint32_t j = 1; j <= k; ++j) {
    ells.push_back(40 + 13 * j);
    ds.push_back(std::sqrt(static_cast<double>(j) + 1.0) *
                 (j % 2 == 0 ? 1.0 : -1.0));
  }
  RandomSource root = RandomSource(seed).child(0x3c);
  int64_t nonneg = 0;
  for (int64_t i = 0; i < trials; ++i) {
    RandomSource rng = root.child(static_cast<uint64_t>(i));
    double b = 0.0;
    for (uint32_t j = 0; j < k; ++j) {
      const double e = static_cast<double>(binomial(ells[j], 0.5, rng)) -
                       static_cast<double>(ells[j]) / 2.0;
      b += e * ds[j];
    }
    b *= 2.0 * static_cast<double>(k) / static_cast<double>(m);
    if (b >= 0.0) ++nonneg;
  }
  const double rate = static_cast<double>(nonneg) / static_cast<double>(trials);
  const double se = std::sqrt(0.25 / static_cast<double>(trials));
  if (std::fabs(rate - 0.5) > 3.0 * se) {
    c.pass = false;
    c.detail = "P[B>=0]=" + std::to_string(rate);
    return c;
  }
  // Exact convolution symmetry for k=2, ell <= 4, integer weights.
  for (int64_t l1 = 0; l1 <= 4 && c.pass; ++l1) {
    for (int64_t l2 = 0; l2 <= 4 && c.pass; ++l2) {
      const auto pmf1 = binomial_half_pmf(l1);
      const auto pmf2 = binomial_half_pmf(l2);
      // Value v = (2 Bin1 - l1) * 1 + (2 Bin2 - l2) * 3, always integral.
      std::map<int64_t, double> dist;
      for (int64_t b1 = 0; b1 <= l1; ++b1)
        for (int64_t b2 = 0; b2 <= l2; ++b2)
          dist[(2 * b1 - l1) + 3 * (2 * b2 - l2)] +=
              pmf1[static_cast<size_t>(b1)] * pmf2[static_cast<size_t>(b2)];
      for (const auto& [v, pr] : dist) {
        auto it = dist.find(-v);
        if (it == dist.end() || std::fabs(it->second - pr) > 1e-12) {
          c.pass = false;
          c.detail = "asymmetric at l1=" + std::to_string(l1) +
                     " l2=" + std::to_string(l2);
          break;
        }
      }
    }
  }
  return c;
}

LemmaCheck check_poisson_tail(uint64_t seed) {
  LemmaCheck c{"poisson-tail", true, ""};
  const int64_t trials = 100000;
  RandomSource root = RandomSource(seed).child(0x9c);
  int case_idx = 0;
  for (double lambda : {1.0, 10.0, 100.0}) {
    for (double mult : {1.0, 2.0, 4.0}) {
      const double t = mult * std::sqrt(lambda) + 1.0;
      RandomSource rng = root.child(static_cast<uint64_t>(case_idx++));
      int64_t hits = 0;
      for (int64_t i = 0; i < trials; ++i) {
        const double x = static_cast<double>(poisson(lambda, rng));
        if (std::fabs(x - lambda) >= t) ++hits;
      }
      const double freq = static_cast<double>(hits) / static_cast<double>(trials);
      const double bound = 2.0 * std::exp(-t * t / (2.0 * (lambda + t)));
      const double se =
          std::sqrt(freq * (1.0 - freq) / static_cast<double>(trials));
      if (freq > bound + 3.0 * se + 1e-12) {
        c.pass = false;
        c.detail = "lambda=" + std::to_string(lambda) +
                   " t=" + std::to_string(t) + " freq=" + std::to_string(freq);
        return c;
      }
    }
  }
  return c;
}

}  // namespace

LemmaReport lemma_suite(uint64_t seed,
                        const std::vector<std::string>* selection) {
  static const std::vector<std::string> all{
      "parity-law", "gamma-inequality", "noise-moments", "noise-symmetry",
      "poisson-tail"};
  std::vector<std::string> wanted = selection ? *selection : all;
  LemmaReport rep;
  for (const std::string& name : wanted) {
    LemmaCheck c;
    if (name == "parity-law")
      c = check_parity_law();
    else if (name == "gamma-inequality")
      c = check_gamma_inequality();
    else if (name == "noise-moments")
      c = check_noise_moments(seed);
    else if (name == "noise-symmetry")
      c = check_noise_symmetry(seed);
    else if (name == "poisson-tail")
      c = check_poisson_tail(seed);
    else
      c = LemmaCheck{name, false, "unknown check"};
    rep.all_pass = rep.all_pass && c.pass;
    rep.checks.push_back(std::move(c));
  }
  return rep;
}

}  // namespace panshuffle
