#include "panshuffle/distinct.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "panshuffle/dist.hpp"
#include "panshuffle/mod2.hpp"

namespace panshuffle {

void DeParams::validate() const {
  if (k < 1) throw std::invalid_argument("DeParams: k must be >= 1");
  if (n < 1) throw std::invalid_argument("DeParams: n must be >= 1");
  PrivacyParams{eps, delta, 1.0}.validate();
}

double DeParams::p_prime() const {
  return (1.0 - std::pow(1.0 - std::exp(-eps), 1.0 / static_cast<double>(n))) /
         2.0;
}

double DeParams::sigma() const {
  return std::log2((std::exp(eps) + 1.0) / delta);
}

int DeParams::shares_per_label() const { return share_count(sigma(), n); }

std::vector<LabeledMessage> de_randomize(uint32_t x, const DeParams& params,
                                         RandomSource& rng) {
  params.validate();
  if (x < 1 || x > params.k)
    throw std::invalid_argument("de_randomize: datum outside [k]");
  const double pp = params.p_prime();
  const double sigma = params.sigma();
  std::vector<LabeledMessage> out;
  out.reserve(static_cast<size_t>(params.k) *
              static_cast<size_t>(params.shares_per_label()));
  for (uint32_t j = 1; j <= params.k; ++j) {
    const int u = (x == j) ? rng.next_bit() : bernoulli(pp, rng);
    const ParityShares shares = mod2_randomize(u, sigma, params.n, rng);
    for (uint8_t s : shares) out.push_back(LabeledMessage{j, s});
  }
  return out;
}

std::vector<LabeledMessage> DeProtocol::randomize(uint32_t x,
                                                  RandomSource& rng) const {
  return de_randomize(x, params, rng);
}

double DeProtocol::analyze(const Transcript& t) const {
  return de_analyze(t, params);
}

double de_analyze(const Transcript& t, const DeParams& params) {
  params.validate();
  std::vector<int> parity(params.k, 0);
  for (const auto& m : t.messages) {
    if (m.label < 1 || m.label > params.k)
      throw std::runtime_error("de_analyze: malformed transcript label");
    parity[m.label - 1] ^= (m.payload & 1);
  }
  int64_t c = 0;
  for (int pj : parity) c += pj;
  const double e = std::exp(params.eps);
  return (2.0 * static_cast<double>(c) * e - static_cast<double>(params.k)) /
         (e - 1.0);
}

int64_t de_estimate_clamped(double z, uint32_t k) {
  double r = std::round(z);
  if (r < 0.0) return 0;
  if (r > static_cast<double>(k)) return k;
  return static_cast<int64_t>(r);
}

double de_error_bound(uint32_t k, double eps, double beta) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("de_error_bound: beta must be in (0,1)");
  const double e = std::exp(eps);
  return e / (e - 1.0) * std::sqrt(2.0 * static_cast<double>(k) *
                                   std::log(2.0 / beta));
}

EpsGammaBound eps_gamma_bound(double eps, double gamma) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps_gamma_bound: eps <= 0");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("eps_gamma_bound: gamma must be in (0,1]");
  EpsGammaBound b;
  b.eps_exact =
      std::log(1.0 / (1.0 - std::pow(1.0 - std::exp(-eps), gamma)));
  b.bound_general = eps + std::log(1.0 / gamma);
  b.bound_small = 2.0 * std::pow(eps, gamma) / gamma;
  return b;
}

double parity_bias(double p, double gamma) {
  if (!(p >= 0.0 && p <= 0.5))
    throw std::invalid_argument("parity_bias: p must be in [0, 1/2]");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("parity_bias: gamma must be in (0,1]");
  return (1.0 - std::pow(1.0 - 2.0 * p, gamma)) / 2.0;
}

namespace {

uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m) {
  return static_cast<uint64_t>(
      (static_cast<unsigned __int128>(a) * b) % m);
}

uint64_t powmod_u64(uint64_t base, uint64_t exp, uint64_t m) {
  uint64_t result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mulmod_u64(result, base, m);
    base = mulmod_u64(base, base, m);
    exp >>= 1;
  }
  return result;
}

}  // namespace

bool is_prime_u64(uint64_t x) {
  if (x < 2) return false;
  for (uint64_t p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                     23ull, 29ull, 31ull, 37ull}) {
    if (x % p == 0) return x == p;
  }
  uint64_t d = x - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  // Deterministic witness set for 64-bit integers.
  for (uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull,
                     23ull, 29ull, 31ull, 37ull}) {
    uint64_t v = powmod_u64(a, d, x);
    if (v == 1 || v == x - 1) continue;
    bool composite = true;
    for (int i = 1; i < r; ++i) {
      v = mulmod_u64(v, v, x);
      if (v == x - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

uint64_t next_prime_above(uint64_t x) {
  uint64_t c = x + 1;
  if (c <= 2) return 2;
  if (c % 2 == 0) ++c;
  while (!is_prime_u64(c)) c += 2;
  return c;
}

UniversalHash::UniversalHash(uint64_t a, uint64_t b, uint64_t prime_modulus,
                             uint32_t range)
    : a_(a), b_(b), p_(prime_modulus), range_(range) {
  if (!is_prime_u64(p_))
    throw std::invalid_argument("UniversalHash: modulus must be prime");
  if (range_ == 0) throw std::invalid_argument("UniversalHash: empty range");
  if (a_ == 0 || a_ >= p_ || b_ >= p_)
    throw std::invalid_argument("UniversalHash: need a in [1,p), b in [0,p)");
}

uint32_t UniversalHash::apply(uint64_t x) const {
  uint64_t h = mulmod_u64(a_, x % p_, p_);
  h = (h + b_) % p_;
  return static_cast<uint32_t>(h % range_) + 1;
}

UniversalHash sample_hash(uint64_t k, uint32_t k_prime, RandomSource& rng) {
  if (k_prime == 0 || k_prime > k)
    throw std::invalid_argument("sample_hash: need 1 <= k' <= k");
  const uint64_t p = next_prime_above(std::max<uint64_t>(k, uint64_t{1} << 31));
  const uint64_t a = 1 + rng.next_below(p - 1);
  const uint64_t b = rng.next_below(p);
  return UniversalHash(a, b, p, k_prime);
}

HdeResult hde_run(const std::vector<uint32_t>& inputs, uint32_t k, double c,
                  double eps, double delta, RandomSource& rng) {
  if (inputs.empty()) throw std::invalid_argument("hde_run: no users");
  if (!(c >= 1.0)) throw std::invalid_argument("hde_run: need c >= 1");
  const int64_t n = static_cast<int64_t>(inputs.size());
  const double range_real =
      c * std::pow(static_cast<double>(n), 4.0 / 3.0);
  const uint32_t k_prime = static_cast<uint32_t>(std::ceil(range_real));

  HdeResult result;
  if (k < k_prime) {
    // Domain already small; hashing would only lose accuracy.
    result.fell_back = true;
    result.hashed_range = k;
    DeProtocol proto{DeParams{k, n, eps, delta}};
    result.estimate = run_protocol(proto, inputs, rng);
    return result;
  }
  result.hashed_range = k_prime;
  RandomSource hash_rng = rng.fork();  // fresh public-randomness draw
  const UniversalHash h = sample_hash(k, k_prime, hash_rng);
  std::vector<uint32_t> hashed;
  hashed.reserve(inputs.size());
  for (uint32_t x : inputs) {
    if (x < 1 || x > k)
      throw std::invalid_argument("hde_run: datum outside [k]");
    hashed.push_back(h.apply(x));
  }
  DeProtocol proto{DeParams{k_prime, n, eps, delta}};
  result.estimate = run_protocol(proto, hashed, rng);
  return result;
}

double hde_error_bound(int64_t n, double c, double eps, double beta) {
  if (n < 1) throw std::invalid_argument("hde_error_bound: n < 1");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("hde_error_bound: beta must be in (0,1)");
  const double nd = static_cast<double>(n);
  const double e = std::exp(eps);
  return 2.0 * std::pow(nd, 2.0 / 3.0) / (c * beta) +
         e / (e - 1.0) *
             std::sqrt(2.0 * (std::pow(nd, 4.0 / 3.0) + 1.0) *
                       std::log(4.0 / beta));
}

std::vector<double> exact_parity_pool_pmf(const std::vector<double>& qs,
                                          int m) {
  if (m < 1) throw std::invalid_argument("exact_parity_pool_pmf: m < 1");
  // One user's ones-count: uniform over the parity class of their bit,
  // i.e. C(m,c) / 2^{m-1} restricted to counts with the drawn parity.
  std::vector<double> binom(static_cast<size_t>(m) + 1);
  double c = 1.0;
  for (int j = 0; j <= m; ++j) {
    binom[static_cast<size_t>(j)] = c;
    c = c * static_cast<double>(m - j) / static_cast<double>(j + 1);
  }
  const double scale = std::ldexp(1.0, -(m - 1));

  std::vector<double> pool{1.0};
  for (double q : qs) {
    if (!(q >= 0.0 && q <= 1.0))
      throw std::invalid_argument("exact_parity_pool_pmf: q outside [0,1]");
    std::vector<double> user(static_cast<size_t>(m) + 1);
    for (int j = 0; j <= m; ++j)
      user[static_cast<size_t>(j)] =
          binom[static_cast<size_t>(j)] * scale * (j % 2 == 1 ? q : 1.0 - q);
    std::vector<double> next(pool.size() + static_cast<size_t>(m), 0.0);
    for (size_t i = 0; i < pool.size(); ++i) {
      if (pool[i] == 0.0) continue;
      for (int j = 0; j <= m; ++j)
        next[i + static_cast<size_t>(j)] +=
            pool[i] * user[static_cast<size_t>(j)];
    }
    pool = std::move(next);
  }
  return pool;
}

EmpiricalDist de_exact_transcript_dist(const std::vector<uint32_t>& inputs,
                                       const DeParams& params) {
  params.validate();
  if (inputs.empty())
    throw std::invalid_argument("de_exact_transcript_dist: no users");
  const int m = params.shares_per_label();
  const double pp = params.p_prime();
  const int64_t total =
      static_cast<int64_t>(inputs.size()) * static_cast<int64_t>(m);

  std::vector<std::vector<double>> label_pmfs;
  label_pmfs.reserve(params.k);
  for (uint32_t j = 1; j <= params.k; ++j) {
    std::vector<double> qs;
    qs.reserve(inputs.size());
    for (uint32_t x : inputs) {
      if (x < 1 || x > params.k)
        throw std::invalid_argument("de_exact_transcript_dist: bad datum");
      qs.push_back(x == j ? 0.5 : pp);
    }
    label_pmfs.push_back(exact_parity_pool_pmf(qs, m));
  }

  // Label pools are independent given the inputs, so the transcript law is
  // the product over labels.
  double combos = 1.0;
  for (const auto& pmf : label_pmfs) combos *= static_cast<double>(pmf.size());
  if (combos > static_cast<double>(1 << 22))
    throw std::runtime_error("de_exact_transcript_dist: support cap exceeded");

  EmpiricalDist d;
  d.exact = true;
  std::vector<std::pair<Outcome, double>> partial{{Outcome{}, 1.0}};
  for (const auto& pmf : label_pmfs) {
    std::vector<std::pair<Outcome, double>> next;
    next.reserve(partial.size() * pmf.size());
    for (const auto& [o, p] : partial) {
      for (size_t ones = 0; ones < pmf.size(); ++ones) {
        Outcome o2 = o;
        o2.push_back(total);
        o2.push_back(static_cast<int64_t>(ones));
        next.emplace_back(std::move(o2), p * pmf[ones]);
      }
    }
    partial = std::move(next);
  }
  for (auto& [o, p] : partial) d.probs[std::move(o)] = p;
  return d;
}

double zsum_shuffle_p(int64_t n, double eps, double delta) {
  PrivacyParams{eps, delta, 1.0}.validate();
  const double r = eps_ratio(eps);
  const double need = 20.0 * r * r * std::log(2.0 / delta);
  if (static_cast<double>(n) < need)
    throw std::invalid_argument(
        "zsum_shuffle_p: n below 20 ((e^eps+1)/(e^eps-1))^2 ln(2/delta)");
  return 1.0 - (10.0 / static_cast<double>(n)) * r * r *
                   std::log(2.0 / delta);
}

void ZsumShuffleProtocol::validate() const {
  zsum_shuffle_p(n, eps, delta);
}

std::vector<LabeledMessage> ZsumShuffleProtocol::randomize(
    uint32_t bit, RandomSource& rng) const {
  if (bit > 1)
    throw std::invalid_argument("ZsumShuffleProtocol: bit must be 0 or 1");
  const double p = zsum_shuffle_p(n, eps, delta);
  return {LabeledMessage{1, static_cast<uint8_t>(bit)},
          LabeledMessage{1, static_cast<uint8_t>(bernoulli(p, rng))}};
}

double ZsumShuffleProtocol::analyze(const Transcript& t) const {
  const double p = zsum_shuffle_p(n, eps, delta);
  int64_t ones = 0;
  for (const auto& m : t.messages) ones += (m.payload & 1);
  return static_cast<double>(ones) - static_cast<double>(n) * p;
}

}  // namespace panshuffle
