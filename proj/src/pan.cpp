#include "panshuffle/pan.hpp"

#include <cmath>
#include <stdexcept>

#include "panshuffle/dist.hpp"

namespace panshuffle {

int64_t zsum_lambda(double eps, double delta) {
  PrivacyParams{eps, delta, 1.0}.validate();
  const double r = eps_ratio(eps);
  return static_cast<int64_t>(
      std::ceil(20.0 * r * r * std::log(2.0 / delta)));
}

ZsumCounter::ZsumCounter(int64_t lambda, RandomSource& rng)
    : lambda_(lambda) {
  if (lambda < 0) throw std::invalid_argument("ZsumCounter: lambda < 0");
  state_ = binomial(lambda_, 0.5, rng);
}

void ZsumCounter::push(int bit) {
  if (bit != 0 && bit != 1)
    throw std::invalid_argument("ZsumCounter: bit must be 0 or 1");
  state_ += bit;
  ++seen_;
}

ZsumResult ZsumCounter::finish(RandomSource& rng) const {
  ZsumResult r;
  r.raw = state_ + binomial(lambda_, 0.5, rng);
  r.debiased = static_cast<double>(r.raw) - static_cast<double>(lambda_);
  return r;
}

ZsumResult zsum_run(const std::vector<int>& stream, int64_t lambda,
                    RandomSource& rng) {
  ZsumCounter c(lambda, rng);
  for (int b : stream) c.push(b);
  return c.finish(rng);
}

std::pair<int64_t, ZsumResult> zsum_run_with_intrusion(
    const std::vector<int>& stream, int64_t lambda, size_t t,
    RandomSource& rng) {
  if (t > stream.size())
    throw std::invalid_argument("zsum_run_with_intrusion: t beyond stream");
  ZsumCounter c(lambda, rng);
  int64_t snapshot = 0;
  if (t == 0) snapshot = c.state();
  for (size_t i = 0; i < stream.size(); ++i) {
    c.push(stream[i]);
    if (i + 1 == t) snapshot = c.state();
  }
  return {snapshot, c.finish(rng)};
}

PanHistogram::PanHistogram(uint32_t k, int64_t lambda, RandomSource& rng)
    : k_(k), lambda_(lambda) {
  if (k < 1) throw std::invalid_argument("PanHistogram: k must be >= 1");
  if (lambda < 0) throw std::invalid_argument("PanHistogram: lambda < 0");
  counters_.resize(k);
  for (uint32_t j = 0; j < k; ++j) counters_[j] = binomial(lambda_, 0.5, rng);
}

void PanHistogram::push(uint32_t x) {
  if (x < 1 || x > k_)
    throw std::invalid_argument("PanHistogram: element outside [k]");
  ++counters_[x - 1];
  ++seen_;
}

PanHistogramResult PanHistogram::finish(RandomSource& rng) const {
  PanHistogramResult r;
  r.raw.resize(k_);
  r.debiased.resize(k_);
  for (uint32_t j = 0; j < k_; ++j) {
    r.raw[j] = counters_[j] + binomial(lambda_, 0.5, rng);
    r.debiased[j] =
        static_cast<double>(r.raw[j]) - static_cast<double>(lambda_);
  }
  return r;
}

PanHistogramResult pan_histogram(const std::vector<uint32_t>& stream,
                                 uint32_t k, int64_t lambda,
                                 RandomSource& rng) {
  PanHistogram h(k, lambda, rng);
  for (uint32_t x : stream) h.push(x);
  return h.finish(rng);
}

PanShuffleDeRun::PanShuffleDeRun(DeProtocol protocol, size_t stream_len,
                                 RandomSource& rng)
    : protocol_(std::move(protocol)),
      stream_len_(stream_len),
      rng_(rng.fork()),
      dummy_rng_(rng.fork()) {
  if (stream_len < 1)
    throw std::invalid_argument("PanShuffleDeRun: empty stream");
  if (protocol_.params.n != static_cast<int64_t>(3 * stream_len))
    throw std::invalid_argument(
        "PanShuffleDeRun: protocol must be instantiated for n = 3L users");
  for (size_t i = 0; i < stream_len_; ++i) {
    auto msgs = protocol_.randomize(1, dummy_rng_);
    pool_.insert(pool_.end(), msgs.begin(), msgs.end());
  }
}

void PanShuffleDeRun::append(uint32_t x) {
  auto msgs = protocol_.randomize(x, rng_);
  pool_.insert(pool_.end(), msgs.begin(), msgs.end());
}

void PanShuffleDeRun::push(uint32_t x) {
  if (seen_ >= stream_len_)
    throw std::invalid_argument("PanShuffleDeRun: stream overrun");
  append(x);
  ++seen_;
}

Transcript PanShuffleDeRun::state() const {
  Transcript t{pool_, stream_len_ + seen_};
  t.messages = t.sorted_messages();
  return t;
}

double PanShuffleDeRun::finish() {
  if (seen_ != stream_len_)
    throw std::invalid_argument("PanShuffleDeRun: stream incomplete");
  for (size_t i = 0; i < stream_len_; ++i) {
    auto msgs = protocol_.randomize(1, dummy_rng_);
    pool_.insert(pool_.end(), msgs.begin(), msgs.end());
  }
  shuffle_pool(pool_, rng_);
  Transcript t{std::move(pool_), 3 * stream_len_};
  pool_.clear();
  return protocol_.analyze(t);
}

double pan_from_shuffle_de(const std::vector<uint32_t>& stream,
                           const DeProtocol& protocol, RandomSource& rng) {
  PanShuffleDeRun run(protocol, stream.size(), rng);
  for (uint32_t x : stream) run.push(x);
  return run.finish();
}

PanShuffleUtRun::PanShuffleUtRun(UtProtocol protocol, size_t stream_len,
                                 RandomSource& rng)
    : protocol_(std::move(protocol)),
      stream_len_(stream_len),
      rng_(rng.fork()),
      dummy_rng_(rng.fork()) {
  if (stream_len < 1)
    throw std::invalid_argument("PanShuffleUtRun: empty stream");
  if (protocol_.params.n != static_cast<int64_t>(3 * stream_len))
    throw std::invalid_argument(
        "PanShuffleUtRun: protocol must be instantiated for n = 3L users");
  const int64_t n = protocol_.params.n;
  real_count_ = binomial(n, 2.0 / 9.0, rng_);
  real_count_ = std::min<int64_t>(real_count_, static_cast<int64_t>(stream_len_));
  for (size_t i = 0; i < stream_len_; ++i) append(draw_dummy());
}

uint32_t PanShuffleUtRun::draw_dummy() {
  return static_cast<uint32_t>(dummy_rng_.next_below(protocol_.params.k)) + 1;
}

void PanShuffleUtRun::append(uint32_t x) {
  auto msgs = protocol_.randomize(x, rng_);
  pool_.insert(pool_.end(), msgs.begin(), msgs.end());
}

void PanShuffleUtRun::push(uint32_t x) {
  if (seen_ >= stream_len_)
    throw std::invalid_argument("PanShuffleUtRun: stream overrun");
  if (static_cast<int64_t>(seen_) < real_count_)
    append(x);
  else
    append(draw_dummy());
  ++seen_;
}

Transcript PanShuffleUtRun::state() const {
  Transcript t{pool_, stream_len_ + seen_};
  t.messages = t.sorted_messages();
  return t;
}

Decision PanShuffleUtRun::finish() {
  if (seen_ != stream_len_)
    throw std::invalid_argument("PanShuffleUtRun: stream incomplete");
  for (size_t i = 0; i < stream_len_; ++i) append(draw_dummy());
  shuffle_pool(pool_, rng_);
  Transcript t{std::move(pool_), 3 * stream_len_};
  pool_.clear();
  return protocol_.analyze(t);
}

Decision pan_from_shuffle_ut(const std::vector<uint32_t>& stream,
                             const UtProtocol& protocol, RandomSource& rng) {
  PanShuffleUtRun run(protocol, stream.size(), rng);
  for (uint32_t x : stream) run.push(x);
  return run.finish();
}

}  // namespace panshuffle
