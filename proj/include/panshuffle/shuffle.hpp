#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "panshuffle/random.hpp"

namespace panshuffle {

/// One shuffle-model message: a domain label in [k] plus a one-bit payload.
/// Label-free protocols use label 1 throughout.
struct LabeledMessage {
  uint32_t label = 1;
  uint8_t payload = 0;

  friend bool operator==(const LabeledMessage&, const LabeledMessage&) =
      default;
  friend auto operator<=>(const LabeledMessage&, const LabeledMessage&) =
      default;
};

/// The shuffler's output: an order-randomized pool of messages. Analyzers
/// must treat it as a multiset; order carries no information.
struct Transcript {
  std::vector<LabeledMessage> messages;
  size_t participant_count = 0;

  /// Messages sorted into canonical order; two transcripts with equal
  /// multisets canonicalize identically.
  std::vector<LabeledMessage> sorted_messages() const {
    auto out = messages;
    std::sort(out.begin(), out.end());
    return out;
  }
};

/// A protocol is anything with a per-user randomizer and a multiset
/// analyzer. Population size and public parameters live inside the
/// protocol object.
template <class P>
concept ShuffleProtocol =
    requires(const P& p, uint32_t x, RandomSource& rng, const Transcript& t) {
      { p.randomize(x, rng) } -> std::convertible_to<std::vector<LabeledMessage>>;
      p.analyze(t);
    };

/// Ad-hoc protocol from two callables; used for the framework contract and
/// in tests.
template <class Out>
struct BasicProtocol {
  std::function<std::vector<LabeledMessage>(uint32_t, RandomSource&)>
      randomizer;
  std::function<Out(const Transcript&)> analyzer;

  std::vector<LabeledMessage> randomize(uint32_t x, RandomSource& rng) const {
    return randomizer(x, rng);
  }
  Out analyze(const Transcript& t) const { return analyzer(t); }
};

/// Uniformly random permutation (Fisher-Yates) of the concatenation of all
/// message vectors. The multiset of messages is preserved exactly.
Transcript shuffle(const std::vector<std::vector<LabeledMessage>>& vectors,
                   RandomSource& rng);

/// In-place Fisher-Yates over an already-pooled message list.
void shuffle_pool(std::vector<LabeledMessage>& pool, RandomSource& rng);

/// Full honest execution: every user's randomizer runs, the pool is
/// shuffled, and the analyzer's output is returned.
template <ShuffleProtocol P>
auto run_protocol(const P& protocol, const std::vector<uint32_t>& inputs,
                  RandomSource& rng) {
  if (inputs.empty())
    throw std::invalid_argument("run_protocol: need at least one user");
  std::vector<LabeledMessage> pool;
  for (uint32_t x : inputs) {
    auto msgs = protocol.randomize(x, rng);
    pool.insert(pool.end(), msgs.begin(), msgs.end());
  }
  shuffle_pool(pool, rng);
  Transcript t{std::move(pool), inputs.size()};
  return protocol.analyze(t);
}

/// Drop-out simulation: only users with honest_mask[i] set execute the
/// randomizer, while the protocol keeps the full population size as its
/// parameter. Returns the shuffled transcript of honest messages only.
template <ShuffleProtocol P>
Transcript run_with_dropout(const P& protocol,
                            const std::vector<uint32_t>& inputs,
                            const std::vector<bool>& honest_mask,
                            RandomSource& rng) {
  if (honest_mask.size() != inputs.size())
    throw std::invalid_argument("run_with_dropout: mask size mismatch");
  size_t honest = 0;
  std::vector<LabeledMessage> pool;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (!honest_mask[i]) continue;
    ++honest;
    auto msgs = protocol.randomize(inputs[i], rng);
    pool.insert(pool.end(), msgs.begin(), msgs.end());
  }
  if (honest == 0)
    throw std::invalid_argument("run_with_dropout: no honest users");
  shuffle_pool(pool, rng);
  return Transcript{std::move(pool), honest};
}

}  // namespace panshuffle
