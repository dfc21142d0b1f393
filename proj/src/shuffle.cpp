#include "panshuffle/shuffle.hpp"

namespace panshuffle {

void shuffle_pool(std::vector<LabeledMessage>& pool, RandomSource& rng) {
  for (size_t i = pool.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.next_below(i));
    std::swap(pool[i - 1], pool[j]);
  }
}

Transcript shuffle(const std::vector<std::vector<LabeledMessage>>& vectors,
                   RandomSource& rng) {
  std::vector<LabeledMessage> pool;
  for (const auto& v : vectors) pool.insert(pool.end(), v.begin(), v.end());
  shuffle_pool(pool, rng);
  return Transcript{std::move(pool), vectors.size()};
}

}  // namespace panshuffle
