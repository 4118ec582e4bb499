#include "iqlphase/rng.hpp"

#include <limits>

namespace iqlphase {

std::size_t Rng::uniform_index(std::size_t n) {
  // Rejection sampling removes modulo bias.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return static_cast<std::size_t>(x % bound);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x6A09E667F3BCC908ULL;
  std::uint64_t out = 0;
  for (std::uint64_t p : parts) {
    state ^= p;
    out = splitmix64(state);
  }
  return out;
}

RngStreams RngStreams::from_master(std::uint64_t master_seed) {
  return RngStreams{
      Rng(mix_seed({master_seed, 1})),
      Rng(mix_seed({master_seed, 2})),
      Rng(mix_seed({master_seed, 3})),
      Rng(mix_seed({master_seed, 4})),
      Rng(mix_seed({master_seed, 5})),
  };
}

}  // namespace iqlphase
