#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace iqlphase {

/// Seeded random source. Bounded draws are implemented here rather than
/// through <random> distributions so that streams are identical across
/// standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform real in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::mt19937_64 engine_;
};

/// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state);

/// Order-sensitive hash of a list of integers into a 64-bit seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

/// Independent streams owned by one training run.
struct RngStreams {
  Rng env;
  Rng action;
  Rng replay;
  Rng eval;
  Rng init;

  static RngStreams from_master(std::uint64_t master_seed);
};

}  // namespace iqlphase
