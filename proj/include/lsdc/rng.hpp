#ifndef LSDC_RNG_HPP
#define LSDC_RNG_HPP

#include <bit>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lsdc/errors.hpp"

namespace lsdc {

/// splitmix64, the public-domain 64-bit generator by Sebastiano Vigna.
/// Chosen because it is tiny, fully specified by three lines of integer
/// arithmetic, and therefore produces the same stream on every platform
/// and in every language.
///
/// Reference stream for seed 0:
///   0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi); exact at lo when the draw is 0 and exact
  /// when lo == hi.
  double next_in(double lo, double hi) { return lo + next_double() * (hi - lo); }

  /// Unbiased uniform integer in [0, bound) via bitmask rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw InvalidValueError("next_below: bound must be positive");
    const std::uint64_t mask = std::bit_ceil(bound) - 1;
    std::uint64_t draw;
    do {
      draw = next() & mask;
    } while (draw >= bound);
    return draw;
  }

 private:
  std::uint64_t state_;
};

/// Names the generator so random operations are reproducible bit-exactly
/// from (algorithm, seed) alone.
struct RngSpec {
  std::uint64_t seed = 0;
  std::string algorithm = "splitmix64";
};

inline SplitMix64 make_rng(const RngSpec& spec) {
  if (spec.algorithm != "splitmix64")
    throw InvalidValueError("unknown rng algorithm: " + spec.algorithm);
  return SplitMix64(spec.seed);
}

/// First `count` positions of a seeded Fisher-Yates shuffle of [0, size).
/// Uniform without replacement; result order is the draw order.
inline std::vector<std::size_t> sample_without_replacement(std::size_t size, std::size_t count,
                                                           SplitMix64& rng) {
  if (count > size)
    throw InvalidValueError("sample_without_replacement: count exceeds population");
  std::vector<std::size_t> pool(size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(size - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace lsdc

#endif  // LSDC_RNG_HPP
