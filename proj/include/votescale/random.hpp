#pragma once

// Counter-based random streams. A stream is a pure function of a 64-bit key
// and a draw counter, and keys are derived from (master seed, coordinates), so
// results never depend on how work is scheduled across threads.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace votescale {

struct SeedSpec {
  std::uint64_t master_seed = 0;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Key for the stream at the given coordinates, e.g. (query, run, k-index, lane).
constexpr std::uint64_t derive_stream_key(SeedSpec seed,
                                          std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = detail::mix64(seed.master_seed ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t c : coords) {
    h = detail::mix64(h ^ detail::mix64(c + detail::kGolden));
  }
  return h;
}

class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr RandomStream(std::uint64_t key) : key_(key) {}
  RandomStream(SeedSpec seed, std::initializer_list<std::uint64_t> coords)
      : key_(derive_stream_key(seed, coords)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n > 0. Lemire's multiply-and-reject.
  std::size_t below(std::size_t n) {
    const auto bound = static_cast<std::uint64_t>(n);
    std::uint64_t x = (*this)();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<__uint128_t>(x) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t draws() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace votescale
