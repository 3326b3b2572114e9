#pragma once

#include <cstdint>
#include <limits>

namespace bbsi {

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// A (seed, stream) pair naming one reproducible sequence of variates.
///
/// Streams are derived by hashing, so `split(i)` on distinct `i` yields
/// statistically independent sub-streams without any shared state.
struct RandomSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  [[nodiscard]] constexpr RandomSeed split(std::uint64_t index) const noexcept {
    return {seed, detail::mix64(stream * detail::kGolden + index + 1)};
  }

  friend constexpr bool operator==(const RandomSeed&, const RandomSeed&) = default;
};

/// Counter-based generator: output i is a bijective hash of (key, i).
/// Satisfies UniformRandomBitGenerator.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterEngine(RandomSeed s) noexcept
      : key_(detail::mix64(s.seed ^ detail::mix64(s.stream ^ 0x5851f42d4c957f2dULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return detail::mix64(key_ + detail::kGolden * ++counter_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform index in [0, n) (Lemire's nearly-divisionless method).
  std::uint64_t below(std::uint64_t n) noexcept {
    auto x = (*this)();
    auto m = static_cast<unsigned __int128>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = (*this)();
        m = static_cast<unsigned __int128>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bbsi
