#pragma once

#include <cstdint>
#include <cstddef>

namespace cbtm {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: the value depends only on (seed, counters), so
/// draws can be evaluated in any order or in parallel with identical results.
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a,
                                     std::uint64_t b = 0,
                                     std::uint64_t c = 0) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ (b + 0x632BE59BD9B4E019ULL));
  h = mix64(h ^ (c + 0x85157AF5ULL));
  return h;
}

/// Maps 64 random bits onto [0, n) (multiply-shift).
inline std::size_t bounded(std::uint64_t bits, std::size_t n) noexcept {
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(bits) * n) >> 64);
}

/// Maps 64 random bits onto [0, 1) with 53-bit resolution.
constexpr double unit_double(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Small sequential generator (splitmix64 stream) used where a plain stream of
/// draws is enough, e.g. K-Means seeding. Portable across standard libraries.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() noexcept { return unit_double(next()); }
  std::size_t index(std::size_t n) noexcept { return bounded(next(), n); }

 private:
  std::uint64_t state_;
};

}  // namespace cbtm
