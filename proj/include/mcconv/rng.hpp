#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <utility>
#include <vector>

namespace mcconv {

namespace detail {

// splitmix64 finalizer; bijective on 64-bit ints.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace detail

// Counter-based random stream: the value at index i is a pure function of
// (key, i), so per-element decisions can be evaluated in any order or in
// parallel and still reproduce bit-exactly. Sequential draws just advance an
// internal index into the same sequence.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : key_(key) {}

  std::uint64_t at(std::uint64_t index) const {
    return detail::mix64(key_ + detail::kGolden * (index + 1));
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform_at(std::uint64_t index) const {
    return static_cast<double>(at(index) >> 11) * 0x1.0p-53;
  }

  std::uint64_t next_u64() { return at(cursor_++); }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, bound) via 128-bit multiply.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // Standard normal via Box-Muller (sine branch discarded).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t cursor_ = 0;
};

// Root generator addressed by (seed, module tag, salt). Streams derived with
// different tags or salts never alias.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  RngStream stream(std::string_view tag) const { return stream(tag, 0); }

  RngStream stream(std::string_view tag, std::uint64_t salt) const {
    std::uint64_t key = detail::mix64(seed_ ^ detail::mix64(detail::fnv1a(tag)));
    return RngStream(detail::mix64(key + detail::kGolden * (salt + 1)));
  }

 private:
  std::uint64_t seed_ = 0;
};

// Seeded in-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& values, RngStream& stream) {
  for (std::size_t i = values.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(stream.below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace mcconv
