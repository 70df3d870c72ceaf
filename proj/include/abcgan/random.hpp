#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace abcgan {

using Rng = std::mt19937_64;

// 64-bit FNV-1a. Used for seed derivation and cache keys, so it must stay
// stable across platforms and releases (std::hash gives no such promise).
class StableHash {
 public:
  StableHash& add(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= kPrime;
    }
    // field separator so ("ab","c") and ("a","bc") differ
    state_ ^= 0xffu;
    state_ *= kPrime;
    return *this;
  }

  StableHash& add(std::uint64_t value) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((value >> (8 * i)) & 0xffu);
    return add(std::string_view(bytes, 8));
  }

  [[nodiscard]] std::uint64_t value() const { return state_; }

 private:
  static constexpr std::uint64_t kOffset = 14695981039346656037ull;
  static constexpr std::uint64_t kPrime = 1099511628211ull;
  std::uint64_t state_ = kOffset;
};

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace abcgan
