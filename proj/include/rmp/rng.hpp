#pragma once

// Counter-based random numbers: every draw is a pure function of
// (seed, stream, counter, slot), so a replication produces the same variates
// no matter which thread evaluates it or in what order.

#include <cstdint>
#include <string_view>

#include <boost/math/special_functions/erf.hpp>

#include "rmp/distcore.hpp"

namespace rmp {

namespace detail {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

// FNV-1a, used to turn scenario ids into stream keys.
constexpr std::uint64_t stream_key(std::string_view id) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(detail::mix64(detail::mix64(seed + detail::kGolden) ^ (stream * detail::kGolden + 1))) {}

  constexpr std::uint64_t bits(std::uint64_t counter, std::uint32_t slot = 0) const noexcept {
    const std::uint64_t c = detail::mix64(key_ ^ detail::mix64((counter << 3 | slot) + detail::kGolden));
    return detail::mix64(c + key_);
  }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter, std::uint32_t slot = 0) const noexcept {
    return (static_cast<double>(bits(counter, slot) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal by inversion.
  double normal(std::uint64_t counter, std::uint32_t slot = 0) const noexcept {
    const double u = uniform(counter, slot);
    return -kSqrt2 * boost::math::erfc_inv(2.0 * u);
  }

 private:
  std::uint64_t key_;
};

}  // namespace rmp
