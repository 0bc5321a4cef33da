// SPDX-License-Identifier: Apache-2.0
#include "blcd/rng.hpp"

#include <cmath>

namespace blcd {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kRoundSalt = 0xD1B54A32D192ED03ull;
constexpr std::uint64_t kIndexSalt = 0x8CB92BA72F3D8DD7ull;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::next_unit() {
  // 53-bit mantissa; nudge zero so log() stays finite.
  double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  if (u == 0.0) u = 0x1.0p-53;
  return u;
}

double RngStream::next_gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  const double u1 = next_unit();
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  cached_gaussian_ = r * std::sin(theta);
  has_cached_gaussian_ = true;
  return r * std::cos(theta);
}

double RngStream::next_rayleigh_mean1() {
  // Inverse transform with scale sqrt(2/pi): h = scale * sqrt(-2 ln u) > 0.
  const double u = next_unit();
  return 0.7978845608028654 * std::sqrt(-2.0 * std::log(u));
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  // Lemire's unbiased bounded generation.
  auto wide = static_cast<unsigned __int128>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(wide);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      wide = static_cast<unsigned __int128>(next_u64()) * n;
      low = static_cast<std::uint64_t>(wide);
    }
  }
  return static_cast<std::uint64_t>(wide >> 64);
}

std::uint64_t derive_key(std::uint64_t master_seed, std::string_view purpose,
                         std::uint64_t round, std::uint64_t index) {
  std::uint64_t k = mix64(master_seed + kGolden);
  k = mix64(k ^ fnv1a(purpose));
  k = mix64(k + kRoundSalt * round);
  k = mix64(k + kIndexSalt * index);
  return k;
}

RngStream substream(std::uint64_t master_seed, std::string_view purpose,
                    std::uint64_t round, std::uint64_t index) {
  return RngStream(derive_key(master_seed, purpose, round, index));
}

}  // namespace blcd
