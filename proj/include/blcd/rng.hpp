// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string_view>

namespace blcd {

/// SplitMix64 finalizer (bijective 64-bit mix).
std::uint64_t mix64(std::uint64_t z);

/// Deterministic counter-based random stream. Output depends only on the
/// key and the number of values consumed so far, never on global state, so
/// streams with distinct keys can be drawn from in any order or thread.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64();

  /// Uniform on (0, 1); never returns 0 or 1.
  double next_unit();

  /// Standard normal via Box-Muller (pair cached).
  double next_gaussian();

  /// Rayleigh with mean 1, i.e. scale sqrt(2/pi); E[h^2] = 4/pi.
  double next_rayleigh_mean1();

  /// Uniform on [0, n), unbiased (Lemire rejection).
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

/// Key for a labeled substream. All randomness in a run derives from one
/// master seed through (purpose, round, index) labels; devices and the
/// receiver agree on any stream without communication.
std::uint64_t derive_key(std::uint64_t master_seed, std::string_view purpose,
                         std::uint64_t round = 0, std::uint64_t index = 0);

RngStream substream(std::uint64_t master_seed, std::string_view purpose,
                    std::uint64_t round = 0, std::uint64_t index = 0);

}  // namespace blcd
