// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace blcd {

/// The round's subcarrier-to-coordinate mapping I(t): k distinct model
/// coordinates, strictly increasing. Entry k is the coordinate carried by
/// subcarrier k.
struct CoordinateSet {
  std::vector<int> indices;
  int dim = 0;
  long round = 0;

  int k() const { return static_cast<int>(indices.size()); }
};

/// Per-device residual memory r^m: the gradient mass not transmitted yet.
struct DeviceMemory {
  std::vector<double> r;
  int device_id = 0;
};

/// Draw k distinct coordinates of [0, d) uniformly without replacement.
/// Fully determined by (master_seed, round); every device and the receiver
/// reproduce the same set from their local copy of the seed.
CoordinateSet select_coordinates(int d, int k, std::uint64_t master_seed,
                                 long round);

/// Alternative selection strategy: the k largest |x| coordinates
/// (ties broken toward lower index). Same output contract as
/// select_coordinates; provided for comparison runs only.
CoordinateSet select_top_k(const std::vector<double>& x, int k, long round);

/// Sparsification operator C_I: keeps coordinates in I, zeroes the rest.
std::vector<double> sparsify(const std::vector<double>& x,
                             const CoordinateSet& coords);

/// Contraction factor of uniform selection: delta = k/d.
double compression_delta(int d, int k);

struct MemoryUpdate {
  std::vector<double> transmitted;  // C_I(u)
  std::vector<double> memory;       // u - C_I(u)
};

/// Split u into the transmitted part C_I(u) and the residual kept in
/// memory. The two parts always sum back to u bitwise.
MemoryUpdate update_memory(const std::vector<double>& u,
                           const CoordinateSet& coords);

}  // namespace blcd
