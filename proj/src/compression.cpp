// SPDX-License-Identifier: Apache-2.0
#include "blcd/compression.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "blcd/rng.hpp"

namespace blcd {

namespace {
void check_selection_args(int d, int k) {
  if (d < 1) throw std::invalid_argument("selection: dimension must be >= 1");
  if (k < 1 || k > d)
    throw std::invalid_argument("selection: need 1 <= k <= d, got k=" +
                                std::to_string(k) + " d=" + std::to_string(d));
}

void check_dims(const std::vector<double>& x, const CoordinateSet& coords,
                const char* op) {
  if (static_cast<int>(x.size()) != coords.dim)
    throw std::invalid_argument(std::string(op) + ": vector length " +
                                std::to_string(x.size()) +
                                " does not match coordinate-set dimension " +
                                std::to_string(coords.dim));
}
}  // namespace

CoordinateSet select_coordinates(int d, int k, std::uint64_t master_seed,
                                 long round) {
  check_selection_args(d, k);
  RngStream stream =
      substream(master_seed, "coordinate-select", static_cast<std::uint64_t>(round));
  // Partial Fisher-Yates over the index pool: first k slots end up as a
  // uniform sample without replacement.
  std::vector<int> pool(d);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(stream.next_below(
                          static_cast<std::uint64_t>(d - i)));
    std::swap(pool[i], pool[j]);
  }
  CoordinateSet out;
  out.indices.assign(pool.begin(), pool.begin() + k);
  std::sort(out.indices.begin(), out.indices.end());
  out.dim = d;
  out.round = round;
  return out;
}

CoordinateSet select_top_k(const std::vector<double>& x, int k, long round) {
  const int d = static_cast<int>(x.size());
  check_selection_args(d, k);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + k, order.end(),
                   [&](int a, int b) {
                     const double ma = std::abs(x[a]), mb = std::abs(x[b]);
                     return ma != mb ? ma > mb : a < b;
                   });
  CoordinateSet out;
  out.indices.assign(order.begin(), order.begin() + k);
  std::sort(out.indices.begin(), out.indices.end());
  out.dim = d;
  out.round = round;
  return out;
}

std::vector<double> sparsify(const std::vector<double>& x,
                             const CoordinateSet& coords) {
  check_dims(x, coords, "sparsify");
  std::vector<double> out(x.size(), 0.0);
  for (int j : coords.indices) out[j] = x[j];
  return out;
}

double compression_delta(int d, int k) {
  check_selection_args(d, k);
  return static_cast<double>(k) / static_cast<double>(d);
}

MemoryUpdate update_memory(const std::vector<double>& u,
                           const CoordinateSet& coords) {
  check_dims(u, coords, "update_memory");
  MemoryUpdate out;
  out.transmitted.assign(u.size(), 0.0);
  out.memory = u;
  // Selected coordinates move to the transmitted part; the split is exact
  // by construction (no arithmetic).
  for (int j : coords.indices) {
    out.transmitted[j] = u[j];
    out.memory[j] = 0.0;
  }
  return out;
}

}  // namespace blcd
