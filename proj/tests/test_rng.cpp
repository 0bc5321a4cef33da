// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blcd/rng.hpp"

using namespace blcd;

TEST_SUITE_BEGIN("rng");

TEST_CASE("streams are pure functions of their key") {
  RngStream a = substream(42, "fading", 7);
  RngStream b = substream(42, "fading", 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct purposes and rounds give distinct streams") {
  RngStream a = substream(42, "fading", 7);
  RngStream b = substream(42, "noise", 7);
  RngStream c = substream(42, "fading", 8);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u64();
    if (va == b.next_u64()) ++same_ab;
    if (va == c.next_u64()) ++same_ac;
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("next_unit stays inside (0, 1)") {
  RngStream s(123);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_unit();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("next_below is within range and roughly uniform") {
  RngStream s(9);
  const std::uint64_t n = 10;
  std::vector<int> counts(n, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto v = s.next_below(n);
    REQUIRE(v < n);
    ++counts[v];
  }
  for (auto c : counts) {
    CHECK(c > draws / static_cast<int>(n) * 0.9);
    CHECK(c < draws / static_cast<int>(n) * 1.1);
  }
}

TEST_CASE("gaussian moments") {
  RngStream s(77);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.next_gaussian();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_SUITE_END();
