// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "blcd/channel.hpp"

using namespace blcd;

TEST_SUITE_BEGIN("channel");

TEST_CASE("fading moments match the mean-1 parameterization") {
  RngStream s = substream(1, "fading-test");
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double h = s.next_rayleigh_mean1();
    REQUIRE(h > 0.0);
    sum += h;
    sum2 += h * h;
  }
  CHECK(std::abs(sum / n - 1.0) < 0.01);
  CHECK(std::abs(sum2 / n - kRayleighSecondMoment) < 0.01);
}

TEST_CASE("draw_fading fills a strictly positive K x M grid") {
  RngStream s = substream(2, "fading", 0);
  const auto ch = draw_fading(16, 8, 1.0, 0, s);
  CHECK(ch.subcarriers() == 16);
  CHECK(ch.devices() == 8);
  CHECK(ch.round == 0);
  for (double h : ch.h.data) CHECK(h > 0.0);
  // fresh draw each round
  RngStream s1 = substream(2, "fading", 1);
  const auto ch1 = draw_fading(16, 8, 1.0, 1, s1);
  CHECK(ch.h.data != ch1.h.data);
}

TEST_CASE("superposition with suppressed noise") {
  ChannelRealization ch;
  ch.h = Matrix(2, 2, 1.0);
  ch.sigma2 = 0.0;
  RngStream noise = substream(0, "noise");
  const auto y = mac_transmit({{1, 2}, {3, 4}}, ch, noise);
  CHECK(y == std::vector<double>{4, 6});
}

TEST_CASE("single subcarrier gain") {
  ChannelRealization ch;
  ch.h = Matrix(1, 1, 0.5);
  ch.sigma2 = 0.0;
  RngStream noise = substream(0, "noise");
  const auto y = mac_transmit({{2.0}}, ch, noise);
  CHECK(y[0] == doctest::Approx(1.0));
}

TEST_CASE("zero payload leaves pure noise with variance sigma2") {
  ChannelRealization ch;
  ch.h = Matrix(1, 1, 1.0);
  ch.sigma2 = 2.5;
  RngStream noise = substream(3, "noise-var");
  const int draws = 10000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const auto y = mac_transmit({{0.0}}, ch, noise);
    sum += y[0];
    sum2 += y[0] * y[0];
  }
  const double mean = sum / draws;
  const double var = sum2 / draws - mean * mean;
  // 3 standard errors
  const double se_mean = std::sqrt(ch.sigma2 / draws);
  const double se_var = ch.sigma2 * std::sqrt(2.0 / draws);
  CHECK(std::abs(mean) < 3 * se_mean);
  CHECK(std::abs(var - ch.sigma2) < 3 * se_var);
}

TEST_CASE("mac_transmit is linear with the noise suppressed") {
  RngStream hs = substream(4, "fading", 0);
  auto ch = draw_fading(5, 3, 0.0, 0, hs);
  RngStream pay = substream(4, "payload");
  std::vector<std::vector<double>> A(3, std::vector<double>(5)),
      B(3, std::vector<double>(5)), AB(3, std::vector<double>(5));
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 5; ++k) {
      A[m][k] = pay.next_gaussian();
      B[m][k] = pay.next_gaussian();
      AB[m][k] = A[m][k] + B[m][k];
    }
  RngStream n0 = substream(0, "noise");
  const auto ya = mac_transmit(A, ch, n0);
  const auto yb = mac_transmit(B, ch, n0);
  const auto yab = mac_transmit(AB, ch, n0);
  for (int k = 0; k < 5; ++k)
    CHECK(ya[k] + yb[k] == doctest::Approx(yab[k]).epsilon(1e-12));
}

TEST_CASE("mac_transmit validates payload shape") {
  ChannelRealization ch;
  ch.h = Matrix(2, 1, 1.0);
  RngStream noise = substream(0, "noise");
  CHECK_THROWS_AS(mac_transmit({{1.0}}, ch, noise), std::invalid_argument);
  CHECK_THROWS_AS(mac_transmit({{1.0, 2.0}, {1.0, 2.0}}, ch, noise),
                  std::invalid_argument);
}

TEST_CASE("energy conversion inverts the normalized-energy definition") {
  CHECK(energy_from_Eavg(0.1, 8, 64, 1.0, kRayleighSecondMoment) ==
        doctest::Approx(0.2 * M_PI).epsilon(1e-12));
  CHECK(energy_from_Eavg(1, 1, 1, 1, 1) == doctest::Approx(1.0));
  CHECK(energy_from_Eavg(2.0, 8, 64, 1.0, kRayleighSecondMoment) ==
        doctest::Approx(2.0 * energy_from_Eavg(1.0, 8, 64, 1.0,
                                               kRayleighSecondMoment)));
  CHECK_THROWS_AS(energy_from_Eavg(0.0, 8, 64, 1.0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("power check") {
  auto r = check_power({1, 1}, {1, 2}, 5);
  CHECK(r.ok);
  CHECK(r.slack == doctest::Approx(0.0));
  CHECK_FALSE(check_power({2}, {2}, 15).ok);
  auto z = check_power({0, 0}, {3, 4}, 2.5);
  CHECK(z.ok);
  CHECK(z.slack == doctest::Approx(2.5));
  CHECK_THROWS_AS(check_power({1}, {1, 2}, 1), std::invalid_argument);
}

TEST_SUITE_END();
