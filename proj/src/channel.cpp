// SPDX-License-Identifier: Apache-2.0
#include "blcd/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace blcd {

ChannelRealization draw_fading(int K, int M, double sigma2, long round,
                               RngStream& stream) {
  if (K < 1 || M < 1)
    throw std::invalid_argument("draw_fading: K and M must be >= 1");
  if (sigma2 < 0.0)
    throw std::invalid_argument("draw_fading: sigma2 must be >= 0");
  ChannelRealization ch;
  ch.h = Matrix(K, M);
  ch.sigma2 = sigma2;
  ch.round = round;
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) ch.h(k, m) = stream.next_rayleigh_mean1();
  return ch;
}

std::vector<double> mac_transmit(
    const std::vector<std::vector<double>>& payloads,
    const ChannelRealization& ch, RngStream& noise) {
  const int K = ch.subcarriers();
  const int M = ch.devices();
  if (static_cast<int>(payloads.size()) != M)
    throw std::invalid_argument("mac_transmit: expected " + std::to_string(M) +
                                " payloads, got " +
                                std::to_string(payloads.size()));
  for (const auto& p : payloads)
    if (static_cast<int>(p.size()) != K)
      throw std::invalid_argument("mac_transmit: payload length " +
                                  std::to_string(p.size()) +
                                  " does not match K=" + std::to_string(K));
  const double sigma = std::sqrt(ch.sigma2);
  std::vector<double> y(K, 0.0);
  for (int k = 0; k < K; ++k) {
    double sum = 0.0;
    for (int m = 0; m < M; ++m) sum += ch.h(k, m) * payloads[m][k];
    if (ch.sigma2 > 0.0) sum += sigma * noise.next_gaussian();
    y[k] = sum;
  }
  return y;
}

double energy_from_Eavg(double E_avg, int M, int K, double sigma2,
                        double Eh2) {
  if (E_avg <= 0.0 || M < 1 || K < 1 || sigma2 <= 0.0 || Eh2 <= 0.0)
    throw std::invalid_argument("energy_from_Eavg: all arguments must be positive");
  return E_avg * K * sigma2 / (M * Eh2);
}

PowerCheck check_power(const std::vector<double>& b_m,
                       const std::vector<double>& x_m, double E_m,
                       double tol) {
  if (b_m.size() != x_m.size())
    throw std::invalid_argument("check_power: length mismatch");
  if (tol < 0.0) tol = 1e-8 * std::max(1.0, E_m);
  double used = 0.0;
  for (std::size_t k = 0; k < b_m.size(); ++k) {
    const double s = b_m[k] * x_m[k];
    used += s * s;
  }
  PowerCheck out;
  out.slack = E_m - used;
  out.ok = used <= E_m + tol;
  return out;
}

}  // namespace blcd
