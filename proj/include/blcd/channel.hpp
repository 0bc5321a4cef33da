// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "blcd/matrix.hpp"
#include "blcd/rng.hpp"

namespace blcd {

/// E[h] = 1 parameterization of the fading: scale sqrt(2/pi).
inline constexpr double kRayleighMeanOneScale = 0.7978845608028654;  // sqrt(2/pi)
/// Second moment E[h^2] = 4/pi of the mean-1 Rayleigh gain.
inline constexpr double kRayleighSecondMoment = 1.2732395447351628;  // 4/pi

/// One round's fading state: K x M gains h_km plus the noise variance.
/// Immutable after creation.
struct ChannelRealization {
  Matrix h;  // K x M, all entries > 0
  double sigma2 = 1.0;
  long round = 0;

  int subcarriers() const { return h.rows; }
  int devices() const { return h.cols; }
};

/// Per-device transmit energy budgets E_m.
struct PowerBudget {
  std::vector<double> per_device;
};

/// Fresh i.i.d. mean-1 Rayleigh gains for one round.
ChannelRealization draw_fading(int K, int M, double sigma2, long round,
                               RngStream& stream);

/// Over-the-air superposition: y_k = sum_m h_km * payload_km + n_k with
/// n_k ~ N(0, sigma2). The receiver sees only the sum. Devices are summed
/// in ascending index order so results do not depend on scheduling.
/// sigma2 == 0 is the noise-suppressed limit (no draws consumed).
std::vector<double> mac_transmit(
    const std::vector<std::vector<double>>& payloads,
    const ChannelRealization& ch, RngStream& noise);

/// Invert E_avg = E * M * E[h^2] / (K * sigma2) for the per-device budget E.
double energy_from_Eavg(double E_avg, int M, int K, double sigma2, double Eh2);

struct PowerCheck {
  bool ok = false;
  double slack = 0.0;  // E_m - sum_k (b_km x_km)^2
};

/// Check the per-device constraint sum_k (b_km x_km)^2 <= E_m + tol.
PowerCheck check_power(const std::vector<double>& b_m,
                       const std::vector<double>& x_m, double E_m,
                       double tol = -1.0);

}  // namespace blcd
