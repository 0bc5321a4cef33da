// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blcd/channel.hpp"
#include "blcd/matrix.hpp"

namespace blcd {

enum class Scheme {
  error_free,
  scheme1,
  scheme2,
  scheme3,
  scheme4,
  receiver_centric,
};

const char* to_string(Scheme s);
std::optional<Scheme> scheme_from_string(const std::string& name);

/// One round's transmit/receive coefficients: power scalings b (K x M),
/// receiver estimator coefficients alpha (K), and for scheme 2 the
/// per-device scale factors zeta (M).
struct PowerPlan {
  Matrix b;                   // K x M, nonnegative
  std::vector<double> alpha;  // K, nonnegative
  std::vector<double> zeta;   // M; empty unless scheme 2
  Scheme scheme = Scheme::error_free;
  bool degenerate = false;  // set when an all-zero payload forced b = 0
};

/// Bias/variance decomposition of the round's communication error over
/// channel noise: per-coordinate bias e_k, variance nu_k^2 = sigma2*alpha_k^2,
/// and mse = sum e^2 + sum nu^2.
struct ErrorDecomposition {
  std::vector<double> bias;      // e_k
  std::vector<double> variance;  // nu_k^2
  double mse = 0.0;

  double bias_norm() const;
  double bias_norm_sq() const;
  double variance_sum() const;
};

/// Analytic E_t[||eps_t||^2] of the estimator alpha .* y against the target
/// (1/M) sum_m x_km, decomposed into bias and variance.
ErrorDecomposition mse_objective(const std::vector<double>& alpha,
                                 const Matrix& b, const Matrix& x,
                                 const Matrix& h, double sigma2);

// ---------------------------------------------------------------------------
// Scheme 1: centralized biconvex minimization of the estimator MSE.
// ---------------------------------------------------------------------------

/// Closed-form optimal alpha for fixed b:
///   alpha_k = max{ (sum_m x_km)(sum_m b h x) / (M [sigma2 + (sum_m b h x)^2]), 0 }.
std::vector<double> scheme1_alpha_step(const Matrix& b, const Matrix& x,
                                       const Matrix& h, double sigma2, int M);

struct BStepResult {
  Matrix b;
  double objective = 0.0;      // full mse at the output
  double kkt_residual = 0.0;   // projected-gradient norm at the output
  bool converged = false;
  int iterations = 0;
};

/// Minimize the estimator MSE over b >= 0 for fixed alpha, subject to
/// sum_k (b_km x_km)^2 <= E_m per device. Projected gradient on
/// c_km = b_km |x_km| (per-device Euclidean ball); never increases the
/// objective. Coordinates with x_km = 0 stay at b = 0.
BStepResult scheme1_b_step(const std::vector<double>& alpha, const Matrix& x,
                           const Matrix& h, double sigma2,
                           const std::vector<double>& budgets, int iters,
                           double tol);

/// Same, warm-started from b_init (used by the biconvex alternation).
BStepResult scheme1_b_step(const std::vector<double>& alpha, const Matrix& x,
                           const Matrix& h, double sigma2,
                           const std::vector<double>& budgets, int iters,
                           double tol, const Matrix& b_init);

struct BiconvexResult {
  PowerPlan plan;
  std::vector<double> mse_trace;  // objective after each outer iteration
  bool converged = false;
  int outer_iterations = 0;
};

/// Alternate the alpha and b steps from a feasible initial plan. The trace
/// is non-increasing; stops when the relative decrease drops below tol.
BiconvexResult scheme1_biconvex(const Matrix& x, const Matrix& h,
                                double sigma2,
                                const std::vector<double>& budgets,
                                const PowerPlan& init, int outer_iters,
                                double tol);

// ---------------------------------------------------------------------------
// Scheme 2: distributed zero-bias device rule plus uniform receiver alpha.
// ---------------------------------------------------------------------------

struct Scheme2Device {
  double zeta = 0.0;
  std::vector<double> b;
  bool degenerate = false;  // all x_km = 0
};

/// Device rule zeta_m = sqrt(E_m / sum_k x^2/h^2), b_km = zeta_m / h_km.
/// Flat scaling b_km h_km = zeta_m on every transmitted coordinate; the
/// budget is used with equality. Coordinates with x_km = 0 get b = 0.
Scheme2Device scheme2_device(const std::vector<double>& x_m,
                             const std::vector<double>& h_m, double E_m);

/// Receiver rule alpha_k = 1 / sum_m zeta_m, uniform across k. The zeta sum
/// arrives over a noiseless control channel.
std::vector<double> scheme2_receiver(double zeta_sum, int K);

/// Large-K bias of scheme 2: e_k = sum_m (sqrt(E_m)/sum sqrt(E) - 1/M) x_km.
/// Vanishes identically under equal budgets.
std::vector<double> scheme2_large_k_bias(const Matrix& x,
                                         const std::vector<double>& budgets);

/// Large-K per-coordinate variance K*varpi2*(phi2 + xbar2)*sigma2 / (sum sqrt E)^2.
double scheme2_large_k_variance(int K, double varpi2, double x_second_moment,
                                double sigma2,
                                const std::vector<double>& budgets);

// ---------------------------------------------------------------------------
// Scheme 3: per-device water-filling (single-user optimum).
// ---------------------------------------------------------------------------

struct WaterfillResult {
  std::vector<double> b;
  std::vector<double> alpha;  // the device's own estimator coefficients
  double lambda = 0.0;        // water level multiplier
  double water_level = 0.0;   // lambda' = 1/sqrt(lambda)
  bool exact = false;         // active set resolved in closed form
};

/// Single-user optimum of the per-device MSE:
///   b_km^2 = [ sigma/(h|x| sqrt(lambda)) - sigma^2/(h^2 x^2) ]^+,
///   alpha_k = b h x^2 / (sigma2 + b^2 h^2 x^2),
/// with lambda set so the power constraint holds with equality. The water
/// level lambda' = 1/sqrt(lambda) is bracketed geometrically from [0, 1],
/// bisected to relative 1e-10, then resolved exactly on the active set.
WaterfillResult scheme3_waterfill(const std::vector<double>& x_m,
                                  const std::vector<double>& h_m,
                                  double sigma2, double E_m,
                                  double tol = 1e-10);

/// Statistical water-filling rule for the large-K regime, fitted on sample
/// pairs (x_i, h_i) so that the mean spent power equals E_bar.
struct LargeKRule {
  double lambda = 0.0;
  double water_level = 0.0;  // lambda' = 1/sqrt(lambda)
  double sigma2 = 0.0;

  double b(double x, double h) const;
  /// Predicted estimator variance sigma^2 / M^2 under alpha_k = 1/M.
  double predicted_variance(int M) const;
};

LargeKRule scheme3_large_k(const std::vector<double>& x_samples,
                           const std::vector<double>& h_samples, double sigma2,
                           double E_bar, double tol = 1e-10);

// ---------------------------------------------------------------------------
// Schemes 4 and the receiver-centric baseline.
// ---------------------------------------------------------------------------

struct Scheme4Device {
  std::vector<double> b;  // constant entries sqrt(E / sum x^2)
  bool degenerate = false;
};

/// Equal power allocation b_km = sqrt(E_m / sum_k x_km^2).
Scheme4Device scheme4_equal(const std::vector<double>& x_m, double E_m);

/// Receiver-centric device rule for fixed alpha_k = 1/(M p): use b = p/h when
/// feasible, otherwise shrink along the KKT path b = p h / (h^2 + lambda M^2 p^2)
/// until the budget binds.
std::vector<double> receiver_centric(const std::vector<double>& x_m,
                                     const std::vector<double>& h_m,
                                     double E_m, double p, int M);

/// Default p: the median over devices of sqrt(E_m / sum_k x^2/h^2).
double receiver_centric_default_p(const Matrix& x, const Matrix& h,
                                  const std::vector<double>& budgets);

// ---------------------------------------------------------------------------
// Round-level plan construction.
// ---------------------------------------------------------------------------

struct PlanOptions {
  int scheme1_outer_iters = 60;
  double scheme1_tol = 1e-9;
  int scheme1_b_iters = 400;
  std::optional<double> fixed_alpha;       // receiver coefficient override
  std::optional<double> receiver_centric_p;
};

/// Build the full transmit/receive plan for one round under the given
/// scheme. x and h are K x M. Every device column satisfies its budget.
PowerPlan build_plan(Scheme scheme, const Matrix& x, const Matrix& h,
                     double sigma2, const std::vector<double>& budgets,
                     const PlanOptions& opts = {});

}  // namespace blcd
