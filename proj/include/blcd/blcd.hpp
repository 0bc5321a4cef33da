// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <vector>

#include "blcd/compression.hpp"
#include "blcd/config.hpp"
#include "blcd/learn.hpp"
#include "blcd/power.hpp"

namespace blcd {

/// Raised when a run hits non-finite weights or gradients.
struct RunAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainerState {
  std::vector<double> w;
  std::vector<DeviceMemory> memories;
  std::vector<std::vector<int>> shards;  // train-row indices per device
  long round = 0;
};

/// Everything measured in one round.
struct RoundTrace {
  long round = 0;
  CoordinateSet coords;
  std::vector<double> g_true;  // (1/M) sum_m C_t(u^m) on selected coords
  std::vector<double> g_hat;   // receiver estimate on selected coords
  std::vector<double> eps;     // g_hat - g_true
  double bias_norm = 0.0;      // ||E_t[eps]||_2 analytic
  double var_sum = 0.0;        // sum_k nu_k^2 analytic
  double comm_mse = 0.0;       // sum e^2 + sum nu^2 analytic
  double mem_norm_sq = 0.0;    // ||(1/M) sum_m r_t^m||^2 at round start
  double max_device_grad_sq = 0.0;

  // Probe-round measurements at w_t (NaN when not probed).
  double grad_norm = std::numeric_limits<double>::quiet_NaN();
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double test_loss = std::numeric_limits<double>::quiet_NaN();
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();

  bool probed() const { return grad_norm == grad_norm; }
};

struct LocalStepResult {
  std::vector<double> u;            // gamma * g + r
  std::vector<double> transmitted;  // C_t(u)
  std::vector<double> new_memory;   // u - C_t(u)
  double loss = 0.0;
  double grad_norm_sq = 0.0;
};

/// One device's half of a round: stochastic gradient, memory fold-in,
/// sparsified split. Throws RunAbort on non-finite gradients.
LocalStepResult local_step(const DeviceMemory& memory,
                           const std::vector<double>& w, const Model& model,
                           const Dataset& train, std::span<const int> batch,
                           double gamma, const CoordinateSet& coords);

/// The deterministic, channel-free part of a round: selection, per-device
/// local steps, the power plan, and the analytic error decomposition.
/// Does not mutate the trainer state.
struct RoundPlan {
  CoordinateSet coords;
  Matrix x;  // K x M selected coordinate values per device
  Matrix h;  // K x M fading (unused by error_free)
  PowerPlan plan;
  std::vector<double> g_true;                    // K
  std::vector<std::vector<double>> new_memories;  // per device, length d
  ErrorDecomposition err;
  double mem_norm_sq = 0.0;
  double max_device_grad_sq = 0.0;
};

RoundPlan prepare_round(const TrainerState& state, const Model& model,
                        const Dataset& train, const RunConfig& cfg, long t);

/// Channel half of the round: transmit and estimate. Returns G_hat on the
/// selected coordinates. Re-runnable with fresh noise streams.
std::vector<double> simulate_reception(const RoundPlan& rp, double sigma2,
                                       RngStream& noise);

/// Commit a round: w_{t+1} = w_t - embed(g_hat), memories advance.
void apply_update(TrainerState& state, const RoundPlan& rp,
                  const std::vector<double>& g_hat);

/// One full communication round (prepare, transmit, estimate, update) with a
/// trace. Probe measurements are filled in by the caller.
RoundTrace execute_round(TrainerState& state, const Model& model,
                         const Dataset& train, const RunConfig& cfg, long t);

struct FinalEval {
  double grad_norm = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

struct RunResult {
  std::vector<RoundTrace> traces;  // one per executed round
  FinalEval final_eval;            // measured at w_T
  std::vector<double> final_w;
  double f0 = 0.0;  // full-batch train loss at w_0
};

TrainerState make_initial_state(const Model& model, const Dataset& train,
                                const RunConfig& cfg);

/// Run T rounds with evaluation every eval_interval rounds (plus the final
/// state). Bit-reproducible for a fixed config and seed.
RunResult run(const RunConfig& cfg, const Model& model, const Dataset& train,
              const Dataset& test);

}  // namespace blcd
