// SPDX-License-Identifier: Apache-2.0
#include "blcd/blcd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blcd/channel.hpp"

namespace blcd {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double t : v)
    if (!std::isfinite(t)) return false;
  return true;
}

double norm_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return s;
}

}  // namespace

LocalStepResult local_step(const DeviceMemory& memory,
                           const std::vector<double>& w, const Model& model,
                           const Dataset& train, std::span<const int> batch,
                           double gamma, const CoordinateSet& coords) {
  if (!(gamma > 0.0)) throw std::invalid_argument("local_step: gamma must be > 0");
  auto g = model.gradient(w, train, batch);
  if (!all_finite(g.grad))
    throw RunAbort("local_step: non-finite gradient on device " +
                   std::to_string(memory.device_id));
  LocalStepResult out;
  out.loss = g.loss;
  out.grad_norm_sq = norm_sq(g.grad);
  out.u.resize(w.size());
  for (std::size_t j = 0; j < w.size(); ++j)
    out.u[j] = gamma * g.grad[j] + memory.r[j];
  auto split = update_memory(out.u, coords);
  out.transmitted = std::move(split.transmitted);
  out.new_memory = std::move(split.memory);
  return out;
}

TrainerState make_initial_state(const Model& model, const Dataset& train,
                                const RunConfig& cfg) {
  if (train.size() < cfg.M)
    throw std::invalid_argument("run: fewer training rows than devices");
  TrainerState state;
  RngStream init = substream(cfg.seed, "init");
  state.w = model.init_weights(init);
  state.memories.resize(cfg.M);
  for (int m = 0; m < cfg.M; ++m) {
    state.memories[m].r.assign(model.dim(), 0.0);
    state.memories[m].device_id = m;
  }
  // Random i.i.d. shards: one shuffle, M contiguous slices.
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  RngStream shuffle = substream(cfg.seed, "shard");
  for (int i = train.size() - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle.next_below(i + 1));
    std::swap(order[i], order[j]);
  }
  state.shards.resize(cfg.M);
  const int n = train.size();
  for (int m = 0; m < cfg.M; ++m) {
    const int lo = static_cast<int>(static_cast<long>(n) * m / cfg.M);
    const int hi = static_cast<int>(static_cast<long>(n) * (m + 1) / cfg.M);
    state.shards[m].assign(order.begin() + lo, order.begin() + hi);
  }
  return state;
}

RoundPlan prepare_round(const TrainerState& state, const Model& model,
                        const Dataset& train, const RunConfig& cfg, long t) {
  const int d = model.dim();
  const int K = cfg.K;
  const int M = cfg.M;

  // Per-device batches and local gradient steps. Devices are independent;
  // every random draw is keyed by (seed, purpose, round, device), so the
  // schedule cannot change results.
  std::vector<std::vector<int>> batches(M);
  for (int m = 0; m < M; ++m) {
    RngStream bs = substream(cfg.seed, "batch", static_cast<std::uint64_t>(t),
                             static_cast<std::uint64_t>(m));
    const auto& shard = state.shards[m];
    batches[m].resize(cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i)
      batches[m][i] = shard[bs.next_below(shard.size())];
  }

  std::vector<GradResult> grads(M);
  std::vector<std::string> failures(M);
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    try {
      grads[m] = model.gradient(state.w, train, batches[m]);
    } catch (const std::exception& e) {
      failures[m] = e.what();
    }
  }
  for (int m = 0; m < M; ++m)
    if (!failures[m].empty()) throw RunAbort(failures[m]);

  std::vector<std::vector<double>> u(M);
  double max_g2 = 0.0;
  for (int m = 0; m < M; ++m) {
    if (!all_finite(grads[m].grad))
      throw RunAbort("round " + std::to_string(t) +
                     ": non-finite gradient on device " + std::to_string(m));
    max_g2 = std::max(max_g2, norm_sq(grads[m].grad));
    u[m].resize(d);
    for (int j = 0; j < d; ++j)
      u[m][j] = cfg.gamma * grads[m].grad[j] + state.memories[m].r[j];
  }

  RoundPlan rp;
  if (cfg.selection == SelectionKind::uniform) {
    rp.coords = select_coordinates(d, K, cfg.seed, t);
  } else {
    std::vector<double> usum(d, 0.0);
    for (int m = 0; m < M; ++m)
      for (int j = 0; j < d; ++j) usum[j] += u[m][j];
    rp.coords = select_top_k(usum, K, t);
  }

  rp.x = Matrix(K, M);
  rp.new_memories.resize(M);
  for (int m = 0; m < M; ++m) {
    auto split = update_memory(u[m], rp.coords);
    rp.new_memories[m] = std::move(split.memory);
    for (int k = 0; k < K; ++k) rp.x(k, m) = split.transmitted[rp.coords.indices[k]];
  }

  rp.g_true.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    double s = 0.0;
    for (int m = 0; m < M; ++m) s += rp.x(k, m);
    rp.g_true[k] = s / M;
  }

  // Memory norm at round start (before this round's fold-in).
  std::vector<double> rbar(d, 0.0);
  for (int m = 0; m < M; ++m)
    for (int j = 0; j < d; ++j) rbar[j] += state.memories[m].r[j] / M;
  rp.mem_norm_sq = norm_sq(rbar);
  rp.max_device_grad_sq = max_g2;

  if (cfg.scheme == Scheme::error_free) {
    rp.plan.scheme = Scheme::error_free;
    rp.err.bias.assign(K, 0.0);
    rp.err.variance.assign(K, 0.0);
    rp.err.mse = 0.0;
    return rp;
  }

  RngStream fading = substream(cfg.seed, "fading", static_cast<std::uint64_t>(t));
  const auto ch = draw_fading(K, M, cfg.sigma2, t, fading);
  rp.h = ch.h;

  PlanOptions opts;
  opts.scheme1_outer_iters = cfg.scheme1_outer_iters;
  opts.scheme1_tol = cfg.scheme1_tol;
  opts.scheme1_b_iters = cfg.scheme1_b_iters;
  opts.fixed_alpha = cfg.fixed_alpha;
  opts.receiver_centric_p = cfg.receiver_centric_p;
  rp.plan = build_plan(cfg.scheme, rp.x, rp.h, cfg.sigma2,
                       cfg.budgets().per_device, opts);
  rp.err = mse_objective(rp.plan.alpha, rp.plan.b, rp.x, rp.h, cfg.sigma2);
  return rp;
}

std::vector<double> simulate_reception(const RoundPlan& rp, double sigma2,
                                       RngStream& noise) {
  if (rp.plan.scheme == Scheme::error_free) return rp.g_true;
  const int K = rp.x.rows;
  const int M = rp.x.cols;
  std::vector<std::vector<double>> payloads(M, std::vector<double>(K));
  for (int m = 0; m < M; ++m)
    for (int k = 0; k < K; ++k) payloads[m][k] = rp.plan.b(k, m) * rp.x(k, m);
  ChannelRealization ch;
  ch.h = rp.h;
  ch.sigma2 = sigma2;
  const auto y = mac_transmit(payloads, ch, noise);
  std::vector<double> g_hat(K);
  for (int k = 0; k < K; ++k) g_hat[k] = rp.plan.alpha[k] * y[k];
  return g_hat;
}

void apply_update(TrainerState& state, const RoundPlan& rp,
                  const std::vector<double>& g_hat) {
  const int K = rp.coords.k();
  for (int k = 0; k < K; ++k) state.w[rp.coords.indices[k]] -= g_hat[k];
  if (!all_finite(state.w))
    throw RunAbort("round " + std::to_string(state.round) +
                   ": model weights became non-finite");
  for (std::size_t m = 0; m < state.memories.size(); ++m)
    state.memories[m].r = rp.new_memories[m];
  ++state.round;
}

RoundTrace execute_round(TrainerState& state, const Model& model,
                         const Dataset& train, const RunConfig& cfg, long t) {
  RoundPlan rp = prepare_round(state, model, train, cfg, t);
  RngStream noise = substream(cfg.seed, "noise", static_cast<std::uint64_t>(t));
  const auto g_hat = simulate_reception(rp, cfg.sigma2, noise);

  RoundTrace trace;
  trace.round = t;
  trace.coords = rp.coords;
  trace.g_true = rp.g_true;
  trace.g_hat = g_hat;
  trace.eps.resize(g_hat.size());
  for (std::size_t k = 0; k < g_hat.size(); ++k)
    trace.eps[k] = g_hat[k] - rp.g_true[k];
  trace.bias_norm = rp.err.bias_norm();
  trace.var_sum = rp.err.variance_sum();
  trace.comm_mse = rp.err.mse;
  trace.mem_norm_sq = rp.mem_norm_sq;
  trace.max_device_grad_sq = rp.max_device_grad_sq;

  apply_update(state, rp, g_hat);
  return trace;
}

RunResult run(const RunConfig& cfg, const Model& model, const Dataset& train,
              const Dataset& test) {
  TrainerState state = make_initial_state(model, train, cfg);
  RunResult result;

  auto probe = [&](RoundTrace* trace) {
    const auto fg = model.full_gradient(state.w, train);
    const auto te = model.evaluate(state.w, test);
    if (trace != nullptr) {
      trace->grad_norm = std::sqrt(norm_sq(fg.grad));
      trace->train_loss = fg.loss;
      trace->test_loss = te.loss;
      trace->test_accuracy = te.accuracy;
    } else {
      result.final_eval.grad_norm = std::sqrt(norm_sq(fg.grad));
      result.final_eval.train_loss = fg.loss;
      result.final_eval.test_loss = te.loss;
      result.final_eval.test_accuracy = te.accuracy;
    }
  };

  result.f0 = model.full_gradient(state.w, train).loss;
  result.traces.reserve(cfg.T);
  for (long t = 0; t < cfg.T; ++t) {
    const bool probed = cfg.eval_interval > 0 && t % cfg.eval_interval == 0;
    RoundTrace trace;
    if (probed) {
      // Measure at w_t before the update so probes align with the iterate.
      trace = RoundTrace{};
      probe(&trace);
      RoundTrace executed = execute_round(state, model, train, cfg, t);
      executed.grad_norm = trace.grad_norm;
      executed.train_loss = trace.train_loss;
      executed.test_loss = trace.test_loss;
      executed.test_accuracy = trace.test_accuracy;
      result.traces.push_back(std::move(executed));
    } else {
      result.traces.push_back(execute_round(state, model, train, cfg, t));
    }
  }
  probe(nullptr);
  result.final_w = state.w;
  return result;
}

}  // namespace blcd
