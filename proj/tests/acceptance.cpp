// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each numbered check prints one PASS/FAIL
// line with its runtime; the binary exits nonzero if any check fails.
//
//   blcd_acceptance           run everything
//   blcd_acceptance --only N  run a single check (dependencies rerun)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "blcd/blcd.hpp"
#include "blcd/diagnostics.hpp"
#include "blcd/experiment.hpp"
#include "oracles.hpp"

using namespace blcd;

namespace {

struct CheckResult {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Compression contract
// ---------------------------------------------------------------------------

CheckResult check_compression() {
  CheckResult r;
  const std::pair<int, int> cases[] = {{100, 10}, {7840, 64}};
  for (const auto& [d, k] : cases) {
    RngStream s = substream(2024, "acc1-x", d);
    std::vector<double> x(d);
    double xn = 0.0;
    for (auto& v : x) {
      v = s.next_gaussian();
      xn += v * v;
    }
    const int draws = 10000;
    double acc = 0.0;
    for (int t = 0; t < draws; ++t) {
      const auto cs = select_coordinates(d, k, 515, t);
      double kept = 0.0;
      for (int j : cs.indices) kept += x[j] * x[j];
      acc += (xn - kept) / xn;
    }
    const double mean = acc / draws;
    const double want = 1.0 - compression_delta(d, k);
    r.require(std::abs(mean - want) < 0.01,
              "(d=" + std::to_string(d) + ",k=" + std::to_string(k) +
                  ") mean " + fmt(mean) + " vs " + fmt(want));
    if (r.detail.empty())
      r.detail = "max |mean - (1-k/d)| within 0.01 for both sizes";
  }
  return r;
}

// ---------------------------------------------------------------------------
// 2. Scheme 2 zero bias under equal budgets
// ---------------------------------------------------------------------------

CheckResult check_scheme2_zero_bias() {
  CheckResult r;
  const int K = 64, M = 8;
  RngStream s = substream(2024, "acc2");
  double worst_large_k = 0.0, worst_pipeline = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    Matrix x(K, M), h(K, M);
    for (auto& v : x.data) v = s.next_gaussian();
    for (auto& v : h.data) v = s.next_rayleigh_mean1();
    const std::vector<double> budgets(M, 0.5 + s.next_unit());

    // the large-K analytic bias: coefficient sqrt(E)/sum sqrt(E) - 1/M = 0
    const auto bias = scheme2_large_k_bias(x, budgets);
    for (double e : bias) worst_large_k = std::max(worst_large_k, std::abs(e));

    // finite-K pipeline on denominator-matched gains: zeta_m all equal, so
    // the finite-K measured bias cancels too
    for (int m = 0; m < M; ++m) {
      double D = 0.0;
      for (int k = 0; k < K; ++k) D += x(k, m) * x(k, m) / (h(k, m) * h(k, m));
      const double scale = std::sqrt(D);
      for (int k = 0; k < K; ++k) h(k, m) *= scale;
    }
    const auto plan = build_plan(Scheme::scheme2, x, h, 1.0, budgets);
    const auto err = mse_objective(plan.alpha, plan.b, x, h, 1.0);
    for (double e : err.bias)
      worst_pipeline = std::max(worst_pipeline, std::abs(e));
  }
  r.require(worst_large_k < 1e-12, "large-K bias " + fmt(worst_large_k));
  r.require(worst_pipeline < 1e-12, "pipeline bias " + fmt(worst_pipeline));
  r.detail = "max analytic |e_k| = " + fmt(worst_large_k) +
             ", matched-denominator pipeline |e_k| = " + fmt(worst_pipeline);
  return r;
}

// ---------------------------------------------------------------------------
// 3. Water-filling KKT certificate
// ---------------------------------------------------------------------------

CheckResult check_waterfill_kkt() {
  CheckResult r;
  // the single-carrier closed form must come out exactly
  const auto unit = scheme3_waterfill({1.0}, {1.0}, 1.0, 1.0);
  r.require(unit.b[0] == 1.0 && unit.alpha[0] == 0.5 && unit.lambda == 0.25,
            "K=1 analytic case not exact: b=" + fmt(unit.b[0]) +
                " alpha=" + fmt(unit.alpha[0]) +
                " lambda=" + fmt(unit.lambda));

  RngStream s = substream(2024, "acc3");
  const int Ks[3] = {1, 4, 64};
  double worst_power = 0.0, worst_stat = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int K = Ks[inst % 3];
    std::vector<double> x(K), h(K);
    for (int k = 0; k < K; ++k) {
      x[k] = s.next_gaussian();
      if (x[k] == 0.0) x[k] = 0.25;
      h[k] = s.next_rayleigh_mean1();
    }
    const double sigma2 = 0.5 + s.next_unit();
    const double E = 0.5 + 2.0 * s.next_unit();
    const auto wf = scheme3_waterfill(x, h, sigma2, E);
    double used = 0.0;
    for (int k = 0; k < K; ++k) used += wf.b[k] * wf.b[k] * x[k] * x[k];
    worst_power = std::max(worst_power, std::abs(used - E) / E);
    for (int k = 0; k < K; ++k) {
      const double ht = h[k] * h[k] / sigma2;
      const double xt = 1.0 / (x[k] * x[k]);
      const double bt = wf.b[k] * wf.b[k];
      if (bt > 0.0) {
        const double stat = ht * xt / ((bt * ht + xt) * (bt * ht + xt));
        worst_stat =
            std::max(worst_stat, std::abs(stat - wf.lambda) / wf.lambda);
      } else {
        // complementary slackness: lambda >= h^2 x^2 / sigma^2
        const double violation = ht / xt - wf.lambda;
        worst_stat = std::max(worst_stat,
                              violation > 0 ? violation / wf.lambda : 0.0);
      }
    }
  }
  r.require(worst_power < 1e-8, "power residual " + fmt(worst_power));
  r.require(worst_stat < 1e-6, "KKT residual " + fmt(worst_stat));
  r.detail = "power residual " + fmt(worst_power) + ", stationarity/CS " +
             fmt(worst_stat);
  return r;
}

// ---------------------------------------------------------------------------
// 4. Scheme 1 dominance
// ---------------------------------------------------------------------------

CheckResult check_scheme1_dominance() {
  CheckResult r;
  RngStream s = substream(2024, "acc4");
  double worst_gap = -1e300, worst_mono = 0.0, worst_grid = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int K = 2 << (inst % 3);  // 2, 4, 8
    const int M = 1 << (inst % 3);  // 1, 2, 4
    Matrix x(K, M), h(K, M);
    for (auto& v : x.data) v = s.next_gaussian();
    for (auto& v : h.data) v = s.next_rayleigh_mean1();
    std::vector<double> budgets(M);
    for (auto& e : budgets) e = 0.3 + 2.0 * s.next_unit();
    const double sigma2 = 0.5 + s.next_unit();

    PowerPlan candidates[3] = {
        build_plan(Scheme::scheme2, x, h, sigma2, budgets),
        build_plan(Scheme::scheme3, x, h, sigma2, budgets),
        build_plan(Scheme::scheme4, x, h, sigma2, budgets)};
    double best = 1e300;
    int best_i = 0;
    for (int i = 0; i < 3; ++i) {
      const double m =
          mse_objective(candidates[i].alpha, candidates[i].b, x, h, sigma2)
              .mse;
      if (m < best) {
        best = m;
        best_i = i;
      }
    }
    PowerPlan init = candidates[best_i];
    init.zeta.clear();
    const auto bc = scheme1_biconvex(x, h, sigma2, budgets, init, 100, 1e-10);
    const double final_mse = bc.mse_trace.back();
    worst_gap = std::max(worst_gap, final_mse - best);
    for (std::size_t i = 1; i < bc.mse_trace.size(); ++i)
      worst_mono =
          std::max(worst_mono, bc.mse_trace[i] - bc.mse_trace[i - 1]);
    if (K == 2 && M == 1) {
      const double grid = oracles::grid_search_k2_m1(
          x.column(0), h.column(0), sigma2, budgets[0]);
      worst_grid = std::max(worst_grid, std::abs(final_mse - grid));
    }
  }
  r.require(worst_gap <= 1e-12, "dominance gap " + fmt(worst_gap));
  r.require(worst_mono <= 1e-12, "trace increase " + fmt(worst_mono));
  r.require(worst_grid < 1e-3, "grid-oracle gap " + fmt(worst_grid));
  r.detail = "final-vs-best gap " + fmt(worst_gap) + ", grid gap " +
             fmt(worst_grid);
  return r;
}

// ---------------------------------------------------------------------------
// 5. Gradient correctness
// ---------------------------------------------------------------------------

CheckResult check_gradients() {
  CheckResult r;
  RngStream s = substream(2024, "acc5");
  const Dataset raw = make_synthetic(60, 6, 1.2, 777);
  const Dataset aug = augment_bias(raw);
  LogisticModel logreg(aug.X.cols, 0.02);
  MlpModel mlp(6, 8, 2, 0.02);
  double worst = 0.0;
  for (int probe = 0; probe < 100; ++probe) {
    const bool lin = probe % 2 == 0;
    const Model& model =
        lin ? static_cast<const Model&>(logreg) : static_cast<const Model&>(mlp);
    const Dataset& data = lin ? aug : raw;
    std::vector<int> rows(5);
    for (auto& i : rows) i = static_cast<int>(s.next_below(60));
    std::vector<double> w(model.dim());
    for (auto& v : w) v = 0.6 * s.next_gaussian();
    const auto g = model.gradient(w, data, rows);
    const auto fd = oracles::fd_gradient(model, w, data, rows, 1e-6);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < model.dim(); ++j) {
      num += (g.grad[j] - fd[j]) * (g.grad[j] - fd[j]);
      den += fd[j] * fd[j];
    }
    worst = std::max(worst, std::sqrt(num) / std::max(1.0, std::sqrt(den)));
  }
  r.require(worst < 1e-4, "relative error " + fmt(worst));
  r.detail = "worst relative gradient error " + fmt(worst);
  return r;
}

// ---------------------------------------------------------------------------
// 6/7. Convergence inequality and the memory bound on the same runs
// ---------------------------------------------------------------------------

struct BoundRun {
  Scheme scheme;
  std::uint64_t seed;
  BoundReport report;
  bool memory_ok;
};

struct BoundArtifacts {
  std::vector<BoundRun> runs;
  bool computed = false;
};

BoundArtifacts& bound_artifacts() {
  static BoundArtifacts art;
  if (art.computed) return art;

  RunConfig base;
  base.model = ModelKind::logreg;
  base.features = 20;
  base.n_train = 2000;
  base.n_test = 500;
  base.margin = 4.0;  // keeps L above 1 so the bias amplification is positive
  base.l2 = 0.05;
  base.M = 8;
  base.K = 16;  // of d = 21
  base.T = 2000;
  base.batch_size = 4;
  base.gamma = 0.01;
  base.sigma2 = 1.0;
  base.E_avg = 0.1;
  base.eval_interval = 50;
  base.rho = 1.0;

  const Scheme schemes[] = {Scheme::error_free, Scheme::scheme1,
                            Scheme::scheme2,    Scheme::scheme3,
                            Scheme::scheme4,    Scheme::receiver_centric};
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    RunConfig cfg = base;
    cfg.seed = seed;
    Problem prob = make_problem(cfg);
    const double L = smoothness_constant(prob.train, cfg.l2);

    std::vector<RunResult> results;
    double max_g2 = 0.0, min_loss = 1e300, f0 = 0.0;
    for (Scheme sch : schemes) {
      cfg.scheme = sch;
      results.push_back(run(cfg, *prob.model, prob.train, prob.test));
      const auto& res = results.back();
      f0 = res.f0;
      for (const auto& t : res.traces) {
        max_g2 = std::max(max_g2, t.max_device_grad_sq);
        if (t.probed()) min_loss = std::min(min_loss, t.train_loss);
      }
    }
    // f*: polish with full-batch descent from the error-free final iterate
    const double fstar =
        std::min(min_loss, estimate_fstar(*prob.model, prob.train,
                                          results[0].final_w, 1.0 / L, 3000));

    BoundParams params;
    params.L = L;
    params.G2 = cfg.g2_safety * max_g2;
    params.f0_minus_fstar = f0 - fstar;
    params.gamma = cfg.gamma;
    params.rho = cfg.rho;
    params.delta = compression_delta(cfg.dim(), cfg.K);
    params.total_rounds = cfg.T;

    for (std::size_t i = 0; i < results.size(); ++i) {
      BoundRun tr;
      tr.scheme = schemes[i];
      tr.seed = seed;
      tr.report = convergence_bound_report(results[i].traces, params);
      tr.memory_ok = memory_bound_check(results[i].traces, params.delta,
                                        cfg.gamma, params.G2)
                         .all_within;
      art.runs.push_back(tr);
    }
  }
  art.computed = true;
  return art;
}

CheckResult check_convergence_bound() {
  CheckResult r;
  const auto& art = bound_artifacts();
  double worst_margin = 1e300;
  for (const auto& tr : art.runs) {
    r.require(tr.report.holds,
              std::string(to_string(tr.scheme)) + " seed " +
                  std::to_string(tr.seed) + ": lhs " + fmt(tr.report.lhs) +
                  " > rhs " + fmt(tr.report.rhs));
    worst_margin = std::min(worst_margin, tr.report.rhs - tr.report.lhs);
  }
  r.detail = std::to_string(art.runs.size()) +
             " runs (6 schemes x 3 seeds), smallest rhs-lhs slack " +
             fmt(worst_margin);
  return r;
}

CheckResult check_memory_bound() {
  CheckResult r;
  const auto& art = bound_artifacts();
  for (const auto& tr : art.runs)
    r.require(tr.memory_ok, std::string(to_string(tr.scheme)) + " seed " +
                                std::to_string(tr.seed) +
                                " exceeded the memory bound");
  r.detail =
      "running-mean memory norm within 4(1-delta)/delta^2 gamma^2 G2 on all " +
      std::to_string(art.runs.size()) + " runs";
  return r;
}

// ---------------------------------------------------------------------------
// 8/9. Qualitative ordering and the SNR trend
// ---------------------------------------------------------------------------

struct OrderingArtifacts {
  // mean final test accuracy over seeds, keyed by scheme tag
  std::map<std::string, double> accuracy;
  bool computed = false;
};

RunConfig ordering_config() {
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.features = 20;
  cfg.n_train = 2000;
  cfg.n_test = 2000;
  cfg.margin = 1.0;
  cfg.M = 8;
  cfg.K = 16;
  cfg.T = 2000;
  cfg.batch_size = 4;
  cfg.gamma = 0.05;
  cfg.sigma2 = 1.0;
  cfg.eval_interval = 1000;
  return cfg;
}

OrderingArtifacts& ordering_artifacts() {
  static OrderingArtifacts art;
  if (art.computed) return art;
  struct Cell {
    Scheme scheme;
    double eavg;
    const char* tag;
  };
  const Cell cells[] = {{Scheme::error_free, 0.1, "error_free"},
                        {Scheme::scheme1, 0.1, "scheme1"},
                        {Scheme::scheme2, 0.1, "scheme2@0.1"},
                        {Scheme::scheme3, 0.1, "scheme3"},
                        {Scheme::scheme2, 10.0, "scheme2@10"}};
  for (const auto& cell : cells) {
    double acc = 0.0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
      RunConfig cfg = ordering_config();
      cfg.scheme = cell.scheme;
      cfg.E_avg = cell.eavg;
      cfg.seed = seed;
      Problem prob = make_problem(cfg);
      const auto res = run(cfg, *prob.model, prob.train, prob.test);
      acc += res.final_eval.test_accuracy / 5.0;
    }
    art.accuracy[cell.tag] = acc;
  }
  art.computed = true;
  return art;
}

CheckResult check_ordering() {
  CheckResult r;
  const auto& acc = ordering_artifacts().accuracy;
  const double ef = acc.at("error_free");
  const double s1 = acc.at("scheme1");
  const double s2 = acc.at("scheme2@0.1");
  const double s3 = acc.at("scheme3");
  const double band = 0.01;
  r.require(ef >= s1 - band, "error_free " + fmt(ef) + " < scheme1 " + fmt(s1));
  r.require(s1 >= s2 - band, "scheme1 " + fmt(s1) + " < scheme2 " + fmt(s2));
  r.require(s1 >= s3 - band, "scheme1 " + fmt(s1) + " < scheme3 " + fmt(s3));
  r.detail = "5-seed accuracy: error_free " + fmt(ef) + ", scheme1 " + fmt(s1) +
             ", scheme2 " + fmt(s2) + ", scheme3 " + fmt(s3);
  return r;
}

CheckResult check_snr_trend() {
  CheckResult r;
  const auto& acc = ordering_artifacts().accuracy;
  const double ef = acc.at("error_free");
  const double lo = acc.at("scheme2@0.1");
  const double hi = acc.at("scheme2@10");
  r.require(std::abs(hi - ef) <= 0.01,
            "scheme2@10 " + fmt(hi) + " not within 1pp of error_free " +
                fmt(ef));
  r.require(hi > lo,
            "scheme2@10 " + fmt(hi) + " not above scheme2@0.1 " + fmt(lo));
  r.detail = "scheme2: " + fmt(lo) + " at E_avg=0.1 vs " + fmt(hi) +
             " at E_avg=10 (error_free " + fmt(ef) + ")";
  return r;
}

// ---------------------------------------------------------------------------
// 10. Oracle equivalence with plain SGD
// ---------------------------------------------------------------------------

CheckResult check_sgd_equivalence() {
  CheckResult r;
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.features = 20;
  cfg.n_train = 400;
  cfg.n_test = 100;
  cfg.margin = 1.5;
  cfg.M = 8;
  cfg.K = cfg.dim();  // full selection
  cfg.T = 100;
  cfg.batch_size = 4;
  cfg.gamma = 0.01;
  cfg.scheme = Scheme::error_free;
  cfg.E_avg = 1.0;
  cfg.eval_interval = 50;
  Problem prob = make_problem(cfg);
  const auto res = run(cfg, *prob.model, prob.train, prob.test);
  const auto ref = oracles::reference_sgd(*prob.model, prob.train, cfg.seed,
                                          cfg.M, cfg.batch_size, cfg.gamma,
                                          cfg.T);
  double worst = 0.0;
  for (int j = 0; j < prob.model->dim(); ++j)
    worst = std::max(worst, std::abs(res.final_w[j] - ref[j]));
  r.require(worst <= 1e-12, "per-coordinate gap " + fmt(worst));
  r.detail = "max per-coordinate gap after 100 rounds: " + fmt(worst);
  return r;
}

// ---------------------------------------------------------------------------
// 11. Byte reproducibility
// ---------------------------------------------------------------------------

CheckResult check_reproducibility() {
  CheckResult r;
  RunConfig cfg;
  cfg.model = ModelKind::logreg;
  cfg.features = 12;
  cfg.n_train = 400;
  cfg.n_test = 100;
  cfg.M = 4;
  cfg.K = 8;
  cfg.T = 200;
  cfg.scheme = Scheme::scheme2;
  cfg.E_avg = 0.5;
  cfg.eval_interval = 50;
  auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  cfg.out = "/tmp/blcd_acc_repro_a.csv";
  const auto a = run_experiment(cfg);
  cfg.out = "/tmp/blcd_acc_repro_b.csv";
  const auto b = run_experiment(cfg);
  const std::string ca = slurp(a.csv_path), cb = slurp(b.csv_path);
  r.require(!ca.empty(), "empty CSV");
  r.require(ca == cb, "CSV bytes differ between identical runs");
  r.require(slurp(a.report_path) == slurp(b.report_path),
            "report bytes differ between identical runs");
  for (const auto& p : {a.csv_path, b.csv_path, a.report_path, b.report_path})
    std::remove(p.c_str());
  r.detail = "CSV and report byte-identical across reruns";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
      only = std::atoi(argv[i + 1]);

  struct Check {
    int id;
    const char* name;
    double time_limit_s;  // 0 = none stated
    std::function<CheckResult()> fn;
  };
  const std::vector<Check> checks = {
      {1, "compression contract", 10, check_compression},
      {2, "scheme 2 zero bias under equal budgets", 1, check_scheme2_zero_bias},
      {3, "water-filling KKT certificate", 5, check_waterfill_kkt},
      {4, "scheme 1 dominance and grid oracle", 60, check_scheme1_dominance},
      {5, "gradient correctness (finite differences)", 30, check_gradients},
      {6, "convergence inequality on every scheme", 300, check_convergence_bound},
      {7, "error-feedback memory bound", 0, check_memory_bound},
      {8, "qualitative scheme ordering at low SNR", 600, check_ordering},
      {9, "SNR trend for the distributed scheme", 600, check_snr_trend},
      {10, "plain-SGD equivalence under full selection", 0,
       check_sgd_equivalence},
      {11, "byte-identical reruns", 0, check_reproducibility},
  };

  int failures = 0;
  for (const auto& c : checks) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult result;
    try {
      result = c.fn();
    } catch (const std::exception& e) {
      result.pass = false;
      result.detail = std::string("exception: ") + e.what();
    }
    const double secs = elapsed_s(t0);
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      result.pass = false;
      result.detail += (result.detail.empty() ? "" : "; ") +
                       std::string("runtime ") + fmt(secs) + "s exceeded " +
                       fmt(c.time_limit_s) + "s";
    }
    std::printf("[%2d] %-4s %-45s (%7.2fs) %s\n", c.id,
                result.pass ? "PASS" : "FAIL", c.name, secs,
                result.detail.c_str());
    std::fflush(stdout);
    if (!result.pass) ++failures;
  }
  if (failures > 0) {
    std::printf("%d acceptance check(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance checks passed\n");
  return 0;
}
