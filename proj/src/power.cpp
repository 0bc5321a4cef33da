// SPDX-License-Identifier: Apache-2.0
#include "blcd/power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace blcd {

namespace {

void check_grid(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" +
                                std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows) + "x" +
                                std::to_string(b.cols) + ")");
}

double sq(double v) { return v * v; }

/// Solve sum_k [level * a_k - c_k]^+ = target for the water level.
/// Piecewise linear and nondecreasing in the level; bracketed geometrically
/// from [0, 1], bisected, then resolved exactly on the located active set.
struct WaterLevelSolution {
  double level = 0.0;
  bool exact = false;
};

WaterLevelSolution solve_water_level(const std::vector<double>& a,
                                     const std::vector<double>& c,
                                     double target, double tol) {
  auto spent = [&](double level) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      s += std::max(level * a[i] - c[i], 0.0);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (spent(hi) < target) {
    hi *= 2.0;
    if (++grow > 2000 || !std::isfinite(hi))
      throw std::runtime_error(
          "water-filling: bracket failure, spent power stays below target " +
          std::to_string(target));
  }
  for (int it = 0; it < 200 && (hi - lo) > tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (spent(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  const double approx = 0.5 * (lo + hi);
  // Exact solve on the active set located by the bisection.
  double sum_a = 0.0, sum_c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (approx * a[i] - c[i] > 0.0) {
      sum_a += a[i];
      sum_c += c[i];
    }
  }
  WaterLevelSolution out;
  if (sum_a > 0.0) {
    const double exact_level = (target + sum_c) / sum_a;
    bool consistent = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const bool active = exact_level * a[i] - c[i] > 0.0;
      const bool was_active = approx * a[i] - c[i] > 0.0;
      if (active != was_active) {
        consistent = false;
        break;
      }
    }
    if (consistent) {
      out.level = exact_level;
      out.exact = true;
      return out;
    }
  }
  out.level = approx;
  out.exact = false;
  return out;
}

}  // namespace

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::error_free: return "error_free";
    case Scheme::scheme1: return "scheme1";
    case Scheme::scheme2: return "scheme2";
    case Scheme::scheme3: return "scheme3";
    case Scheme::scheme4: return "scheme4";
    case Scheme::receiver_centric: return "receiver_centric";
  }
  return "unknown";
}

std::optional<Scheme> scheme_from_string(const std::string& name) {
  for (Scheme s : {Scheme::error_free, Scheme::scheme1, Scheme::scheme2,
                   Scheme::scheme3, Scheme::scheme4, Scheme::receiver_centric})
    if (name == to_string(s)) return s;
  return std::nullopt;
}

double ErrorDecomposition::bias_norm() const {
  return std::sqrt(bias_norm_sq());
}

double ErrorDecomposition::bias_norm_sq() const {
  double s = 0.0;
  for (double e : bias) s += e * e;
  return s;
}

double ErrorDecomposition::variance_sum() const {
  double s = 0.0;
  for (double v : variance) s += v;
  return s;
}

ErrorDecomposition mse_objective(const std::vector<double>& alpha,
                                 const Matrix& b, const Matrix& x,
                                 const Matrix& h, double sigma2) {
  check_grid(b, x, "mse_objective");
  check_grid(b, h, "mse_objective");
  const int K = x.rows;
  const int M = x.cols;
  if (static_cast<int>(alpha.size()) != K)
    throw std::invalid_argument("mse_objective: alpha length " +
                                std::to_string(alpha.size()) +
                                " does not match K=" + std::to_string(K));
  ErrorDecomposition out;
  out.bias.resize(K);
  out.variance.resize(K);
  double mse = 0.0;
  for (int k = 0; k < K; ++k) {
    double e = 0.0;
    for (int m = 0; m < M; ++m)
      e += (alpha[k] * b(k, m) * h(k, m) - 1.0 / M) * x(k, m);
    const double nu2 = sigma2 * alpha[k] * alpha[k];
    out.bias[k] = e;
    out.variance[k] = nu2;
    mse += e * e + nu2;
  }
  out.mse = mse;
  return out;
}

// ---------------------------------------------------------------------------
// Scheme 1
// ---------------------------------------------------------------------------

std::vector<double> scheme1_alpha_step(const Matrix& b, const Matrix& x,
                                       const Matrix& h, double sigma2,
                                       int M) {
  check_grid(b, x, "scheme1_alpha_step");
  check_grid(b, h, "scheme1_alpha_step");
  const int K = x.rows;
  std::vector<double> alpha(K, 0.0);
  for (int k = 0; k < K; ++k) {
    double sum_x = 0.0, beta = 0.0;
    for (int m = 0; m < M; ++m) {
      sum_x += x(k, m);
      beta += b(k, m) * h(k, m) * x(k, m);
    }
    const double denom = M * (sigma2 + beta * beta);
    alpha[k] = denom > 0.0 ? std::max(sum_x * beta / denom, 0.0) : 0.0;
  }
  return alpha;
}

BStepResult scheme1_b_step(const std::vector<double>& alpha, const Matrix& x,
                           const Matrix& h, double sigma2,
                           const std::vector<double>& budgets, int iters,
                           double tol) {
  return scheme1_b_step(alpha, x, h, sigma2, budgets, iters, tol,
                        Matrix(x.rows, x.cols));
}

BStepResult scheme1_b_step(const std::vector<double>& alpha, const Matrix& x,
                           const Matrix& h, double sigma2,
                           const std::vector<double>& budgets, int iters,
                           double tol, const Matrix& b_init) {
  check_grid(x, h, "scheme1_b_step");
  check_grid(x, b_init, "scheme1_b_step");
  const int K = x.rows;
  const int M = x.cols;
  if (static_cast<int>(budgets.size()) != M)
    throw std::invalid_argument("scheme1_b_step: budgets length mismatch");
  for (double e : budgets)
    if (!(e >= 0.0))
      throw std::invalid_argument("scheme1_b_step: budgets must be >= 0");

  // Work in c_km = b_km |x_km|: each device constraint becomes a Euclidean
  // ball ||c_:m|| <= sqrt(E_m) and the objective stays a convex quadratic.
  // Coordinates with x_km = 0 are pinned at b = 0.
  Matrix sgn(K, M), absx(K, M), c(K, M);
  std::vector<double> xbar(K, 0.0);
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m) {
      const double v = x(k, m);
      sgn(k, m) = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
      absx(k, m) = std::abs(v);
      c(k, m) = b_init(k, m) * absx(k, m);
      xbar[k] += v / M;
    }
  }

  // Exact projection onto {c >= 0, ||c_:m|| <= sqrt(E_m)}: clamp into the
  // orthant, then scale each device column back onto its ball.
  auto project = [&](Matrix& cc) {
    for (int k = 0; k < K; ++k)
      for (int m = 0; m < M; ++m)
        cc(k, m) = sgn(k, m) == 0.0 ? 0.0 : std::max(cc(k, m), 0.0);
    for (int m = 0; m < M; ++m) {
      double n2 = 0.0;
      for (int k = 0; k < K; ++k) n2 += sq(cc(k, m));
      if (n2 > budgets[m] && n2 > 0.0) {
        const double scale = std::sqrt(budgets[m] / n2);
        for (int k = 0; k < K; ++k) cc(k, m) *= scale;
      }
    }
  };

  std::vector<double> residual(K);
  auto bias_part = [&](const Matrix& cc) {
    double f = 0.0;
    for (int k = 0; k < K; ++k) {
      double e = -xbar[k];
      for (int m = 0; m < M; ++m)
        e += alpha[k] * h(k, m) * sgn(k, m) * cc(k, m);
      residual[k] = e;
      f += e * e;
    }
    return f;
  };

  // Step size from the per-subcarrier Lipschitz constant of the gradient.
  double lip = 0.0;
  for (int k = 0; k < K; ++k) {
    double row = 0.0;
    for (int m = 0; m < M; ++m)
      if (sgn(k, m) != 0.0) row += sq(h(k, m));
    lip = std::max(lip, 2.0 * sq(alpha[k]) * row);
  }

  project(c);
  double f = bias_part(c);
  double var = 0.0;
  for (int k = 0; k < K; ++k) var += sigma2 * sq(alpha[k]);

  BStepResult out;
  out.converged = false;
  out.iterations = 0;

  Matrix grad(K, M), trial(K, M);
  const double step0 = lip > 0.0 ? 1.0 / lip : 0.0;
  double resid_norm = 0.0;

  if (step0 > 0.0) {
    for (int it = 0; it < iters; ++it) {
      bias_part(c);  // refresh residuals for the gradient
      for (int k = 0; k < K; ++k) {
        const double rk = 2.0 * residual[k] * alpha[k];
        for (int m = 0; m < M; ++m) grad(k, m) = rk * h(k, m) * sgn(k, m);
      }
      double step = step0;
      bool improved = false;
      for (int half = 0; half < 30; ++half) {
        trial = c;
        for (int k = 0; k < K; ++k)
          for (int m = 0; m < M; ++m) trial(k, m) -= step * grad(k, m);
        project(trial);
        const double f_trial = bias_part(trial);
        if (f_trial <= f) {
          double moved = 0.0;
          for (std::size_t i = 0; i < c.data.size(); ++i)
            moved += sq(trial.data[i] - c.data[i]);
          resid_norm = std::sqrt(moved) / step;
          c = trial;
          f = f_trial;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      out.iterations = it + 1;
      if (!improved || resid_norm <= tol * std::max(1.0, std::sqrt(f))) {
        out.converged = improved || resid_norm <= tol;
        break;
      }
    }
    if (out.iterations == iters) out.converged = resid_norm <= tol;
  } else {
    out.converged = true;  // gradient identically zero
  }

  out.b = Matrix(K, M);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      out.b(k, m) = absx(k, m) > 0.0 ? c(k, m) / absx(k, m) : 0.0;
  out.objective = bias_part(c) + var;
  out.kkt_residual = resid_norm;
  return out;
}

BiconvexResult scheme1_biconvex(const Matrix& x, const Matrix& h,
                                double sigma2,
                                const std::vector<double>& budgets,
                                const PowerPlan& init, int outer_iters,
                                double tol) {
  check_grid(x, h, "scheme1_biconvex");
  const int K = x.rows;
  const int M = x.cols;
  if (init.b.rows != K || init.b.cols != M ||
      static_cast<int>(init.alpha.size()) != K)
    throw std::invalid_argument("scheme1_biconvex: init shape mismatch");
  for (int m = 0; m < M; ++m) {
    const auto pc = check_power(init.b.column(m), x.column(m), budgets[m]);
    if (!pc.ok)
      throw std::invalid_argument("scheme1_biconvex: infeasible init, device " +
                                  std::to_string(m) + " exceeds budget by " +
                                  std::to_string(-pc.slack));
  }

  BiconvexResult out;
  out.plan = init;
  out.plan.scheme = Scheme::scheme1;
  out.plan.zeta.clear();
  out.mse_trace.push_back(
      mse_objective(out.plan.alpha, out.plan.b, x, h, sigma2).mse);

  const int b_iters = 400;
  for (int it = 0; it < outer_iters; ++it) {
    out.plan.alpha = scheme1_alpha_step(out.plan.b, x, h, sigma2, M);
    auto bs = scheme1_b_step(out.plan.alpha, x, h, sigma2, budgets, b_iters,
                             tol, out.plan.b);
    out.plan.b = bs.b;
    // evaluate through the same path as the initial entry
    const double mse =
        mse_objective(out.plan.alpha, out.plan.b, x, h, sigma2).mse;
    const double prev = out.mse_trace.back();
    out.mse_trace.push_back(mse);
    out.outer_iterations = it + 1;
    if (prev - mse <= tol * std::max(1.0, prev)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scheme 2
// ---------------------------------------------------------------------------

Scheme2Device scheme2_device(const std::vector<double>& x_m,
                             const std::vector<double>& h_m, double E_m) {
  if (x_m.size() != h_m.size())
    throw std::invalid_argument("scheme2_device: length mismatch");
  if (E_m < 0.0)
    throw std::invalid_argument("scheme2_device: negative budget");
  const int K = static_cast<int>(x_m.size());
  Scheme2Device out;
  out.b.assign(K, 0.0);
  double denom = 0.0;
  for (int k = 0; k < K; ++k) {
    if (x_m[k] == 0.0) continue;
    if (!(h_m[k] > 0.0))
      throw std::invalid_argument("scheme2_device: h_km must be > 0");
    denom += sq(x_m[k]) / sq(h_m[k]);
  }
  if (denom == 0.0) {
    out.degenerate = true;  // nothing to transmit
    return out;
  }
  out.zeta = std::sqrt(E_m / denom);
  for (int k = 0; k < K; ++k)
    if (x_m[k] != 0.0) out.b[k] = out.zeta / h_m[k];
  return out;
}

std::vector<double> scheme2_receiver(double zeta_sum, int K) {
  if (!(zeta_sum > 0.0))
    throw std::invalid_argument("scheme2_receiver: zeta sum must be > 0");
  return std::vector<double>(K, 1.0 / zeta_sum);
}

std::vector<double> scheme2_large_k_bias(const Matrix& x,
                                         const std::vector<double>& budgets) {
  const int K = x.rows;
  const int M = x.cols;
  if (static_cast<int>(budgets.size()) != M)
    throw std::invalid_argument("scheme2_large_k_bias: budgets length mismatch");
  std::vector<double> root(M);
  double root_sum = 0.0;
  for (int m = 0; m < M; ++m) {
    root[m] = std::sqrt(budgets[m]);
    root_sum += root[m];
  }
  if (!(root_sum > 0.0))
    throw std::invalid_argument("scheme2_large_k_bias: all budgets zero");
  std::vector<double> bias(K, 0.0);
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      bias[k] += (root[m] / root_sum - 1.0 / M) * x(k, m);
  return bias;
}

double scheme2_large_k_variance(int K, double varpi2, double x_second_moment,
                                double sigma2,
                                const std::vector<double>& budgets) {
  double root_sum = 0.0;
  for (double e : budgets) root_sum += std::sqrt(e);
  if (!(root_sum > 0.0))
    throw std::invalid_argument("scheme2_large_k_variance: all budgets zero");
  return K * varpi2 * x_second_moment * sigma2 / sq(root_sum);
}

// ---------------------------------------------------------------------------
// Scheme 3
// ---------------------------------------------------------------------------

WaterfillResult scheme3_waterfill(const std::vector<double>& x_m,
                                  const std::vector<double>& h_m,
                                  double sigma2, double E_m, double tol) {
  if (x_m.size() != h_m.size())
    throw std::invalid_argument("scheme3_waterfill: length mismatch");
  if (!(E_m > 0.0))
    throw std::invalid_argument("scheme3_waterfill: budget must be > 0");
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("scheme3_waterfill: sigma2 must be > 0");
  const int K = static_cast<int>(x_m.size());
  const double sigma = std::sqrt(sigma2);

  // Spent power per coordinate at water level l: [l * sigma|x|/h - sigma2/h^2]^+.
  std::vector<double> a, c;
  a.reserve(K);
  c.reserve(K);
  bool any = false;
  for (int k = 0; k < K; ++k) {
    if (x_m[k] == 0.0) {
      a.push_back(0.0);
      c.push_back(0.0);
      continue;
    }
    if (!(h_m[k] > 0.0))
      throw std::invalid_argument("scheme3_waterfill: h_km must be > 0");
    any = true;
    a.push_back(sigma * std::abs(x_m[k]) / h_m[k]);
    c.push_back(sigma2 / sq(h_m[k]));
  }
  if (!any)
    throw std::invalid_argument("scheme3_waterfill: all coordinates zero");

  const auto sol = solve_water_level(a, c, E_m, tol);
  WaterfillResult out;
  out.water_level = sol.level;
  out.lambda = 1.0 / sq(sol.level);
  out.exact = sol.exact;
  out.b.assign(K, 0.0);
  out.alpha.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    if (x_m[k] == 0.0) continue;
    const double spent = std::max(sol.level * a[k] - c[k], 0.0);  // b^2 x^2
    if (spent <= 0.0) continue;
    const double b = std::sqrt(spent) / std::abs(x_m[k]);
    out.b[k] = b;
    const double bhx2 = b * h_m[k] * sq(x_m[k]);
    out.alpha[k] = bhx2 / (sigma2 + sq(b * h_m[k] * x_m[k]));
  }
  return out;
}

double LargeKRule::b(double x, double h) const {
  if (x == 0.0 || !(h > 0.0)) return 0.0;
  const double sigma = std::sqrt(sigma2);
  const double spent = water_level * sigma * std::abs(x) / h - sigma2 / (h * h);
  return spent > 0.0 ? std::sqrt(spent) / std::abs(x) : 0.0;
}

double LargeKRule::predicted_variance(int M) const {
  return sigma2 / sq(static_cast<double>(M));
}

LargeKRule scheme3_large_k(const std::vector<double>& x_samples,
                           const std::vector<double>& h_samples, double sigma2,
                           double E_bar, double tol) {
  if (x_samples.empty() || x_samples.size() != h_samples.size())
    throw std::invalid_argument(
        "scheme3_large_k: need matching non-empty sample vectors");
  if (!(E_bar > 0.0))
    throw std::invalid_argument("scheme3_large_k: E_bar must be > 0");
  if (!(sigma2 > 0.0))
    throw std::invalid_argument("scheme3_large_k: sigma2 must be > 0");
  const double sigma = std::sqrt(sigma2);
  std::vector<double> a, c;
  a.reserve(x_samples.size());
  c.reserve(x_samples.size());
  bool any = false;
  for (std::size_t i = 0; i < x_samples.size(); ++i) {
    if (x_samples[i] == 0.0) {
      a.push_back(0.0);
      c.push_back(0.0);
      continue;
    }
    if (!(h_samples[i] > 0.0))
      throw std::invalid_argument("scheme3_large_k: h samples must be > 0");
    any = true;
    a.push_back(sigma * std::abs(x_samples[i]) / h_samples[i]);
    c.push_back(sigma2 / sq(h_samples[i]));
  }
  if (!any) throw std::invalid_argument("scheme3_large_k: all samples zero");

  // Sample-average power equation: mean spent power = E_bar.
  const double target = E_bar * static_cast<double>(x_samples.size());
  const auto sol = solve_water_level(a, c, target, tol);
  LargeKRule rule;
  rule.water_level = sol.level;
  rule.lambda = 1.0 / sq(sol.level);
  rule.sigma2 = sigma2;
  return rule;
}

// ---------------------------------------------------------------------------
// Scheme 4 and the receiver-centric baseline
// ---------------------------------------------------------------------------

Scheme4Device scheme4_equal(const std::vector<double>& x_m, double E_m) {
  if (E_m < 0.0)
    throw std::invalid_argument("scheme4_equal: negative budget");
  Scheme4Device out;
  double sum = 0.0;
  for (double v : x_m) sum += v * v;
  if (sum == 0.0) {
    out.b.assign(x_m.size(), 0.0);
    out.degenerate = true;
    return out;
  }
  out.b.assign(x_m.size(), std::sqrt(E_m / sum));
  return out;
}

std::vector<double> receiver_centric(const std::vector<double>& x_m,
                                     const std::vector<double>& h_m,
                                     double E_m, double p, int M) {
  if (x_m.size() != h_m.size())
    throw std::invalid_argument("receiver_centric: length mismatch");
  if (!(p > 0.0))
    throw std::invalid_argument("receiver_centric: p must be > 0");
  const int K = static_cast<int>(x_m.size());
  std::vector<double> b(K, 0.0);

  auto spent = [&](double lambda) {
    double s = 0.0;
    for (int k = 0; k < K; ++k) {
      if (x_m[k] == 0.0) continue;
      const double bk = p * h_m[k] / (sq(h_m[k]) + lambda * sq(M * p));
      s += sq(bk * x_m[k]);
    }
    return s;
  };

  // lambda = 0 branch: exact inversion b = p/h, zero per-device bias.
  if (spent(0.0) <= E_m) {
    for (int k = 0; k < K; ++k) {
      if (x_m[k] == 0.0) continue;
      if (!(h_m[k] > 0.0))
        throw std::invalid_argument("receiver_centric: h_km must be > 0");
      b[k] = p / h_m[k];
    }
    return b;
  }

  // Budget binds: shrink along the KKT path until equality.
  double lo = 0.0, hi = 1.0;
  int grow = 0;
  while (spent(hi) > E_m) {
    hi *= 2.0;
    if (++grow > 2000 || !std::isfinite(hi))
      throw std::runtime_error("receiver_centric: no multiplier meets the budget");
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-14 * std::max(hi, 1.0); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (spent(mid) > E_m)
      lo = mid;
    else
      hi = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  for (int k = 0; k < K; ++k) {
    if (x_m[k] == 0.0) continue;
    b[k] = p * h_m[k] / (sq(h_m[k]) + lambda * sq(M * p));
  }
  return b;
}

double receiver_centric_default_p(const Matrix& x, const Matrix& h,
                                  const std::vector<double>& budgets) {
  std::vector<double> zetas;
  for (int m = 0; m < x.cols; ++m) {
    const auto dev = scheme2_device(x.column(m), h.column(m), budgets[m]);
    if (!dev.degenerate) zetas.push_back(dev.zeta);
  }
  if (zetas.empty()) return 1.0;
  std::sort(zetas.begin(), zetas.end());
  const std::size_t n = zetas.size();
  return n % 2 == 1 ? zetas[n / 2]
                    : 0.5 * (zetas[n / 2 - 1] + zetas[n / 2]);
}

// ---------------------------------------------------------------------------
// Plan construction
// ---------------------------------------------------------------------------

namespace {

PowerPlan scheme2_plan(const Matrix& x, const Matrix& h,
                       const std::vector<double>& budgets) {
  const int K = x.rows, M = x.cols;
  PowerPlan plan;
  plan.scheme = Scheme::scheme2;
  plan.b = Matrix(K, M);
  plan.zeta.assign(M, 0.0);
  double zeta_sum = 0.0;
  for (int m = 0; m < M; ++m) {
    const auto dev = scheme2_device(x.column(m), h.column(m), budgets[m]);
    plan.zeta[m] = dev.zeta;
    zeta_sum += dev.zeta;
    if (dev.degenerate) plan.degenerate = true;
    plan.b.set_column(m, dev.b);
  }
  plan.alpha = zeta_sum > 0.0 ? scheme2_receiver(zeta_sum, K)
                              : std::vector<double>(K, 0.0);
  if (zeta_sum <= 0.0) plan.degenerate = true;
  return plan;
}

PowerPlan scheme3_plan(const Matrix& x, const Matrix& h, double sigma2,
                       const std::vector<double>& budgets) {
  const int K = x.rows, M = x.cols;
  PowerPlan plan;
  plan.scheme = Scheme::scheme3;
  plan.b = Matrix(K, M);
  plan.alpha.assign(K, 0.0);
  for (int m = 0; m < M; ++m) {
    const auto x_m = x.column(m);
    bool any = false;
    for (double v : x_m)
      if (v != 0.0) any = true;
    if (!any) {
      plan.degenerate = true;
      continue;
    }
    const auto wf = scheme3_waterfill(x_m, h.column(m), sigma2, budgets[m]);
    plan.b.set_column(m, wf.b);
    // Receiver rule: average of the per-device single-user coefficients,
    // scaled to the 1/M aggregate target (exact single-user optimum at M=1).
    for (int k = 0; k < K; ++k) plan.alpha[k] += wf.alpha[k] / M;
  }
  return plan;
}

PowerPlan scheme4_plan(const Matrix& x, const Matrix& h,
                       const std::vector<double>& budgets) {
  const int K = x.rows, M = x.cols;
  PowerPlan plan;
  plan.scheme = Scheme::scheme4;
  plan.b = Matrix(K, M);
  plan.alpha.assign(K, 1.0 / M);
  (void)h;
  for (int m = 0; m < M; ++m) {
    const auto dev = scheme4_equal(x.column(m), budgets[m]);
    if (dev.degenerate) plan.degenerate = true;
    plan.b.set_column(m, dev.b);
  }
  return plan;
}

PowerPlan receiver_centric_plan(const Matrix& x, const Matrix& h,
                                const std::vector<double>& budgets,
                                std::optional<double> p_opt) {
  const int K = x.rows, M = x.cols;
  PowerPlan plan;
  plan.scheme = Scheme::receiver_centric;
  plan.b = Matrix(K, M);
  const double p =
      p_opt.value_or(receiver_centric_default_p(x, h, budgets));
  plan.alpha.assign(K, 1.0 / (M * p));
  for (int m = 0; m < M; ++m)
    plan.b.set_column(m,
                      receiver_centric(x.column(m), h.column(m), budgets[m], p, M));
  return plan;
}

}  // namespace

PowerPlan build_plan(Scheme scheme, const Matrix& x, const Matrix& h,
                     double sigma2, const std::vector<double>& budgets,
                     const PlanOptions& opts) {
  check_grid(x, h, "build_plan");
  const int K = x.rows, M = x.cols;
  if (static_cast<int>(budgets.size()) != M)
    throw std::invalid_argument("build_plan: budgets length mismatch");

  PowerPlan plan;
  switch (scheme) {
    case Scheme::error_free: {
      plan.scheme = Scheme::error_free;
      plan.b = Matrix(K, M);
      plan.alpha.assign(K, 0.0);
      return plan;
    }
    case Scheme::scheme2:
      plan = scheme2_plan(x, h, budgets);
      break;
    case Scheme::scheme3:
      plan = scheme3_plan(x, h, sigma2, budgets);
      break;
    case Scheme::scheme4:
      plan = scheme4_plan(x, h, budgets);
      break;
    case Scheme::receiver_centric:
      plan = receiver_centric_plan(x, h, budgets, opts.receiver_centric_p);
      break;
    case Scheme::scheme1: {
      // Benchmark: start from the best distributed plan so the centralized
      // solution dominates schemes 2-4 on every instance.
      PowerPlan candidates[3] = {scheme2_plan(x, h, budgets),
                                 scheme3_plan(x, h, sigma2, budgets),
                                 scheme4_plan(x, h, budgets)};
      if (opts.fixed_alpha) {
        const std::vector<double> fixed(K, *opts.fixed_alpha);
        int best = 0;
        double best_mse = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i) {
          const double mse =
              mse_objective(fixed, candidates[i].b, x, h, sigma2).mse;
          if (mse < best_mse) {
            best_mse = mse;
            best = i;
          }
        }
        auto bs = scheme1_b_step(fixed, x, h, sigma2, budgets,
                                 opts.scheme1_outer_iters * opts.scheme1_b_iters,
                                 opts.scheme1_tol, candidates[best].b);
        plan.scheme = Scheme::scheme1;
        plan.b = bs.b;
        plan.alpha = fixed;
        return plan;
      }
      int best = 0;
      double best_mse = std::numeric_limits<double>::infinity();
      for (int i = 0; i < 3; ++i) {
        const double mse = mse_objective(candidates[i].alpha, candidates[i].b,
                                         x, h, sigma2).mse;
        if (mse < best_mse) {
          best_mse = mse;
          best = i;
        }
      }
      PowerPlan init = candidates[best];
      init.zeta.clear();
      auto bc = scheme1_biconvex(x, h, sigma2, budgets, init,
                                 opts.scheme1_outer_iters, opts.scheme1_tol);
      plan = bc.plan;
      return plan;
    }
  }

  if (opts.fixed_alpha) plan.alpha.assign(K, *opts.fixed_alpha);
  return plan;
}

}  // namespace blcd
