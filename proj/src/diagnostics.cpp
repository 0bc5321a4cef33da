// SPDX-License-Identifier: Apache-2.0
#include "blcd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace blcd {

namespace {

void check_params(const BoundParams& p) {
  if (!(p.rho > 0.0 && p.rho < 2.0))
    throw std::invalid_argument("bound params: need 0 < rho < 2");
  if (!(p.delta > 0.0 && p.delta <= 1.0))
    throw std::invalid_argument("bound params: need 0 < delta <= 1");
  if (!(p.gamma > 0.0))
    throw std::invalid_argument("bound params: need gamma > 0");
  if (!(p.gamma * p.rho < 2.0))
    throw std::invalid_argument("bound params: need gamma * rho < 2");
  if (p.total_rounds < 1)
    throw std::invalid_argument("bound params: need at least one round");
  if (!(p.L > 0.0) || !(p.G2 >= 0.0))
    throw std::invalid_argument("bound params: need L > 0 and G2 >= 0");
}

std::vector<const RoundTrace*> probe_rounds(
    const std::vector<RoundTrace>& traces) {
  std::vector<const RoundTrace*> probes;
  for (const auto& t : traces)
    if (t.probed()) probes.push_back(&t);
  if (probes.empty())
    throw std::invalid_argument(
        "diagnostics: no probe rounds carry a full-batch gradient norm");
  return probes;
}

}  // namespace

double bias_amplification(const BoundParams& p) {
  return (p.L - 1.0 + 2.0 * p.gamma) / (p.gamma * (2.0 - p.rho * p.gamma));
}

BoundReport convergence_bound_report(const std::vector<RoundTrace>& traces,
                                     const BoundParams& p) {
  check_params(p);
  const auto probes = probe_rounds(traces);
  const double eta = bias_amplification(p);
  const double denom = p.gamma * (2.0 - p.rho * p.gamma);

  BoundReport rep;
  rep.eta = eta;
  rep.probe_count = static_cast<int>(probes.size());

  double lhs = 0.0, mse_term = 0.0, bias_term = 0.0;
  for (const auto* t : probes) {
    const double gap = t->grad_norm - eta * t->bias_norm;
    lhs += gap * gap;
    mse_term += (p.L / denom) * t->comm_mse;
    bias_term += (1.0 + eta * eta) * t->bias_norm * t->bias_norm;
  }
  const double inv = 1.0 / static_cast<double>(probes.size());
  rep.lhs = lhs * inv;
  rep.mse_term = mse_term * inv;
  rep.bias_term = bias_term * inv;
  rep.init_term =
      2.0 * p.f0_minus_fstar / (static_cast<double>(p.total_rounds) * denom);
  rep.gamma_term = (p.L / p.rho * 2.0 * (1.0 - p.delta) / (p.delta * p.delta) +
                    0.5) *
                   2.0 * p.L * p.gamma * p.G2 / (2.0 - p.rho * p.gamma);
  rep.rhs = rep.mse_term + rep.bias_term + rep.init_term + rep.gamma_term;
  rep.holds = rep.lhs <= rep.rhs;
  rep.note =
      "averages over probe rounds; bias/MSE are exact conditional "
      "expectations over channel noise, the data-sampling average is a "
      "single-sample estimate";
  return rep;
}

BoundReport stationarity_bound_report(const std::vector<RoundTrace>& traces,
                                      const BoundParams& p,
                                      UnbiasedCertificate certificate,
                                      double bias_tol) {
  check_params(p);
  const double expected_gamma =
      1.0 / std::sqrt(static_cast<double>(p.total_rounds));
  if (std::abs(p.gamma - expected_gamma) >
      1e-12 * std::max(1.0, expected_gamma))
    throw std::invalid_argument(
        "stationarity_bound_report: gamma must equal 1/sqrt(T+1)");
  if (certificate == UnbiasedCertificate::measured) {
    for (const auto& t : traces)
      if (t.bias_norm > bias_tol)
        throw std::invalid_argument(
            "stationarity_bound_report: biased run (round " + std::to_string(t.round) +
            " bias norm " + std::to_string(t.bias_norm) +
            " exceeds tolerance); this bound needs E_t[eps_t] = 0");
  }
  const auto probes = probe_rounds(traces);

  BoundReport rep;
  rep.eta = bias_amplification(p);
  rep.probe_count = static_cast<int>(probes.size());

  double lhs = 0.0, avg_mse = 0.0;
  for (const auto* t : probes) {
    lhs += t->grad_norm * t->grad_norm;
    avg_mse += t->comm_mse;
  }
  const double inv = 1.0 / static_cast<double>(probes.size());
  lhs *= inv;
  avg_mse *= inv;

  const double root = std::sqrt(static_cast<double>(p.total_rounds));
  const double pref = 1.0 / (2.0 - p.rho / root);
  rep.init_term = pref * 2.0 * p.f0_minus_fstar / root;
  rep.gamma_term =
      pref * (2.0 * p.L * p.G2 / root) *
      (p.L / p.rho * 2.0 * (1.0 - p.delta) / (p.delta * p.delta) + 0.5);
  rep.mse_term = pref * p.L * avg_mse;
  rep.bias_term = 0.0;
  rep.lhs = lhs;
  rep.rhs = rep.init_term + rep.gamma_term + rep.mse_term;
  rep.holds = rep.lhs <= rep.rhs;
  rep.note = certificate == UnbiasedCertificate::analytic_zero
                 ? "unbiasedness certified analytically by the caller"
                 : "unbiasedness verified from per-round bias norms";
  return rep;
}

MemoryBoundReport memory_bound_check(const std::vector<RoundTrace>& traces,
                                     double delta, double gamma, double G2) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw std::invalid_argument("memory_bound_check: need 0 < delta <= 1");
  MemoryBoundReport rep;
  rep.bound = 4.0 * (1.0 - delta) / (delta * delta) * gamma * gamma * G2;
  rep.within.reserve(traces.size());
  rep.running_mean.reserve(traces.size());
  double sum = 0.0;
  rep.all_within = true;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    sum += traces[i].mem_norm_sq;
    const double mean = sum / static_cast<double>(i + 1);
    rep.running_mean.push_back(mean);
    const bool ok = mean <= rep.bound + 1e-15;
    rep.within.push_back(ok);
    if (!ok) rep.all_within = false;
  }
  return rep;
}

ContractionReport contraction_region(const std::vector<RoundTrace>& traces,
                                     double eta, double Delta) {
  ContractionReport rep;
  if (traces.empty()) return rep;
  // limsup surrogate: max bias norm over the trailing 10% of rounds.
  const std::size_t window =
      std::max<std::size_t>(1, traces.size() / 10);
  for (std::size_t i = traces.size() - window; i < traces.size(); ++i)
    rep.eps_bar = std::max(rep.eps_bar, traces[i].bias_norm);
  const double radius = (eta + Delta) * rep.eps_bar;
  for (const auto& t : traces)
    if (t.probed() && t.grad_norm <= radius) rep.visits.push_back(t.round);
  return rep;
}

std::string report_to_json(const BoundReport& convergence,
                           const MemoryBoundReport& memory,
                           const ContractionReport& contraction,
                           const BoundParams& params, const RunConfig& cfg) {
  nlohmann::json j;
  j["scheme"] = to_string(cfg.scheme);
  j["seed"] = cfg.seed;
  j["rounds"] = params.total_rounds;
  j["params"] = {{"L", params.L},
                 {"G2", params.G2},
                 {"f0_minus_fstar", params.f0_minus_fstar},
                 {"gamma", params.gamma},
                 {"rho", params.rho},
                 {"delta", params.delta}};
  j["convergence_bound"] = {{"lhs", convergence.lhs},
                   {"rhs", convergence.rhs},
                   {"holds", convergence.holds},
                   {"eta", convergence.eta},
                   {"mse_term", convergence.mse_term},
                   {"bias_term", convergence.bias_term},
                   {"init_term", convergence.init_term},
                   {"gamma_term", convergence.gamma_term},
                   {"probe_count", convergence.probe_count},
                   {"note", convergence.note}};
  j["memory_bound"] = {{"bound", memory.bound},
                       {"all_within", memory.all_within}};
  j["contraction"] = {{"eps_bar", contraction.eps_bar},
                      {"visit_count", contraction.visits.size()}};
  return j.dump(2);
}

}  // namespace blcd
