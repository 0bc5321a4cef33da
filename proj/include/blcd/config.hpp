// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "blcd/power.hpp"

namespace blcd {

enum class ModelKind { logreg, mlp };
enum class SelectionKind { uniform, top_k };

struct RunConfig {
  ModelKind model = ModelKind::logreg;
  int n_train = 2000;
  int n_test = 500;
  int features = 20;
  double margin = 2.0;
  double l2 = 0.0;
  int hidden = 16;      // mlp only
  int num_classes = 2;  // mlp only
  std::string dataset_path;  // optional: load instead of synthesizing

  int M = 8;
  int K = 16;
  long T = 500;
  int batch_size = 4;
  double gamma = 0.01;
  double sigma2 = 1.0;
  std::optional<double> E_avg;
  std::vector<double> E_list;  // explicit per-device budgets
  Scheme scheme = Scheme::error_free;
  std::optional<double> fixed_alpha;
  std::optional<double> receiver_centric_p;
  SelectionKind selection = SelectionKind::uniform;

  std::uint64_t seed = 1;
  int eval_interval = 50;
  double rho = 1.0;
  double g2_safety = 1.5;
  std::string out = "blcd_run.csv";

  int scheme1_outer_iters = 60;
  double scheme1_tol = 1e-9;
  int scheme1_b_iters = 400;

  /// Model dimension d implied by the model fields.
  int dim() const;
  /// Per-device budgets: E_list if given, else E from E_avg (mean-1 Rayleigh).
  PowerBudget budgets() const;
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::vector<std::string>& errors);
  std::vector<std::string> errors;
};

/// Parse a flat key=value file ('#' comments, blank lines ignored).
/// Unknown keys and malformed values are all reported by name at once.
RunConfig parse_config_file(const std::string& path);

/// Apply key=value pairs onto an existing config (same keys as the file).
void apply_config_entries(
    RunConfig& cfg, const std::vector<std::pair<std::string, std::string>>& kv);

/// Validate field ranges and cross-field constraints; returns all errors.
std::vector<std::string> validate(const RunConfig& cfg);

/// Named presets; "fig2" pins M=8, K=64, batch 4, gamma 0.01, sigma2 1,
/// E_avg 0.1, fixed_alpha 1/8 on a one-hidden-layer network.
RunConfig preset(const std::string& name);

}  // namespace blcd
