// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "blcd/matrix.hpp"
#include "blcd/rng.hpp"

namespace blcd {

struct Dataset {
  Matrix X;               // n x p features
  std::vector<int> y;     // class ids in [0, num_classes)
  int num_classes = 2;

  int size() const { return X.rows; }
  int features() const { return X.cols; }
};

/// Two-class Gaussian blobs at +-(margin/2) along a seed-determined unit
/// direction, labels alternating. Deterministic by seed.
Dataset make_synthetic(int n, int p, double margin, std::uint64_t seed);

/// Copy of ds with a constant-1 column appended (explicit intercept
/// feature for the linear model).
Dataset augment_bias(const Dataset& ds);

/// Disjoint train/test split: rows [0, n_train) and [n_train, n).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, int n_train);

/// Plain text format: header "n p num_classes", then p floats + label per row.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

struct GradResult {
  double loss = 0.0;
  std::vector<double> grad;
};

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

enum class ExecPolicy {
  serial,        // straightforward in-order reference
  deterministic  // chunked OpenMP reduction; result independent of threads
};

/// Differentiable model with hand-coded gradients.
class Model {
 public:
  virtual ~Model() = default;
  virtual int dim() const = 0;
  /// Mean loss and gradient over the given rows, plus l2/2 * ||w||^2.
  virtual GradResult gradient(const std::vector<double>& w, const Dataset& ds,
                              std::span<const int> rows) const = 0;
  virtual EvalResult evaluate(const std::vector<double>& w,
                              const Dataset& ds) const = 0;
  virtual std::vector<double> init_weights(RngStream& stream) const = 0;

  /// Full-dataset gradient; the deterministic policy runs a fixed-chunk
  /// OpenMP reduction whose result does not depend on the thread count.
  GradResult full_gradient(const std::vector<double>& w, const Dataset& ds,
                           ExecPolicy policy = ExecPolicy::deterministic) const;
};

/// Binary logistic regression on the dataset's raw feature columns
/// (append an intercept column via augment_bias if wanted); w has one
/// entry per feature column.
class LogisticModel final : public Model {
 public:
  explicit LogisticModel(int features, double l2 = 0.0)
      : features_(features), l2_(l2) {}
  int dim() const override { return features_; }
  GradResult gradient(const std::vector<double>& w, const Dataset& ds,
                      std::span<const int> rows) const override;
  EvalResult evaluate(const std::vector<double>& w,
                      const Dataset& ds) const override;
  std::vector<double> init_weights(RngStream& stream) const override;
  double l2() const { return l2_; }

 private:
  int features_;
  double l2_;
};

/// One-hidden-layer tanh network with softmax cross-entropy, manual
/// backprop. Parameter layout: [W1 (H x p) | b1 (H) | W2 (C x H) | b2 (C)].
class MlpModel final : public Model {
 public:
  MlpModel(int features, int hidden, int classes, double l2 = 0.0);
  int dim() const override { return dim_; }
  GradResult gradient(const std::vector<double>& w, const Dataset& ds,
                      std::span<const int> rows) const override;
  EvalResult evaluate(const std::vector<double>& w,
                      const Dataset& ds) const override;
  std::vector<double> init_weights(RngStream& stream) const override;

  /// Hidden-layer activations for one input row (debug/test hook).
  std::vector<double> hidden_units(const std::vector<double>& w,
                                   std::span<const double> x) const;

  int hidden() const { return hidden_; }
  int classes() const { return classes_; }

 private:
  int features_, hidden_, classes_, dim_;
  double l2_;
};

/// Lipschitz constant of the full-batch logistic gradient:
/// L = lambda_max(X^T X) / (4n) + l2, via power iteration.
double smoothness_constant(const Dataset& ds, double l2, double tol = 1e-8,
                           int max_iters = 10000);

struct SmoothnessInfo {
  double L = 0.0;
  double G2 = 0.0;
  double f_star = 0.0;
};

struct BoundTracePoint {
  double max_device_grad_sq = 0.0;  // max_m ||g_t^m||^2 in the round
  double train_loss = 0.0;          // full-batch loss where measured, else NaN
};

/// Empirical surrogates for the convergence-bound constants: G2 = safety * max
/// observed per-device ||g||^2, f_star = smallest observed loss.
SmoothnessInfo estimate_bounds(const std::vector<BoundTracePoint>& traces,
                               double safety);

/// Upper bound on f*: run full-batch gradient descent and return the best
/// loss seen.
double estimate_fstar(const Model& model, const Dataset& ds,
                      const std::vector<double>& w0, double lr, int iters);

}  // namespace blcd
