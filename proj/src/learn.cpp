// SPDX-License-Identifier: Apache-2.0
#include "blcd/learn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace blcd {

namespace {

// Fixed chunk count for the deterministic parallel reduction: results are
// combined in chunk order, so they do not depend on the thread count.
constexpr int kReductionChunks = 64;

double stable_softplus(double t) {
  // log(1 + e^t)
  if (t > 30.0) return t;
  if (t < -30.0) return std::exp(t);
  return std::log1p(std::exp(t));
}

void add_scaled(std::vector<double>& acc, const std::vector<double>& v,
                double s) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s * v[i];
}

}  // namespace

Dataset make_synthetic(int n, int p, double margin, std::uint64_t seed) {
  if (n < 1 || p < 1)
    throw std::invalid_argument("make_synthetic: n and p must be >= 1");
  RngStream stream = substream(seed, "synthetic-data");
  std::vector<double> dir(p);
  double norm = 0.0;
  for (int j = 0; j < p; ++j) {
    dir[j] = stream.next_gaussian();
    norm += dir[j] * dir[j];
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    dir.assign(p, 0.0);
    dir[0] = 1.0;
    norm = 1.0;
  }
  Dataset ds;
  ds.X = Matrix(n, p);
  ds.y.resize(n);
  ds.num_classes = 2;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const double shift = (label == 1 ? 0.5 : -0.5) * margin;
    for (int j = 0; j < p; ++j)
      ds.X(i, j) = shift * dir[j] / norm + stream.next_gaussian();
    ds.y[i] = label;
  }
  return ds;
}

Dataset augment_bias(const Dataset& ds) {
  Dataset out;
  out.X = Matrix(ds.X.rows, ds.X.cols + 1);
  out.y = ds.y;
  out.num_classes = ds.num_classes;
  for (int i = 0; i < ds.X.rows; ++i) {
    for (int j = 0; j < ds.X.cols; ++j) out.X(i, j) = ds.X(i, j);
    out.X(i, ds.X.cols) = 1.0;
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, int n_train) {
  if (n_train < 1 || n_train >= ds.size())
    throw std::invalid_argument("split_dataset: need 1 <= n_train < n");
  Dataset train, test;
  train.num_classes = test.num_classes = ds.num_classes;
  const int n_test = ds.size() - n_train;
  train.X = Matrix(n_train, ds.features());
  test.X = Matrix(n_test, ds.features());
  train.y.resize(n_train);
  test.y.resize(n_test);
  for (int i = 0; i < ds.size(); ++i) {
    const bool is_train = i < n_train;
    Dataset& dst = is_train ? train : test;
    const int row = is_train ? i : i - n_train;
    for (int j = 0; j < ds.features(); ++j) dst.X(row, j) = ds.X(i, j);
    dst.y[row] = ds.y[i];
  }
  return {std::move(train), std::move(test)};
}

void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_dataset: cannot open " + path);
  f << ds.size() << " " << ds.features() << " " << ds.num_classes << "\n";
  char buf[32];
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.features(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, j));
      f << buf << " ";
    }
    f << ds.y[i] << "\n";
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_dataset: cannot open " + path);
  int n = 0, p = 0, classes = 0;
  if (!(f >> n >> p >> classes) || n < 1 || p < 1 || classes < 2)
    throw std::runtime_error("load_dataset: malformed header in " + path);
  Dataset ds;
  ds.X = Matrix(n, p);
  ds.y.resize(n);
  ds.num_classes = classes;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j)
      if (!(f >> ds.X(i, j)))
        throw std::runtime_error("load_dataset: truncated row " +
                                 std::to_string(i));
    if (!(f >> ds.y[i]) || ds.y[i] < 0 || ds.y[i] >= classes)
      throw std::runtime_error("load_dataset: bad label in row " +
                               std::to_string(i));
  }
  return ds;
}

GradResult Model::full_gradient(const std::vector<double>& w,
                                const Dataset& ds, ExecPolicy policy) const {
  const int n = ds.size();
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (policy == ExecPolicy::serial || n < 2 * kReductionChunks)
    return gradient(w, ds, all);

  const int chunks = kReductionChunks;
  std::vector<GradResult> partial(chunks);
  std::vector<int> sizes(chunks);
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < chunks; ++c) {
    const int lo = static_cast<int>(static_cast<long>(n) * c / chunks);
    const int hi = static_cast<int>(static_cast<long>(n) * (c + 1) / chunks);
    sizes[c] = hi - lo;
    partial[c] = gradient(w, ds, std::span<const int>(all.data() + lo,
                                                      all.data() + hi));
  }
  // Combine in fixed chunk order: bitwise independent of the thread count.
  GradResult out;
  out.loss = 0.0;
  out.grad.assign(dim(), 0.0);
  for (int c = 0; c < chunks; ++c) {
    const double weight = static_cast<double>(sizes[c]) / n;
    out.loss += weight * partial[c].loss;
    add_scaled(out.grad, partial[c].grad, weight);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

GradResult LogisticModel::gradient(const std::vector<double>& w,
                                   const Dataset& ds,
                                   std::span<const int> rows) const {
  if (static_cast<int>(w.size()) != features_ || ds.X.cols != features_)
    throw std::invalid_argument("logreg gradient: dimension mismatch");
  if (rows.empty())
    throw std::invalid_argument("logreg gradient: empty batch");
  GradResult out;
  out.grad.assign(features_, 0.0);
  double loss = 0.0;
  for (int i : rows) {
    double z = 0.0;
    for (int j = 0; j < features_; ++j) z += w[j] * ds.X(i, j);
    const int y = ds.y[i];
    loss += stable_softplus(y == 1 ? -z : z);
    const double s = 1.0 / (1.0 + std::exp(-z));
    const double coeff = s - y;
    for (int j = 0; j < features_; ++j) out.grad[j] += coeff * ds.X(i, j);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  loss *= inv;
  for (double& g : out.grad) g *= inv;
  if (l2_ > 0.0) {
    double wn = 0.0;
    for (int j = 0; j < features_; ++j) {
      out.grad[j] += l2_ * w[j];
      wn += w[j] * w[j];
    }
    loss += 0.5 * l2_ * wn;
  }
  out.loss = loss;
  return out;
}

EvalResult LogisticModel::evaluate(const std::vector<double>& w,
                                   const Dataset& ds) const {
  EvalResult out;
  int correct = 0;
  double loss = 0.0;
  for (int i = 0; i < ds.size(); ++i) {
    double z = 0.0;
    for (int j = 0; j < features_; ++j) z += w[j] * ds.X(i, j);
    loss += stable_softplus(ds.y[i] == 1 ? -z : z);
    const int pred = z > 0.0 ? 1 : 0;
    if (pred == ds.y[i]) ++correct;
  }
  out.loss = loss / ds.size();
  if (l2_ > 0.0) {
    double wn = 0.0;
    for (double v : w) wn += v * v;
    out.loss += 0.5 * l2_ * wn;
  }
  out.accuracy = static_cast<double>(correct) / ds.size();
  return out;
}

std::vector<double> LogisticModel::init_weights(RngStream&) const {
  return std::vector<double>(features_, 0.0);
}

// ---------------------------------------------------------------------------
// One-hidden-layer network
// ---------------------------------------------------------------------------

MlpModel::MlpModel(int features, int hidden, int classes, double l2)
    : features_(features), hidden_(hidden), classes_(classes), l2_(l2) {
  dim_ = hidden_ * features_ + hidden_ + classes_ * hidden_ + classes_;
  if (dim_ > 10000)
    throw std::invalid_argument("mlp: parameter count " +
                                std::to_string(dim_) + " exceeds 10000");
}

std::vector<double> MlpModel::hidden_units(const std::vector<double>& w,
                                           std::span<const double> x) const {
  const double* W1 = w.data();
  const double* b1 = w.data() + hidden_ * features_;
  std::vector<double> a(hidden_);
  for (int i = 0; i < hidden_; ++i) {
    double z = b1[i];
    for (int j = 0; j < features_; ++j) z += W1[i * features_ + j] * x[j];
    a[i] = std::tanh(z);
  }
  return a;
}

GradResult MlpModel::gradient(const std::vector<double>& w, const Dataset& ds,
                              std::span<const int> rows) const {
  if (static_cast<int>(w.size()) != dim_ || ds.X.cols != features_)
    throw std::invalid_argument("mlp gradient: dimension mismatch");
  if (rows.empty()) throw std::invalid_argument("mlp gradient: empty batch");
  const double* W1 = w.data();
  const double* b1 = W1 + hidden_ * features_;
  const double* W2 = b1 + hidden_;
  const double* b2 = W2 + classes_ * hidden_;

  GradResult out;
  out.grad.assign(dim_, 0.0);
  double* gW1 = out.grad.data();
  double* gb1 = gW1 + hidden_ * features_;
  double* gW2 = gb1 + hidden_;
  double* gb2 = gW2 + classes_ * hidden_;

  std::vector<double> a(hidden_), logits(classes_), prob(classes_),
      dz1(hidden_);
  double loss = 0.0;
  for (int i : rows) {
    for (int u = 0; u < hidden_; ++u) {
      double z = b1[u];
      for (int j = 0; j < features_; ++j)
        z += W1[u * features_ + j] * ds.X(i, j);
      a[u] = std::tanh(z);
    }
    double zmax = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < classes_; ++c) {
      double z = b2[c];
      for (int u = 0; u < hidden_; ++u) z += W2[c * hidden_ + u] * a[u];
      logits[c] = z;
      zmax = std::max(zmax, z);
    }
    double denom = 0.0;
    for (int c = 0; c < classes_; ++c) {
      prob[c] = std::exp(logits[c] - zmax);
      denom += prob[c];
    }
    for (int c = 0; c < classes_; ++c) prob[c] /= denom;
    loss += -(logits[ds.y[i]] - zmax - std::log(denom));

    // dlogits = prob - onehot(y)
    std::fill(dz1.begin(), dz1.end(), 0.0);
    for (int c = 0; c < classes_; ++c) {
      const double d = prob[c] - (c == ds.y[i] ? 1.0 : 0.0);
      gb2[c] += d;
      for (int u = 0; u < hidden_; ++u) {
        gW2[c * hidden_ + u] += d * a[u];
        dz1[u] += d * W2[c * hidden_ + u];
      }
    }
    for (int u = 0; u < hidden_; ++u) {
      const double d = dz1[u] * (1.0 - a[u] * a[u]);
      gb1[u] += d;
      for (int j = 0; j < features_; ++j)
        gW1[u * features_ + j] += d * ds.X(i, j);
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  loss *= inv;
  for (double& g : out.grad) g *= inv;
  if (l2_ > 0.0) {
    double wn = 0.0;
    for (int j = 0; j < dim_; ++j) {
      out.grad[j] += l2_ * w[j];
      wn += w[j] * w[j];
    }
    loss += 0.5 * l2_ * wn;
  }
  out.loss = loss;
  return out;
}

EvalResult MlpModel::evaluate(const std::vector<double>& w,
                              const Dataset& ds) const {
  const double* W2 = w.data() + hidden_ * features_ + hidden_;
  const double* b2 = W2 + classes_ * hidden_;
  EvalResult out;
  int correct = 0;
  double loss = 0.0;
  std::vector<double> logits(classes_);
  for (int i = 0; i < ds.size(); ++i) {
    const auto a = hidden_units(
        w, std::span<const double>(&ds.X.data[static_cast<std::size_t>(i) *
                                              ds.X.cols],
                                   static_cast<std::size_t>(features_)));
    double zmax = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int c = 0; c < classes_; ++c) {
      double z = b2[c];
      for (int u = 0; u < hidden_; ++u) z += W2[c * hidden_ + u] * a[u];
      logits[c] = z;
      if (z > zmax) {
        zmax = z;
        arg = c;
      }
    }
    double denom = 0.0;
    for (int c = 0; c < classes_; ++c) denom += std::exp(logits[c] - zmax);
    loss += -(logits[ds.y[i]] - zmax - std::log(denom));
    if (arg == ds.y[i]) ++correct;
  }
  out.loss = loss / ds.size();
  if (l2_ > 0.0) {
    double wn = 0.0;
    for (double v : w) wn += v * v;
    out.loss += 0.5 * l2_ * wn;
  }
  out.accuracy = static_cast<double>(correct) / ds.size();
  return out;
}

std::vector<double> MlpModel::init_weights(RngStream& stream) const {
  std::vector<double> w(dim_, 0.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(features_));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  int pos = 0;
  for (int i = 0; i < hidden_ * features_; ++i)
    w[pos++] = s1 * stream.next_gaussian();
  pos += hidden_;  // b1 = 0
  for (int i = 0; i < classes_ * hidden_; ++i)
    w[pos++] = s2 * stream.next_gaussian();
  return w;  // b2 = 0
}

// ---------------------------------------------------------------------------
// Constants for the diagnostics
// ---------------------------------------------------------------------------

double smoothness_constant(const Dataset& ds, double l2, double tol,
                           int max_iters) {
  const int d = ds.X.cols;
  const int n = ds.size();
  // Gram matrix X^T X, then power iteration for the top eigenvalue.
  Matrix G(d, d);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) {
      const double xa = ds.X(i, a);
      if (xa == 0.0) continue;
      for (int bcol = 0; bcol < d; ++bcol) G(a, bcol) += xa * ds.X(i, bcol);
    }
  std::vector<double> v(d), u(d);
  for (int j = 0; j < d; ++j) v[j] = 1.0 + 1e-3 * j;
  double vn = 0.0;
  for (double t : v) vn += t * t;
  vn = std::sqrt(vn);
  for (double& t : v) t /= vn;

  double lambda = 0.0;
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    for (int a = 0; a < d; ++a) {
      double s = 0.0;
      for (int bcol = 0; bcol < d; ++bcol) s += G(a, bcol) * v[bcol];
      u[a] = s;
    }
    double rayleigh = 0.0, un = 0.0;
    for (int a = 0; a < d; ++a) {
      rayleigh += v[a] * u[a];
      un += u[a] * u[a];
    }
    un = std::sqrt(un);
    if (un == 0.0) {
      lambda = 0.0;
      converged = true;
      break;
    }
    for (int a = 0; a < d; ++a) v[a] = u[a] / un;
    if (std::abs(rayleigh - lambda) <= tol * std::max(1.0, std::abs(rayleigh))) {
      lambda = rayleigh;
      converged = true;
      break;
    }
    lambda = rayleigh;
  }
  if (!converged)
    throw std::runtime_error("smoothness_constant: power iteration did not converge");
  return lambda / (4.0 * n) + l2;
}

SmoothnessInfo estimate_bounds(const std::vector<BoundTracePoint>& traces,
                               double safety) {
  if (traces.empty())
    throw std::invalid_argument("estimate_bounds: empty traces");
  SmoothnessInfo info;
  double max_g2 = 0.0;
  double min_loss = std::numeric_limits<double>::infinity();
  for (const auto& t : traces) {
    max_g2 = std::max(max_g2, t.max_device_grad_sq);
    if (t.train_loss == t.train_loss)  // skip NaN
      min_loss = std::min(min_loss, t.train_loss);
  }
  info.G2 = safety * max_g2;
  info.f_star = min_loss;
  return info;
}

double estimate_fstar(const Model& model, const Dataset& ds,
                      const std::vector<double>& w0, double lr, int iters) {
  std::vector<double> w = w0;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iters; ++it) {
    const auto g = model.full_gradient(w, ds);
    best = std::min(best, g.loss);
    for (int j = 0; j < model.dim(); ++j) w[j] -= lr * g.grad[j];
  }
  best = std::min(best, model.full_gradient(w, ds).loss);
  return best;
}

}  // namespace blcd
