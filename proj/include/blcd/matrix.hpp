// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <vector>

namespace blcd {

/// Dense row-major matrix of doubles. Subcarrier-by-device grids (K x M)
/// use row index k and column index m throughout.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int i, int j) {
    assert(i >= 0 && i < rows && j >= 0 && j < cols);
    return data[static_cast<std::size_t>(i) * cols + j];
  }
  double operator()(int i, int j) const {
    assert(i >= 0 && i < rows && j >= 0 && j < cols);
    return data[static_cast<std::size_t>(i) * cols + j];
  }

  std::vector<double> column(int j) const {
    std::vector<double> out(rows);
    for (int i = 0; i < rows; ++i) out[i] = (*this)(i, j);
    return out;
  }

  void set_column(int j, const std::vector<double>& v) {
    assert(static_cast<int>(v.size()) == rows);
    for (int i = 0; i < rows; ++i) (*this)(i, j) = v[i];
  }
};

}  // namespace blcd
