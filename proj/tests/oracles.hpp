// Test-only oracles, independent of the library's implementation paths:
// index-formula enumeration for vec/unfold, the elementwise sum for the
// p-mode product, dense projector arithmetic for subspace distances, and a
// grid search for small coding problems.
#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "glds/tensor.hpp"

namespace oracle {

using glds::Matrix;
using glds::Tensor;
using glds::Vector;

using MultiIndex = std::vector<std::int64_t>;

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Visits every multi-index of `shape` in odometer order (first index fastest).
inline void for_each_multi_index(const std::vector<std::int64_t>& shape,
                                 const std::function<void(const MultiIndex&)>& visit) {
  MultiIndex idx(shape.size(), 0);
  while (true) {
    visit(idx);
    std::size_t p = 0;
    while (p < shape.size()) {
      if (++idx[p] < shape[p]) break;
      idx[p] = 0;
      ++p;
    }
    if (p == shape.size()) return;
  }
}

/// The vec position: k = sum_p idx_p * prod_{m<p} I_m (0-based form of the
/// 1-based index formula).
inline std::int64_t vec_index(const std::vector<std::int64_t>& shape, const MultiIndex& idx) {
  std::int64_t k = 0;
  std::int64_t stride = 1;
  for (std::size_t p = 0; p < shape.size(); ++p) {
    k += idx[p] * stride;
    stride *= shape[p];
  }
  return k;
}

/// Unfolding column: remaining modes ascending, first listed fastest.
inline std::int64_t unfold_column(const std::vector<std::int64_t>& shape, const MultiIndex& idx,
                                  int mode) {
  std::int64_t col = 0;
  std::int64_t stride = 1;
  for (std::size_t p = 0; p < shape.size(); ++p) {
    if (static_cast<int>(p) == mode) continue;
    col += idx[p] * stride;
    stride *= shape[p];
  }
  return col;
}

inline Matrix unfold_by_enumeration(const Tensor& t, int mode) {
  std::int64_t cols = 1;
  for (int p = 0; p < t.order(); ++p)
    if (p != mode) cols *= t.dim(p);
  Matrix m = Matrix::Zero(t.dim(mode), cols);
  for_each_multi_index(t.shape(), [&](const MultiIndex& idx) {
    m(idx[static_cast<std::size_t>(mode)], unfold_column(t.shape(), idx, mode)) = t(idx);
  });
  return m;
}

/// Direct evaluation of the p-mode product sum.
inline Tensor mode_product_by_loop(const Tensor& t, const Matrix& u, int mode) {
  Tensor out(t.replaced_shape(mode, u.rows()));
  for_each_multi_index(out.shape(), [&](const MultiIndex& out_idx) {
    MultiIndex in_idx = out_idx;
    double sum = 0.0;
    for (std::int64_t ip = 0; ip < t.dim(mode); ++ip) {
      in_idx[static_cast<std::size_t>(mode)] = ip;
      sum += t(in_idx) * u(out_idx[static_cast<std::size_t>(mode)], ip);
    }
    out(out_idx) = sum;
  });
  return out;
}

/// ||X X^T - Y Y^T||_F via the materialized projectors.
inline double dense_chordal(const Matrix& x, const Matrix& y) {
  return (x * x.transpose() - y * y.transpose()).norm();
}

/// Best objective over a dense grid for a 2-atom coding problem.
inline double grid_search_lasso_2atom(const Vector& kernel, const Matrix& gram, double lambda,
                                      int subspace_dim, double lo, double hi, int steps) {
  double best = 1e300;
  for (int i = 0; i <= steps; ++i) {
    for (int j = 0; j <= steps; ++j) {
      Vector y(2);
      y[0] = lo + (hi - lo) * i / steps;
      y[1] = lo + (hi - lo) * j / steps;
      const double value = subspace_dim - 2.0 * kernel.dot(y) + y.dot(gram * y) +
                           lambda * y.template lpNorm<1>();
      best = std::min(best, value);
    }
  }
  return best;
}

// ---- random generators ---------------------------------------------------

inline Matrix random_matrix(std::mt19937_64& rng, std::int64_t rows, std::int64_t cols) {
  std::normal_distribution<double> gauss;
  Matrix m(rows, cols);
  for (std::int64_t j = 0; j < cols; ++j)
    for (std::int64_t i = 0; i < rows; ++i) m(i, j) = gauss(rng);
  return m;
}

inline Matrix random_orthonormal(std::mt19937_64& rng, std::int64_t rows, std::int64_t cols) {
  const Matrix g = random_matrix(rng, rows, cols);
  Eigen::HouseholderQR<Matrix> qr(g);
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

inline Tensor random_tensor(std::mt19937_64& rng, const std::vector<std::int64_t>& shape) {
  Tensor t(shape);
  std::normal_distribution<double> gauss;
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = gauss(rng);
  return t;
}

/// Stable transition matrix with spectral radius and all singular values
/// equal to rho (a scaled rotation), so identification stays well-conditioned.
inline Matrix random_stable_transition(std::mt19937_64& rng, std::int64_t n, double rho = 0.9) {
  return rho * random_orthonormal(rng, n, n);
}

}  // namespace oracle
