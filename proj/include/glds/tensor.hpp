#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace glds {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense n-order tensor, first-index-fastest element order: the flat offset
/// of (i_1..i_n) is sum_p i_p * prod_{m<p} I_m (0-based), so vec() is a pure
/// view of the storage. For order 2 this coincides with column-major.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> shape);
  Tensor(std::vector<std::int64_t> shape, Vector data);
  Tensor(std::initializer_list<std::int64_t> shape) : Tensor(std::vector<std::int64_t>(shape)) {}

  static Tensor from_matrix(const Matrix& m);

  int order() const { return static_cast<int>(shape_.size()); }
  const std::vector<std::int64_t>& shape() const { return shape_; }
  std::int64_t dim(int mode) const { return shape_[static_cast<std::size_t>(mode)]; }
  std::int64_t size() const { return data_.size(); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  double operator()(const std::vector<std::int64_t>& idx) const { return data_[offset(idx)]; }
  double& operator()(const std::vector<std::int64_t>& idx) { return data_[offset(idx)]; }

  std::int64_t offset(const std::vector<std::int64_t>& idx) const;

  double norm() const { return data_.norm(); }
  bool all_finite() const { return data_.allFinite(); }

  /// Shape with `mode` replaced by `extent`.
  std::vector<std::int64_t> replaced_shape(int mode, std::int64_t extent) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  std::vector<std::int64_t> shape_;
  Vector data_;
};

/// vec(t): identity view of the first-index-fastest storage.
const Vector& vec(const Tensor& t);

/// Mode-n matricization, rows = I_mode, columns over the remaining modes in
/// ascending order, first listed fastest. This is the unique column order
/// under which unfold(Z x_1 U1 ... x_N UN, n) == Un * Z_(n) * kron(U_N..U_1 skip n)^T.
Matrix unfold(const Tensor& t, int mode);

/// Inverse of unfold for the given full shape.
Tensor fold(const Matrix& m, int mode, const std::vector<std::int64_t>& shape);

/// t x_mode u: contracts u.cols() against I_mode, result extent u.rows().
Tensor mode_product(const Tensor& t, const Matrix& u, int mode);

Matrix kronecker(const Matrix& a, const Matrix& b);

namespace ref {
/// Serial reference kernels; identical code path with the OpenMP region off.
Tensor mode_product(const Tensor& t, const Matrix& u, int mode);
Matrix kronecker(const Matrix& a, const Matrix& b);
}  // namespace ref

namespace detail {
Tensor mode_product_impl(const Tensor& t, const Matrix& u, int mode, bool parallel);
Matrix kronecker_impl(const Matrix& a, const Matrix& b, bool parallel);
}  // namespace detail

}  // namespace glds
