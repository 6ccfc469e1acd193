#include "glds/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "glds/parallel.hpp"

namespace glds {

namespace {

std::int64_t shape_product(const std::vector<std::int64_t>& shape) {
  std::int64_t p = 1;
  for (auto d : shape) p *= d;
  return p;
}

void check_shape(const std::vector<std::int64_t>& shape) {
  if (shape.empty()) throw std::invalid_argument("tensor order must be >= 1");
  for (auto d : shape)
    if (d <= 0) throw std::invalid_argument("tensor dimensions must be positive");
}

void check_mode(const Tensor& t, int mode) {
  if (mode < 0 || mode >= t.order())
    throw std::invalid_argument("mode " + std::to_string(mode) + " out of range for order " +
                                std::to_string(t.order()));
}

}  // namespace

Tensor::Tensor(std::vector<std::int64_t> shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_ = Vector::Zero(shape_product(shape_));
}

Tensor::Tensor(std::vector<std::int64_t> shape, Vector data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check_shape(shape_);
  if (data_.size() != shape_product(shape_))
    throw std::invalid_argument("tensor data length does not match shape product");
}

Tensor Tensor::from_matrix(const Matrix& m) {
  // Column-major matrix storage is already first-index-fastest.
  Vector v = Eigen::Map<const Vector>(m.data(), m.size());
  return Tensor({m.rows(), m.cols()}, std::move(v));
}

std::int64_t Tensor::offset(const std::vector<std::int64_t>& idx) const {
  if (idx.size() != shape_.size()) throw std::invalid_argument("index order mismatch");
  std::int64_t off = 0, stride = 1;
  for (std::size_t p = 0; p < shape_.size(); ++p) {
    if (idx[p] < 0 || idx[p] >= shape_[p]) throw std::out_of_range("tensor index out of range");
    off += idx[p] * stride;
    stride *= shape_[p];
  }
  return off;
}

std::vector<std::int64_t> Tensor::replaced_shape(int mode, std::int64_t extent) const {
  auto s = shape_;
  s[static_cast<std::size_t>(mode)] = extent;
  return s;
}

const Vector& vec(const Tensor& t) { return t.data(); }

// Flat offset k splits as k = low + i_mode*below + high*below*I_mode, where
// below = prod of dims before `mode`. Dropping the mode index merges low and
// high blocks, which yields the ascending-order first-fastest column index.
Matrix unfold(const Tensor& t, int mode) {
  check_mode(t, mode);
  std::int64_t below = 1;
  for (int p = 0; p < mode; ++p) below *= t.dim(p);
  const std::int64_t rows = t.dim(mode);
  const std::int64_t cols = t.size() / rows;
  const std::int64_t block = below * rows;

  Matrix m(rows, cols);
  const Vector& d = t.data();
  for (std::int64_t k = 0; k < t.size(); ++k) {
    const std::int64_t low = k % below;
    const std::int64_t row = (k / below) % rows;
    const std::int64_t high = k / block;
    m(row, low + high * below) = d[k];
  }
  return m;
}

Tensor fold(const Matrix& m, int mode, const std::vector<std::int64_t>& shape) {
  check_shape(shape);
  if (mode < 0 || mode >= static_cast<int>(shape.size()))
    throw std::invalid_argument("fold: mode out of range");
  std::int64_t below = 1;
  for (int p = 0; p < mode; ++p) below *= shape[static_cast<std::size_t>(p)];
  const std::int64_t rows = shape[static_cast<std::size_t>(mode)];
  const std::int64_t total = shape_product(shape);
  if (m.rows() != rows || m.cols() != total / rows)
    throw std::invalid_argument("fold: matrix shape does not match target shape");

  Tensor t(shape);
  Vector& d = t.data();
  const std::int64_t block = below * rows;
  for (std::int64_t k = 0; k < total; ++k) {
    const std::int64_t low = k % below;
    const std::int64_t row = (k / below) % rows;
    const std::int64_t high = k / block;
    d[k] = m(row, low + high * below);
  }
  return t;
}

namespace detail {

Tensor mode_product_impl(const Tensor& t, const Matrix& u, int mode, bool parallel) {
  check_mode(t, mode);
  if (u.cols() != t.dim(mode))
    throw std::invalid_argument("mode_product: u.cols() must equal the mode extent");

  const Matrix in = unfold(t, mode);
  Matrix out(u.rows(), in.cols());
  // Fixed column chunks: the partition does not depend on the thread count,
  // so serial and parallel results are bit-identical.
  constexpr std::int64_t kChunk = 64;
  const std::int64_t chunks = (in.cols() + kChunk - 1) / kChunk;
  for_each_index(chunks, parallel, [&](std::int64_t b) {
    const std::int64_t c0 = b * kChunk;
    const std::int64_t width = std::min(kChunk, in.cols() - c0);
    out.middleCols(c0, width).noalias() = u * in.middleCols(c0, width);
  });
  return fold(out, mode, t.replaced_shape(mode, u.rows()));
}

Matrix kronecker_impl(const Matrix& a, const Matrix& b, bool parallel) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  const std::int64_t blocks = a.rows() * a.cols();
  for_each_index(blocks, parallel, [&](std::int64_t k) {
    const std::int64_t i = k % a.rows();
    const std::int64_t j = k / a.rows();
    out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  });
  return out;
}

}  // namespace detail

Tensor mode_product(const Tensor& t, const Matrix& u, int mode) {
  return detail::mode_product_impl(t, u, mode, true);
}

Matrix kronecker(const Matrix& a, const Matrix& b) { return detail::kronecker_impl(a, b, true); }

namespace ref {
Tensor mode_product(const Tensor& t, const Matrix& u, int mode) {
  return detail::mode_product_impl(t, u, mode, false);
}
Matrix kronecker(const Matrix& a, const Matrix& b) { return detail::kronecker_impl(a, b, false); }
}  // namespace ref

}  // namespace glds
