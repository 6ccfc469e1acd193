#include <doctest.h>

#include <random>

#include "glds/tensor.hpp"
#include "oracles.hpp"

using glds::Matrix;
using glds::Tensor;
using glds::Vector;

namespace {

// Tensor whose entry at multi-index idx is its 1-based vec position, built
// through the oracle's index formula.
Tensor counting_tensor(const std::vector<std::int64_t>& shape) {
  Tensor t(shape);
  oracle::for_each_multi_index(shape, [&](const oracle::MultiIndex& idx) {
    t(idx) = static_cast<double>(oracle::vec_index(shape, idx) + 1);
  });
  return t;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("vec of a 2x2 tensor follows the index formula") {
  Tensor t({2, 2});
  t({0, 0}) = 1;
  t({1, 0}) = 2;
  t({0, 1}) = 3;
  t({1, 1}) = 4;
  const Vector v = glds::vec(t);
  for (int k = 0; k < 4; ++k) CHECK(v[k] == k + 1);
}

TEST_CASE("vec of a 1-order tensor is the identity") {
  Tensor t({5});
  for (int i = 0; i < 5; ++i) t({i}) = 10.0 * i;
  const Vector v = glds::vec(t);
  for (int i = 0; i < 5; ++i) CHECK(v[i] == 10.0 * i);
}

TEST_CASE("vec of the 2x3x2 counting tensor enumerates 1..12") {
  const Tensor t = counting_tensor({2, 3, 2});
  const Vector v = glds::vec(t);
  for (int k = 0; k < 12; ++k) CHECK(v[k] == k + 1);
}

TEST_CASE("unfold of a 1-order tensor at mode 0 is the row of vec") {
  Tensor t({4});
  for (int i = 0; i < 4; ++i) t({i}) = i + 1;
  const Matrix m = glds::unfold(t, 0);
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 1);
  for (int i = 0; i < 4; ++i) CHECK(m(i, 0) == i + 1);
}

TEST_CASE("unfolding a matrix at mode 1 transposes it") {
  Tensor t({2, 2});
  t({0, 0}) = 1;
  t({1, 0}) = 2;
  t({0, 1}) = 3;
  t({1, 1}) = 4;
  const Matrix m = glds::unfold(t, 1);
  CHECK(m(0, 0) == 1);
  CHECK(m(0, 1) == 2);
  CHECK(m(1, 0) == 3);
  CHECK(m(1, 1) == 4);
}

TEST_CASE("counting tensor unfolds: entries match the enumeration oracle") {
  const Tensor t = counting_tensor({2, 3, 2});
  // Mode 2 rows are whole slices: [1..6], [7..12].
  const Matrix m3 = glds::unfold(t, 2);
  CHECK(m3.rows() == 2);
  CHECK(m3.cols() == 6);
  for (int c = 0; c < 6; ++c) {
    CHECK(m3(0, c) == c + 1);
    CHECK(m3(1, c) == c + 7);
  }
  for (int mode = 0; mode < 3; ++mode)
    CHECK(oracle::max_abs_diff(glds::unfold(t, mode), oracle::unfold_by_enumeration(t, mode)) == 0.0);
}

TEST_CASE("fold inverts unfold exactly") {
  std::mt19937_64 rng(42);
  const Tensor t = oracle::random_tensor(rng, {3, 4, 5});
  for (int mode = 0; mode < 3; ++mode) {
    const Tensor back = glds::fold(glds::unfold(t, mode), mode, t.shape());
    CHECK(oracle::max_abs_diff(glds::vec(back), glds::vec(t)) == 0.0);
  }
}

TEST_CASE("fold of a 1x1 matrix gives the scalar tensor") {
  Matrix m(1, 1);
  m(0, 0) = 7.5;
  const Tensor t = glds::fold(m, 0, {1, 1});
  CHECK(t({0, 0}) == 7.5);
}

TEST_CASE("fold rejects mismatched shapes") {
  Matrix m(2, 3);
  CHECK_THROWS(glds::fold(m, 0, {2, 2}));
  CHECK_THROWS(glds::fold(m, 2, {2, 3}));
}

TEST_CASE("mode_product with the identity is the identity") {
  std::mt19937_64 rng(1);
  const Tensor t = oracle::random_tensor(rng, {3, 4, 2});
  const Tensor out = glds::mode_product(t, Matrix::Identity(4, 4), 1);
  CHECK(oracle::max_abs_diff(glds::vec(out), glds::vec(t)) == 0.0);
}

TEST_CASE("mode_product with an all-ones row sums along the mode") {
  std::mt19937_64 rng(2);
  const Tensor t = oracle::random_tensor(rng, {2, 3});
  const Tensor out = glds::mode_product(t, Matrix::Ones(1, 3), 1);
  CHECK(out.shape() == std::vector<std::int64_t>{2, 1});
  for (std::int64_t i = 0; i < 2; ++i)
    CHECK(out({i, 0}) == doctest::Approx(t({i, 0}) + t({i, 1}) + t({i, 2})).epsilon(1e-14));
}

TEST_CASE("mode_product equals the triple-loop oracle and the unfold route") {
  std::mt19937_64 rng(3);
  const Tensor t = oracle::random_tensor(rng, {3, 4, 2});
  const Matrix u = oracle::random_matrix(rng, 5, 4);
  const Tensor out = glds::mode_product(t, u, 1);
  const Tensor expect = oracle::mode_product_by_loop(t, u, 1);
  CHECK((glds::vec(out) - glds::vec(expect)).cwiseAbs().maxCoeff() < 1e-12);
  // unfold(t x_m U, m) == U * unfold(t, m)
  CHECK((glds::unfold(out, 1) - u * glds::unfold(t, 1)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mode_product validates dimensions") {
  std::mt19937_64 rng(4);
  const Tensor t = oracle::random_tensor(rng, {3, 4});
  CHECK_THROWS(glds::mode_product(t, Matrix::Identity(3, 3), 1));
  CHECK_THROWS(glds::mode_product(t, Matrix::Identity(4, 4), 2));
}

TEST_CASE("kronecker with a scalar block scales") {
  std::mt19937_64 rng(5);
  const Matrix b = oracle::random_matrix(rng, 3, 2);
  Matrix c(1, 1);
  c(0, 0) = -2.5;
  CHECK(oracle::max_abs_diff(glds::kronecker(c, b), (-2.5 * b).eval()) == 0.0);
}

TEST_CASE("kronecker with I_2 is block diagonal") {
  std::mt19937_64 rng(6);
  const Matrix b = oracle::random_matrix(rng, 2, 3);
  const Matrix k = glds::kronecker(Matrix::Identity(2, 2), b);
  CHECK(k.rows() == 4);
  CHECK(k.cols() == 6);
  CHECK(oracle::max_abs_diff(k.block(0, 0, 2, 3), b) == 0.0);
  CHECK(oracle::max_abs_diff(k.block(2, 3, 2, 3), b) == 0.0);
  CHECK(k.block(0, 3, 2, 3).cwiseAbs().maxCoeff() == 0.0);
  CHECK(k.block(2, 0, 2, 3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vec(B X A^T) == (A kron B) vec(X)") {
  std::mt19937_64 rng(7);
  const Matrix a = oracle::random_matrix(rng, 2, 3);
  const Matrix b = oracle::random_matrix(rng, 4, 2);
  const Matrix x = oracle::random_matrix(rng, 2, 3);
  const Matrix left = b * x * a.transpose();
  const Vector lhs = Eigen::Map<const Vector>(left.data(), left.size());
  const Vector rhs = glds::kronecker(a, b) * Eigen::Map<const Vector>(x.data(), x.size());
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("serial reference kernels match the parallel ones bitwise") {
  std::mt19937_64 rng(8);
  const Tensor t = oracle::random_tensor(rng, {6, 5, 4, 3});
  const Matrix u = oracle::random_matrix(rng, 7, 5);
  CHECK(oracle::max_abs_diff(glds::vec(glds::mode_product(t, u, 1)), glds::vec(glds::ref::mode_product(t, u, 1))) == 0.0);
  const Matrix a = oracle::random_matrix(rng, 4, 5);
  const Matrix b = oracle::random_matrix(rng, 3, 2);
  CHECK(oracle::max_abs_diff(glds::kronecker(a, b), glds::ref::kronecker(a, b)) == 0.0);
}

TEST_CASE("mutual consistency property: unfold(t x_m U, m) == U unfold(t, m)") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<int> order_dist(2, 4);
    std::uniform_int_distribution<std::int64_t> dim_dist(1, 5);
    const int order = order_dist(rng);
    std::vector<std::int64_t> shape(static_cast<std::size_t>(order));
    for (auto& d : shape) d = dim_dist(rng);
    const Tensor t = oracle::random_tensor(rng, shape);
    std::uniform_int_distribution<int> mode_dist(0, order - 1);
    const int mode = mode_dist(rng);
    const Matrix u = oracle::random_matrix(rng, dim_dist(rng), t.dim(mode));
    const Tensor prod = glds::mode_product(t, u, mode);
    CHECK((glds::unfold(prod, mode) - u * glds::unfold(t, mode)).cwiseAbs().maxCoeff() < 1e-11);
  }
}

}  // TEST_SUITE
