#include <doctest.h>

#include <cmath>
#include <random>

#include "glds/grassmann.hpp"
#include "glds/lds.hpp"
#include "glds/linalg.hpp"
#include "oracles.hpp"

using glds::GldsModel;
using glds::GldsOptions;
using glds::GrassmannPoint;
using glds::Matrix;
using glds::Tensor;
using glds::TensorSeries;
using glds::Vector;

namespace {

// Generating model in the gLDS class: C is a Kronecker product of per-mode
// orthonormal factors, A a scaled rotation.
GldsModel random_glds_model(std::mt19937_64& rng, std::int64_t j1, std::int64_t j2,
                            std::int64_t i1, std::int64_t i2, double rho = 0.9) {
  GldsModel model;
  const Matrix q1 = oracle::random_orthonormal(rng, j1, i1);
  const Matrix q2 = oracle::random_orthonormal(rng, j2, i2);
  model.c = glds::kronecker(q2, q1);
  model.a = oracle::random_stable_transition(rng, i1 * i2, rho);
  model.state_shape = {i1, i2};
  model.obs_shape = {j1, j2};
  model.state_dim = static_cast<int>(i1 * i2);
  return model;
}

GrassmannPoint model_subspace(const GldsModel& model, int m, int d) {
  return glds::subspace_from_observability(glds::observability(model, m), d);
}

}  // namespace

TEST_SUITE("lds") {

TEST_CASE("tensor_matrix_product: identity, all-ones, and vec identity") {
  std::mt19937_64 rng(21);
  const Tensor x = oracle::random_tensor(rng, {2, 3});

  const Tensor same = glds::tensor_matrix_product(Matrix::Identity(6, 6), x, {2, 3});
  CHECK(oracle::max_abs_diff(glds::vec(same), glds::vec(x)) == 0.0);

  const Tensor sum = glds::tensor_matrix_product(Matrix::Ones(1, 4),
                                                 oracle::random_tensor(rng, {2, 2}), {1});
  CHECK(sum.size() == 1);

  const Matrix c = oracle::random_matrix(rng, 6, 6);
  const Tensor y = glds::tensor_matrix_product(c, x, {3, 2});
  CHECK(oracle::max_abs_diff(glds::vec(y), (c * glds::vec(x)).eval()) < 1e-12);

  CHECK_THROWS(glds::tensor_matrix_product(c, x, {5, 1}));
  CHECK_THROWS(glds::tensor_matrix_product(oracle::random_matrix(rng, 4, 5), x, {4}));
}

TEST_CASE("Lemma-1 identity vec(C (*) X) == C vec(X) on random cases") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<std::int64_t> dim(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<std::int64_t> in_shape = {dim(rng), dim(rng), dim(rng)};
    const std::vector<std::int64_t> out_shape = {dim(rng), dim(rng)};
    const Tensor x = oracle::random_tensor(rng, in_shape);
    const Matrix c = oracle::random_matrix(rng, out_shape[0] * out_shape[1], x.size());
    const Tensor y = glds::tensor_matrix_product(c, x, out_shape);
    CHECK(oracle::max_abs_diff(glds::vec(y), (c * glds::vec(x)).eval()) < 1e-12);
  }
}

TEST_CASE("stabilize leaves contractive matrices unchanged") {
  const Matrix a = 0.5 * Matrix::Identity(3, 3);
  CHECK(oracle::max_abs_diff(glds::stabilize(a, 0.01), a) == 0.0);
}

TEST_CASE("stabilize scales 2I to 0.99I") {
  const Matrix a = 2.0 * Matrix::Identity(3, 3);
  const Matrix s = glds::stabilize(a, 0.01);
  CHECK(oracle::max_abs_diff(s, (0.99 * Matrix::Identity(3, 3)).eval()) < 1e-12);
}

TEST_CASE("stabilize caps a known spectral radius of 1.3") {
  std::mt19937_64 rng(23);
  // Known spectrum by construction: similarity transform of a diagonal.
  Matrix d = Matrix::Zero(4, 4);
  d.diagonal() << 1.3, -0.7, 0.2, 0.05;
  const Matrix s = oracle::random_matrix(rng, 4, 4);
  const Matrix a = s * d * s.inverse();
  const Matrix stabilized = glds::stabilize(a, 0.01);
  CHECK(glds::spectral_radius(stabilized) <= 0.99 + 1e-9);
  // Uniform scaling: eigenvector structure preserved, so the matrix is a
  // multiple of the input.
  CHECK(oracle::max_abs_diff(stabilized, (a * (0.99 / 1.3)).eval()) < 1e-9);
}

TEST_CASE("stabilize is idempotent") {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = 3.0 * oracle::random_matrix(rng, 5, 5);
    const Matrix once = glds::stabilize(a, 0.01);
    const Matrix twice = glds::stabilize(once, 0.01);
    CHECK(oracle::max_abs_diff(once, twice) == 0.0);
  }
  CHECK_THROWS(glds::stabilize(oracle::random_matrix(rng, 2, 3), 0.01));
}

TEST_CASE("observability stacks C A^k against the naive power oracle") {
  std::mt19937_64 rng(25);
  GldsModel model;
  model.c = oracle::random_matrix(rng, 4, 2);
  model.a = oracle::random_matrix(rng, 2, 2);
  const Matrix o = glds::observability(model, 3);
  CHECK(o.rows() == 16);
  for (int k = 0; k <= 3; ++k) {
    Matrix ak = Matrix::Identity(2, 2);
    for (int i = 0; i < k; ++i) ak = (ak * model.a).eval();
    CHECK(oracle::max_abs_diff(o.middleRows(4 * k, 4), (model.c * ak).eval()) < 1e-12);
  }

  CHECK(oracle::max_abs_diff(glds::observability(model, 0), model.c) == 0.0);
  model.a.setZero();
  const Matrix o0 = glds::observability(model, 2);
  CHECK(o0.bottomRows(8).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("subspace_from_observability basics") {
  std::mt19937_64 rng(26);
  const Matrix q = oracle::random_orthonormal(rng, 6, 2);
  CHECK(glds::chordal_distance(glds::subspace_from_observability(q, 2), GrassmannPoint{q}) <
        1e-10);

  // Rank-1 case [u | 2u].
  const Vector u = oracle::random_matrix(rng, 5, 1).col(0).normalized();
  Matrix o(5, 2);
  o.col(0) = u;
  o.col(1) = 2.0 * u;
  std::string warning;
  const GrassmannPoint p = glds::subspace_from_observability(o, 1, &warning);
  CHECK(std::abs(std::abs(p.basis.col(0).dot(u)) - 1.0) < 1e-12);
  CHECK(warning.empty());

  // d beyond the numerical rank pads and warns.
  const GrassmannPoint padded = glds::subspace_from_observability(o, 2, &warning);
  CHECK(!warning.empty());
  CHECK(glds::is_orthonormal(padded.basis));
}

TEST_CASE("subspace_from_observability equals the dense eigendecomposition") {
  std::mt19937_64 rng(27);
  const Matrix o = oracle::random_matrix(rng, 12, 5);
  const GrassmannPoint p = glds::subspace_from_observability(o, 2);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(o * o.transpose());
  const Matrix top2 = eig.eigenvectors().rightCols(2);  // ascending eigenvalues
  CHECK(oracle::dense_chordal(p.basis, top2) < 1e-9);
}

TEST_CASE("simulate_lds edge dynamics") {
  std::mt19937_64 rng(28);
  GldsModel model = random_glds_model(rng, 3, 2, 2, 1);
  const Tensor x0 = oracle::random_tensor(rng, {2, 1});

  GldsModel zero_a = model;
  zero_a.a.setZero();
  const TensorSeries s0 = glds::simulate_lds(zero_a, x0, 4, 0.0, 1);
  for (std::int64_t t = 1; t < 4; ++t) CHECK(s0.frame(t).norm() == 0.0);

  GldsModel identity_a = model;
  identity_a.a = Matrix::Identity(2, 2);
  const TensorSeries s1 = glds::simulate_lds(identity_a, x0, 4, 0.0, 1);
  const Vector expected = model.c * glds::vec(x0);
  for (std::int64_t t = 0; t < 4; ++t)
    CHECK(oracle::max_abs_diff(glds::vec(s1.frame(t)), expected) < 1e-12);

  const TensorSeries n1 = glds::simulate_lds(model, x0, 6, 0.1, 99);
  const TensorSeries n2 = glds::simulate_lds(model, x0, 6, 0.1, 99);
  CHECK(oracle::max_abs_diff(glds::vec(n1.frames), glds::vec(n2.frames)) == 0.0);
}

TEST_CASE("fit_lds on a constant sequence gives A == 1 scaled by the margin") {
  Vector y0(3);
  y0 << 1.0, -2.0, 0.5;
  Matrix y(3, 8);
  for (int t = 0; t < 8; ++t) y.col(t) = y0;
  const GldsModel model = glds::fit_lds(y, 1);
  // rho of the pre-stabilization [1] hits the margin cap.
  CHECK(model.a(0, 0) == doctest::Approx(0.99).epsilon(1e-10));
  CHECK(std::abs(std::abs(model.c.col(0).dot(y0.normalized())) - 1.0) < 1e-12);
}

TEST_CASE("fit_lds rejects a zero observation matrix") {
  CHECK_THROWS_WITH_AS(glds::fit_lds(Matrix::Zero(4, 6), 1), doctest::Contains("rank zero"),
                       std::invalid_argument);
}

TEST_CASE("fit_lds pads and flags when d exceeds the numerical rank") {
  Vector y0(4);
  y0 << 1.0, 2.0, -1.0, 0.5;
  Matrix y(4, 10);
  for (int t = 0; t < 10; ++t) y.col(t) = (t + 1.0) * y0;  // rank 1
  const GldsModel model = glds::fit_lds(y, 2);
  CHECK(!model.warnings.empty());
  CHECK(glds::is_orthonormal(model.c, 1e-10));
  CHECK(model.c.cols() == 2);
}

TEST_CASE("fit_lds recovers the observability subspace of a noiseless system") {
  std::mt19937_64 rng(29);
  const int m = 5;
  for (int trial = 0; trial < 5; ++trial) {
    GldsModel truth;
    const std::int64_t n = 8, d = 3;
    truth.c = oracle::random_orthonormal(rng, n, d);
    truth.a = oracle::random_stable_transition(rng, d, 0.9);
    truth.obs_shape = {n};
    truth.state_shape = {d};
    truth.state_dim = static_cast<int>(d);
    const Tensor x0 = oracle::random_tensor(rng, {d});
    const TensorSeries series = glds::simulate_lds(truth, x0, 200, 0.0, 7);

    const GldsModel fitted = glds::fit_lds(series.as_columns(), static_cast<int>(d));
    const GrassmannPoint est = model_subspace(fitted, m, static_cast<int>(d));
    const GrassmannPoint expect = model_subspace(truth, m, static_cast<int>(d));
    CHECK(glds::chordal_distance(est, expect) < 1e-6);
  }
}

TEST_CASE("fit_glds recovers a noiseless gLDS within 1e-4 chordal distance") {
  std::mt19937_64 rng(30);
  const int m = 5;
  for (int trial = 0; trial < 5; ++trial) {
    const GldsModel truth = random_glds_model(rng, 7, 4, 2, 2);
    const Tensor x0 = oracle::random_tensor(rng, {2, 2});
    const TensorSeries series = glds::simulate_lds(truth, x0, 100, 0.0, 31);

    const auto [fitted, point] = glds::fit_glds(series, {2, 2}, 4, m);
    const GrassmannPoint expect = model_subspace(truth, m, 4);
    CHECK(glds::chordal_distance(point, expect) < 1e-4);
    CHECK(glds::is_orthonormal(fitted.c, 1e-10));
  }
}

TEST_CASE("fit_glds on constant frames: state constant, A identity-like on its span") {
  std::mt19937_64 rng(31);
  const Tensor frame = oracle::random_tensor(rng, {3, 2});
  std::vector<Tensor> frames(10, frame);
  const TensorSeries series = TensorSeries::from_frames(frames);
  const auto [model, point] = glds::fit_glds(series, {3, 2}, 1, 3);
  // The single state direction is preserved up to the stabilization margin.
  const Vector state = model.c.transpose() * glds::vec(frame);
  const Vector mapped = model.a * state;
  CHECK(oracle::max_abs_diff(mapped, (0.99 * state).eval()) < 1e-8 * state.norm());
  CHECK(glds::is_orthonormal(point.basis));
}

TEST_CASE("fit_glds matches fit_lds on 2-order input with full ranks") {
  std::mt19937_64 rng(32);
  const int m = 4;
  for (int trial = 0; trial < 8; ++trial) {
    GldsModel base;
    const std::int64_t n = 8, d = 3;
    base.c = oracle::random_orthonormal(rng, n, d);
    base.a = oracle::random_stable_transition(rng, d, 0.9);
    base.obs_shape = {n};
    base.state_shape = {d};
    const Tensor x0 = oracle::random_tensor(rng, {d});
    const TensorSeries series = glds::simulate_lds(base, x0, 60, 0.05, 100 + trial);

    const GldsModel lds = glds::fit_lds(series.as_columns(), static_cast<int>(d));
    const GrassmannPoint from_lds = model_subspace(lds, m, static_cast<int>(d));
    const auto [gl, from_glds] = glds::fit_glds(series, {n}, static_cast<int>(d), m);
    CHECK(glds::chordal_distance(from_lds, from_glds) < 1e-8);
  }
}

TEST_CASE("fit_glds validates arguments") {
  std::mt19937_64 rng(33);
  const TensorSeries series{oracle::random_tensor(rng, {3, 2, 10})};
  CHECK_THROWS(glds::fit_glds(series, {3}, 2, 5));        // wrong rank count
  CHECK_THROWS(glds::fit_glds(series, {4, 2}, 2, 5));     // rank beyond extent
  CHECK_THROWS(glds::fit_glds(series, {3, 2}, 11, 5));    // d beyond tau
  CHECK_THROWS(glds::fit_glds(series, {3, 2}, 2, -1));    // bad m
  Tensor bad = series.frames;
  bad.data()[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS(glds::fit_glds(TensorSeries{bad}, {3, 2}, 2, 5));
}

TEST_CASE("reconstruction consistency: Y_(n)^T tracks C X within the tucker error") {
  std::mt19937_64 rng(34);
  const GldsModel truth = random_glds_model(rng, 6, 3, 2, 2);
  const Tensor x0 = oracle::random_tensor(rng, {2, 2});
  const TensorSeries series = glds::simulate_lds(truth, x0, 50, 0.02, 5);

  const std::vector<std::int64_t> ranks = {2, 2};
  const int d = 4;
  const auto [model, point] = glds::fit_glds(series, ranks, d, 3);
  // Rebuild the state trajectory the same way the estimator defines it.
  const glds::TuckerFactors tf = glds::tucker(series.frames, {2, 2, 4});
  const Matrix x = (tf.factors[2] * glds::unfold(tf.core, 2)).transpose();
  const Matrix y_cols = series.as_columns();
  const double fit_err = (glds::vec(glds::tucker_reconstruct(tf)) - glds::vec(series.frames)).norm();
  const double recon_err = (y_cols - model.c * x).norm();
  CHECK(recon_err <= fit_err + 1e-9);
}

TEST_CASE("fit_glds state trajectory matches the Eq.-12 unfolding identity") {
  std::mt19937_64 rng(35);
  const TensorSeries series{oracle::random_tensor(rng, {4, 3, 12})};
  const glds::TuckerFactors tf = glds::tucker(series.frames, {3, 2, 5});
  const Matrix lhs = glds::unfold(series.frames, 2).transpose();
  const Matrix c = glds::kronecker(tf.factors[1], tf.factors[0]);
  const Matrix x = (tf.factors[2] * glds::unfold(tf.core, 2)).transpose();
  const double fit_err =
      (glds::vec(glds::tucker_reconstruct(tf)) - glds::vec(series.frames)).norm();
  CHECK((lhs - c * x).norm() <= fit_err + 1e-9);
}

}  // TEST_SUITE
