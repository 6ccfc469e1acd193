#include "glds/lds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "glds/linalg.hpp"

namespace glds {

namespace {

std::int64_t product(const std::vector<std::int64_t>& dims) {
  std::int64_t p = 1;
  for (auto d : dims) p *= d;
  return p;
}

}  // namespace

std::vector<std::int64_t> TensorSeries::frame_shape() const {
  auto s = frames.shape();
  s.pop_back();
  return s;
}

Tensor TensorSeries::frame(std::int64_t t) const {
  const auto fshape = frame_shape();
  const std::int64_t fsize = product(fshape);
  return Tensor(fshape, frames.data().segment(t * fsize, fsize));
}

TensorSeries TensorSeries::from_frames(const std::vector<Tensor>& frames) {
  if (frames.size() < 2) throw std::invalid_argument("tensor series needs at least 2 frames");
  const auto fshape = frames.front().shape();
  auto shape = fshape;
  shape.push_back(static_cast<std::int64_t>(frames.size()));
  Tensor stacked(shape);
  const std::int64_t fsize = frames.front().size();
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].shape() != fshape)
      throw std::invalid_argument("tensor series frames must share one shape");
    stacked.data().segment(static_cast<std::int64_t>(t) * fsize, fsize) = frames[t].data();
  }
  TensorSeries s{std::move(stacked)};
  s.validate();
  return s;
}

TensorSeries TensorSeries::from_matrix(const Matrix& m) {
  TensorSeries s{Tensor::from_matrix(m)};
  s.validate();
  return s;
}

Matrix TensorSeries::as_columns() const {
  // Time is the last mode, so the flat storage is frame-contiguous.
  const std::int64_t tau = length();
  const std::int64_t fsize = frames.size() / tau;
  return Eigen::Map<const Matrix>(frames.data().data(), fsize, tau);
}

void TensorSeries::validate() const {
  if (frames.order() < 2) throw std::invalid_argument("tensor series must have a time mode");
  if (length() < 2) throw std::invalid_argument("tensor series needs at least 2 frames");
  if (!frames.all_finite()) throw std::invalid_argument("tensor series has non-finite values");
}

Tensor tensor_matrix_product(const Matrix& c, const Tensor& x,
                             const std::vector<std::int64_t>& out_shape) {
  if (c.cols() != x.size())
    throw std::invalid_argument("tensor_matrix_product: c.cols() must equal the element count");
  if (product(out_shape) != c.rows())
    throw std::invalid_argument("tensor_matrix_product: output shape product must equal c.rows()");
  return Tensor(out_shape, c * vec(x));
}

Matrix stabilize(const Matrix& a, double margin) {
  if (a.rows() != a.cols()) throw std::invalid_argument("stabilize: matrix must be square");
  if (margin <= 0.0 || margin >= 1.0) throw std::invalid_argument("stabilize: margin in (0,1)");
  const double rho = spectral_radius(a);
  if (rho <= (1.0 - margin) + 1e-12) return a;
  return a * ((1.0 - margin) / rho);
}

Matrix observability(const GldsModel& model, int m) {
  if (m < 0) throw std::invalid_argument("observability: m must be >= 0");
  const std::int64_t j = model.c.rows();
  const std::int64_t i = model.c.cols();
  Matrix o(j * (m + 1), i);
  Matrix block = model.c;
  o.topRows(j) = block;
  for (int k = 1; k <= m; ++k) {
    block = block * model.a;
    o.middleRows(static_cast<std::int64_t>(k) * j, j) = block;
  }
  return o;
}

GrassmannPoint subspace_from_observability(const Matrix& o, int d, std::string* warning) {
  if (d < 1 || d > std::min(o.rows(), o.cols()))
    throw std::invalid_argument("subspace_from_observability: d outside [1, min(rows, cols)]");
  bool deficient = false;
  Matrix basis = leading_left_singular_vectors(o, d, &deficient);
  if (deficient && warning)
    *warning = "observability matrix rank below d; basis padded by orthonormal completion";
  return GrassmannPoint{std::move(basis)};
}

GldsModel fit_lds(const Matrix& y, int d, const GldsOptions& options) {
  const std::int64_t n = y.rows();
  const std::int64_t tau = y.cols();
  if (tau < 2) throw std::invalid_argument("fit_lds: need at least 2 observations");
  if (d < 1 || d > std::min<std::int64_t>(n, tau))
    throw std::invalid_argument("fit_lds: d outside [1, min(n, tau)]");
  if (!y.allFinite()) throw std::invalid_argument("fit_lds: non-finite observations");

  const Svd svd = thin_svd(y);
  const int rank = numerical_rank(svd.sigma);
  if (rank == 0) throw std::invalid_argument("fit_lds: rank zero observation matrix");

  GldsModel model;
  if (rank < d) {
    model.warnings.push_back("requested order d exceeds numerical rank; basis padded");
    model.c = orthonormal_completion(svd.u.leftCols(rank), d);
  } else {
    model.c = svd.u.leftCols(d);
  }

  // A from the shifted normal equations. With V_d the leading right singular
  // vectors, V^T D1 V = V[1:]^T V[:-1] and V^T D2 V = V[:-1]^T V[:-1].
  const int de = std::min(rank, d);  // rows beyond the rank carry zero state energy
  const Matrix vd = svd.v.leftCols(de);
  const Vector sig = svd.sigma.head(de);
  const Matrix v_head = vd.topRows(tau - 1);
  const Matrix v_tail = vd.bottomRows(tau - 1);
  const Matrix d1 = v_tail.transpose() * v_head;
  const Matrix d2 = v_head.transpose() * v_head;
  Matrix a_small = sig.asDiagonal() * d1 * pseudo_inverse(d2, options.pinv_rtol) *
                   sig.cwiseInverse().asDiagonal();
  Matrix a = Matrix::Zero(d, d);
  a.topLeftCorner(de, de) = a_small;
  model.a = stabilize(a, options.stabilization_margin);
  model.state_shape = {d};
  model.obs_shape = {n};
  model.state_dim = d;

  // Residual covariances, stored for diagnostics only.
  const Matrix x = sig.asDiagonal() * vd.transpose();  // de x tau
  Matrix x_full = Matrix::Zero(d, tau);
  x_full.topRows(de) = x;
  const Matrix v_res = x_full.rightCols(tau - 1) - model.a * x_full.leftCols(tau - 1);
  const Matrix w_res = y - model.c * x_full;
  model.q = (v_res * v_res.transpose()) / static_cast<double>(tau - 1);
  model.r = (w_res * w_res.transpose()) / static_cast<double>(tau);
  return model;
}

std::pair<GldsModel, GrassmannPoint> fit_glds(const TensorSeries& series,
                                              const std::vector<std::int64_t>& ranks, int d, int m,
                                              const GldsOptions& options) {
  series.validate();
  const int order = series.frames.order();
  const std::int64_t tau = series.length();
  const auto fshape = series.frame_shape();
  if (static_cast<int>(ranks.size()) != order - 1)
    throw std::invalid_argument("fit_glds: one rank per non-time mode required");
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (ranks[i] < 1 || ranks[i] > fshape[i])
      throw std::invalid_argument("fit_glds: mode rank outside [1, extent]");
  int temporal = options.temporal_rank > 0 ? options.temporal_rank : d;
  if (temporal < 1 || temporal > tau)
    throw std::invalid_argument("fit_glds: temporal rank outside [1, tau]");
  if (m < 0) throw std::invalid_argument("fit_glds: m must be >= 0");

  // Tucker fit of the stacked observations with the time mode truncated at
  // the temporal rank.
  std::vector<std::int64_t> tucker_ranks = ranks;
  tucker_ranks.push_back(temporal);
  const TuckerFactors tf =
      tucker(series.frames, tucker_ranks, options.tucker_max_iter, options.tucker_tol);

  // C = U^(n-1) kron ... kron U^(1).
  Matrix c = tf.factors[0];
  for (int mode = 1; mode < order - 1; ++mode)
    c = kronecker(tf.factors[static_cast<std::size_t>(mode)], c);

  // State trajectory X_(n)^T = (U^(n) Z_(n))^T, columns are vec'd states.
  const Matrix x = (tf.factors[static_cast<std::size_t>(order - 1)] * unfold(tf.core, order - 1))
                       .transpose();

  GldsModel model;
  model.c = std::move(c);
  const Matrix x_past = x.leftCols(tau - 1);
  const Matrix x_next = x.rightCols(tau - 1);
  model.a = stabilize(x_next * pseudo_inverse(x_past, options.pinv_rtol),
                      options.stabilization_margin);
  model.state_shape = ranks;
  model.obs_shape = fshape;
  model.state_dim = d;

  const Matrix v_res = x_next - model.a * x_past;
  const Matrix w_res = series.as_columns() - model.c * x;
  model.q = (v_res * v_res.transpose()) / static_cast<double>(tau - 1);
  model.r = (w_res * w_res.transpose()) / static_cast<double>(tau);

  const Matrix o = observability(model, m);
  if (d > std::min(o.rows(), o.cols()))
    throw std::invalid_argument("fit_glds: d exceeds observability dimensions");
  std::string warning;
  GrassmannPoint point = subspace_from_observability(o, d, &warning);
  if (!warning.empty()) model.warnings.push_back(warning);
  return {std::move(model), std::move(point)};
}

TensorSeries simulate_lds(const GldsModel& model, const Tensor& x0, std::int64_t steps,
                          double noise_scale, std::uint64_t seed) {
  if (vec(x0).size() != model.latent_size())
    throw std::invalid_argument("simulate_lds: x0 size must match the latent dimension");
  if (steps < 2) throw std::invalid_argument("simulate_lds: need at least 2 steps");
  if (noise_scale > 0.0 && spectral_radius(model.a) > 1.0 + 1e-12)
    std::fputs("simulate_lds: warning: simulating an unstable model with noise\n", stderr);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noise_vec = [&](std::int64_t len) {
    Vector v = Vector::Zero(len);
    if (noise_scale > 0.0)
      for (std::int64_t i = 0; i < len; ++i) v[i] = noise_scale * gauss(rng);
    return v;
  };

  const std::int64_t j = model.observation_size();
  auto shape = model.obs_shape;
  shape.push_back(steps);
  Tensor frames(shape);
  Vector state = vec(x0);
  for (std::int64_t t = 0; t < steps; ++t) {
    const Vector obs = model.c * state + noise_vec(j);
    frames.data().segment(t * j, j) = obs;
    state = model.a * state + noise_vec(model.latent_size());
  }
  return TensorSeries{std::move(frames)};
}

}  // namespace glds
