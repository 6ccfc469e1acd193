#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glds/tensor.hpp"
#include "glds/tucker.hpp"

namespace glds {

/// Tall orthonormal basis; the column span is the sequence descriptor.
struct GrassmannPoint {
  Matrix basis;  // p x d, p > d, orthonormal columns

  std::int64_t ambient_dim() const { return basis.rows(); }
  std::int64_t subspace_dim() const { return basis.cols(); }
};

/// Identified linear system. For tensor observations C acts on vec'd states;
/// state_shape/obs_shape record the per-mode extents behind I and J.
struct GldsModel {
  Matrix a;                             // I x I transition
  Matrix c;                             // J x I observation
  std::vector<std::int64_t> state_shape;
  std::vector<std::int64_t> obs_shape;
  int state_dim = 0;                    // subspace dimension d
  std::optional<Matrix> q;              // state noise covariance (diagnostic)
  std::optional<Matrix> r;              // observation noise covariance (diagnostic)
  std::vector<std::string> warnings;

  std::int64_t latent_size() const { return a.rows(); }
  std::int64_t observation_size() const { return c.rows(); }
};

/// Ordered tensor frames sharing one shape; the LAST mode of `frames` is time.
struct TensorSeries {
  Tensor frames;

  std::int64_t length() const { return frames.dim(frames.order() - 1); }
  std::vector<std::int64_t> frame_shape() const;
  Tensor frame(std::int64_t t) const;

  static TensorSeries from_frames(const std::vector<Tensor>& frames);
  /// Columns of m become 1-order frames (a 2-order series).
  static TensorSeries from_matrix(const Matrix& m);
  /// J x tau matrix whose column t is vec(frame t).
  Matrix as_columns() const;

  void validate() const;
};

struct GldsOptions {
  double stabilization_margin = 0.01;
  double pinv_rtol = 1e-10;
  int tucker_max_iter = 25;
  double tucker_tol = 1e-7;
  /// Temporal Tucker rank; 0 means "use d". Callers fitting sequences shorter
  /// than d can cap it at tau instead of erroring out.
  int temporal_rank = 0;
};

/// vec(result) == c * vec(x); out_shape's product must equal c.rows().
Tensor tensor_matrix_product(const Matrix& c, const Tensor& x,
                             const std::vector<std::int64_t>& out_shape);

/// Classical subspace identification of y (n x tau) at order d: C from the
/// thin SVD, A from the shifted normal equations, then stabilization.
GldsModel fit_lds(const Matrix& y, int d, const GldsOptions& options = {});

/// Tucker-based identification of an n-order series with mode ranks
/// (L_1..L_{n-1}) and subspace dimension d; returns the model and the span of
/// the truncated observability matrix (powers 0..m).
std::pair<GldsModel, GrassmannPoint> fit_glds(const TensorSeries& series,
                                              const std::vector<std::int64_t>& ranks, int d, int m,
                                              const GldsOptions& options = {});

/// Uniform spectral scaling: unchanged when rho(a) <= 1 - margin, otherwise
/// a * (1 - margin) / rho(a).
Matrix stabilize(const Matrix& a, double margin = 0.01);

/// Vertical stack of C A^k for k = 0..m.
Matrix observability(const GldsModel& model, int m);

/// First d left singular vectors of o, orthonormally completed (with warning)
/// past the numerical rank.
GrassmannPoint subspace_from_observability(const Matrix& o, int d, std::string* warning = nullptr);

/// Rolls the model forward from x0 with Gaussian noise (deterministic per
/// seed); noise_scale 0 gives the exact linear rollout.
TensorSeries simulate_lds(const GldsModel& model, const Tensor& x0, std::int64_t steps,
                          double noise_scale, std::uint64_t seed);

}  // namespace glds
