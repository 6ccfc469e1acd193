#pragma once

#include "glds/tensor.hpp"

namespace glds {

struct Svd {
  Matrix u;        // thin left singular vectors
  Vector sigma;    // descending
  Matrix v;        // thin right singular vectors
};

/// Thin SVD with a reproducible sign convention: the largest-magnitude entry
/// of each left singular vector is non-negative (V flipped to match).
Svd thin_svd(const Matrix& m);

/// Count of singular values above rtol * sigma_max (0 for a zero matrix).
int numerical_rank(const Vector& sigma, double rtol = 1e-10);

/// Moore-Penrose inverse; singular values below rtol * sigma_max are dropped.
Matrix pseudo_inverse(const Matrix& m, double rtol = 1e-10);

double spectral_radius(const Matrix& a);

/// First `count` columns of an orthonormal basis whose leading columns span
/// range(basis); deterministic completion against identity columns.
Matrix orthonormal_completion(const Matrix& basis, std::int64_t count);

/// Leading `count` left singular vectors of m, sign-normalized and padded by
/// orthonormal completion when the numerical rank falls short (sets
/// *rank_deficient when given).
Matrix leading_left_singular_vectors(const Matrix& m, std::int64_t count,
                                     bool* rank_deficient = nullptr);

bool is_orthonormal(const Matrix& basis, double tol = 1e-10);

}  // namespace glds
