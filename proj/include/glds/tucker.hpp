#pragma once

#include <vector>

#include "glds/tensor.hpp"

namespace glds {

/// Core tensor plus one column-orthonormal factor per mode.
struct TuckerFactors {
  Tensor core;                        // shape J_1..J_N
  std::vector<Matrix> factors;        // factors[n]: I_n x J_n
  std::vector<double> error_history;  // relative reconstruction error per refinement pass
};

/// Truncated Tucker decomposition: per-mode SVD initialization followed by
/// alternating refinement until the relative fit improvement drops below tol
/// or max_iter passes. Requested ranks beyond the numerical rank of an
/// unfolding are honored by orthonormal completion.
TuckerFactors tucker(const Tensor& t, const std::vector<std::int64_t>& ranks, int max_iter = 25,
                     double tol = 1e-7);

/// core x_1 U1 x_2 ... x_N UN.
Tensor tucker_reconstruct(const TuckerFactors& f);

/// Relative Frobenius reconstruction error against t (0 for a zero tensor fit
/// by a zero core).
double tucker_relative_error(const TuckerFactors& f, const Tensor& t);

}  // namespace glds
