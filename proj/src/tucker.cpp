#include "glds/tucker.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "glds/linalg.hpp"

namespace glds {

namespace {

// t x_0 U_0^T ... x_{N-1} U_{N-1}^T with one mode skipped (skip < 0: none).
Tensor project_all_modes(const Tensor& t, const std::vector<Matrix>& factors, int skip) {
  Tensor out = t;
  for (int n = 0; n < t.order(); ++n) {
    if (n == skip) continue;
    out = mode_product(out, factors[static_cast<std::size_t>(n)].transpose(), n);
  }
  return out;
}

}  // namespace

TuckerFactors tucker(const Tensor& t, const std::vector<std::int64_t>& ranks, int max_iter,
                     double tol) {
  const int order = t.order();
  if (static_cast<int>(ranks.size()) != order)
    throw std::invalid_argument("tucker: one rank per mode required");
  for (int n = 0; n < order; ++n) {
    if (ranks[static_cast<std::size_t>(n)] < 1 || ranks[static_cast<std::size_t>(n)] > t.dim(n))
      throw std::invalid_argument("tucker: rank for mode " + std::to_string(n) +
                                  " outside [1, extent]");
  }
  if (!t.all_finite()) throw std::invalid_argument("tucker: input has non-finite values");

  TuckerFactors result;
  result.factors.resize(static_cast<std::size_t>(order));
  for (int n = 0; n < order; ++n)
    result.factors[static_cast<std::size_t>(n)] =
        leading_left_singular_vectors(unfold(t, n), ranks[static_cast<std::size_t>(n)]);

  const double t_norm = t.norm();
  auto rel_error = [&](const Tensor& core) {
    if (t_norm == 0.0) return 0.0;
    const double fit2 = std::max(0.0, t_norm * t_norm - core.norm() * core.norm());
    return std::sqrt(fit2) / t_norm;
  };

  Tensor core = project_all_modes(t, result.factors, -1);
  result.error_history.push_back(rel_error(core));

  for (int iter = 0; iter < max_iter; ++iter) {
    for (int n = 0; n < order; ++n) {
      const Tensor projected = project_all_modes(t, result.factors, n);
      result.factors[static_cast<std::size_t>(n)] =
          leading_left_singular_vectors(unfold(projected, n), ranks[static_cast<std::size_t>(n)]);
    }
    core = project_all_modes(t, result.factors, -1);
    const double err = rel_error(core);
    const double prev = result.error_history.back();
    result.error_history.push_back(err);
    if (prev - err < tol) break;
  }

  result.core = std::move(core);
  return result;
}

Tensor tucker_reconstruct(const TuckerFactors& f) {
  Tensor out = f.core;
  for (int n = 0; n < f.core.order(); ++n)
    out = mode_product(out, f.factors[static_cast<std::size_t>(n)], n);
  return out;
}

double tucker_relative_error(const TuckerFactors& f, const Tensor& t) {
  const double t_norm = t.norm();
  const Tensor recon = tucker_reconstruct(f);
  const double err = (vec(recon) - vec(t)).norm();
  return t_norm == 0.0 ? err : err / t_norm;
}

}  // namespace glds
