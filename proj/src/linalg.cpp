#include "glds/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <stdexcept>

namespace glds {

Svd thin_svd(const Matrix& m) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (std::int64_t j = 0; j < out.u.cols(); ++j) {
    std::int64_t imax = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.u(imax, j) < 0.0) {
      out.u.col(j) = -out.u.col(j);
      if (j < out.v.cols()) out.v.col(j) = -out.v.col(j);
    }
  }
  return out;
}

int numerical_rank(const Vector& sigma, double rtol) {
  if (sigma.size() == 0) return 0;
  const double cutoff = rtol * sigma[0];
  int r = 0;
  for (std::int64_t i = 0; i < sigma.size(); ++i)
    if (sigma[i] > cutoff && sigma[i] > 0.0) ++r;
  return r;
}

Matrix pseudo_inverse(const Matrix& m, double rtol) {
  const Svd svd = thin_svd(m);
  const int r = numerical_rank(svd.sigma, rtol);
  if (r == 0) return Matrix::Zero(m.cols(), m.rows());
  Matrix out = Matrix::Zero(m.cols(), m.rows());
  for (int i = 0; i < r; ++i)
    out.noalias() += (1.0 / svd.sigma[i]) * svd.v.col(i) * svd.u.col(i).transpose();
  return out;
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("spectral_radius: matrix must be square");
  Eigen::EigenSolver<Matrix> eig(a, /*computeEigenvectors=*/false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix orthonormal_completion(const Matrix& basis, std::int64_t count) {
  const std::int64_t p = basis.rows();
  if (count > p) throw std::invalid_argument("orthonormal_completion: count exceeds ambient dim");
  Matrix stacked(p, basis.cols() + p);
  stacked << basis, Matrix::Identity(p, p);
  Eigen::HouseholderQR<Matrix> qr(stacked);
  Matrix q = qr.householderQ() * Matrix::Identity(p, count);
  // Householder Q columns can differ from the input by sign; renormalize the
  // convention the same way thin_svd does.
  for (std::int64_t j = 0; j < q.cols(); ++j) {
    std::int64_t imax = 0;
    q.col(j).cwiseAbs().maxCoeff(&imax);
    if (q(imax, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Matrix leading_left_singular_vectors(const Matrix& m, std::int64_t count, bool* rank_deficient) {
  if (count < 1 || count > m.rows())
    throw std::invalid_argument("leading_left_singular_vectors: invalid count");
  const Svd svd = thin_svd(m);
  const int r = numerical_rank(svd.sigma, 1e-12);
  if (rank_deficient) *rank_deficient = r < count;
  if (r >= count) return svd.u.leftCols(count);
  if (r == 0) return orthonormal_completion(Matrix::Zero(m.rows(), 0), count);
  return orthonormal_completion(svd.u.leftCols(r), count);
}

bool is_orthonormal(const Matrix& basis, double tol) {
  const Matrix g = basis.transpose() * basis;
  return (g - Matrix::Identity(basis.cols(), basis.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace glds
