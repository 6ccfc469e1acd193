#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glds/lds.hpp"
#include "glds/tensor.hpp"

namespace glds {

/// Symmetric idempotent matrix of rank r (the embedded subspace).
struct ProjectionMatrix {
  Matrix p;
  int rank = 0;
};

/// Labeled atoms of equal ambient and subspace dimension plus the cached
/// Gram matrix of embedding inner products <D_i^, D_j^> = ||D_i^T D_j||_F^2.
class GrassmannDictionary {
 public:
  GrassmannDictionary(std::vector<GrassmannPoint> atoms, std::vector<int> labels);
  /// Construction from a precomputed Gram block (rows/cols in atom order),
  /// e.g. a submatrix of an all-pairs kernel.
  GrassmannDictionary(std::vector<GrassmannPoint> atoms, std::vector<int> labels, Matrix gram);

  std::int64_t size() const { return static_cast<std::int64_t>(atoms_.size()); }
  std::int64_t ambient_dim() const { return atoms_.front().ambient_dim(); }
  int subspace_dim() const { return static_cast<int>(atoms_.front().subspace_dim()); }
  const std::vector<GrassmannPoint>& atoms() const { return atoms_; }
  const std::vector<int>& labels() const { return labels_; }
  const Matrix& gram() const { return gram_; }
  /// Sorted distinct labels.
  const std::vector<int>& classes() const { return classes_; }

  void save_json(const std::string& path) const;
  static GrassmannDictionary load_json(const std::string& path);

 private:
  void validate() const;

  std::vector<GrassmannPoint> atoms_;
  std::vector<int> labels_;
  Matrix gram_;
  std::vector<int> classes_;
};

/// Pi(X) = X X^T.
ProjectionMatrix project(const GrassmannPoint& x);

/// ||Pi(x) - Pi(y)||_F computed as sqrt(2d - 2 ||x^T y||_F^2).
double chordal_distance(const GrassmannPoint& x, const GrassmannPoint& y);

/// All-pairs embedding inner products for `points` (symmetric, entry (i,j) =
/// ||B_i^T B_j||_F^2). Shared by dictionary construction and fold reuse.
Matrix embedding_gram(const std::vector<GrassmannPoint>& points);
namespace ref {
Matrix embedding_gram(const std::vector<GrassmannPoint>& points);
}

/// Kernel vector k_j = <X^, D_j^> of a query against every atom.
Vector query_kernel(const GrassmannPoint& query, const GrassmannDictionary& dict);

struct SparseCodeOptions {
  double lambda = -1.0;  // negative: use the scale-aware default 0.01 * subspace_dim
  double tol = 1e-8;
  int max_iter = 1000;
  bool sum_to_one = false;  // affine-constrained variant
};

struct SparseCode {
  Vector y;
  int sweeps = 0;
  std::vector<double> objective_history;  // objective after each sweep
};

/// Cyclic coordinate descent with soft-thresholding on the kernelized lasso
/// objective ||X^||^2 - 2 sum_j y_j k_j + y^T G y + lambda ||y||_1.
SparseCode sparse_code(const GrassmannPoint& query, const GrassmannDictionary& dict,
                       const SparseCodeOptions& options = {});
/// Same objective from a precomputed kernel vector (fold reuse path).
SparseCode sparse_code_kernel(const Vector& kernel, const GrassmannDictionary& dict,
                              const SparseCodeOptions& options = {});

/// Objective value of a coefficient vector (test and diagnostics hook).
double coding_objective(const Vector& y, const Vector& kernel, const Matrix& gram, double lambda,
                        int subspace_dim);

struct Classification {
  int label = 0;
  std::vector<int> classes;
  std::vector<double> residuals;  // per class, aligned with `classes`
};

/// Sparse-representation classification: code the query, then argmin of the
/// class-restricted reconstruction residual (ties: lowest class).
Classification classify_src(const GrassmannPoint& query, const GrassmannDictionary& dict,
                            const SparseCodeOptions& options = {});
Classification classify_src_kernel(const Vector& kernel, const GrassmannDictionary& dict,
                                   const SparseCodeOptions& options = {});

/// Chordal nearest neighbor (ties: lowest atom index).
int nearest_neighbor(const GrassmannPoint& query, const GrassmannDictionary& dict);
int nearest_neighbor_kernel(const Vector& kernel, const GrassmannDictionary& dict);

}  // namespace glds
