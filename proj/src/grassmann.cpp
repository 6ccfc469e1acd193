#include "glds/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "glds/linalg.hpp"
#include "glds/parallel.hpp"

namespace glds {

namespace {

double pair_kernel(const GrassmannPoint& a, const GrassmannPoint& b) {
  return (a.basis.transpose() * b.basis).squaredNorm();
}

Matrix gram_impl(const std::vector<GrassmannPoint>& points, bool parallel) {
  const std::int64_t n = static_cast<std::int64_t>(points.size());
  Matrix g(n, n);
  for_each_index(n, parallel, [&](std::int64_t i) {
    for (std::int64_t j = i; j < n; ++j)
      g(i, j) = pair_kernel(points[static_cast<std::size_t>(i)],
                            points[static_cast<std::size_t>(j)]);
  });
  for (std::int64_t j = 0; j < n; ++j)
    for (std::int64_t i = 0; i < j; ++i) g(j, i) = g(i, j);
  return g;
}

}  // namespace

ProjectionMatrix project(const GrassmannPoint& x) {
  if (!is_orthonormal(x.basis, 1e-8))
    throw std::invalid_argument("project: basis columns are not orthonormal");
  return ProjectionMatrix{x.basis * x.basis.transpose(), static_cast<int>(x.subspace_dim())};
}

double chordal_distance(const GrassmannPoint& x, const GrassmannPoint& y) {
  if (x.ambient_dim() != y.ambient_dim() || x.subspace_dim() != y.subspace_dim())
    throw std::invalid_argument("chordal_distance: dimension mismatch");
  // sqrt(2d - 2 ||x^T y||_F^2), evaluated as sqrt(2) ||y - x (x^T y)||_F.
  // The residual form is algebraically equal but free of the cancellation
  // that otherwise floors near-zero distances at sqrt(machine eps); the
  // argument order is canonicalized so the metric is bitwise symmetric.
  const Matrix* a = &x.basis;
  const Matrix* b = &y.basis;
  if (std::lexicographical_compare(b->data(), b->data() + b->size(), a->data(),
                                   a->data() + a->size()))
    std::swap(a, b);
  const Matrix residual = *b - *a * (a->transpose() * *b);
  return std::sqrt(2.0) * residual.norm();
}

Matrix embedding_gram(const std::vector<GrassmannPoint>& points) { return gram_impl(points, true); }
namespace ref {
Matrix embedding_gram(const std::vector<GrassmannPoint>& points) {
  return gram_impl(points, false);
}
}  // namespace ref

GrassmannDictionary::GrassmannDictionary(std::vector<GrassmannPoint> atoms,
                                         std::vector<int> labels)
    : atoms_(std::move(atoms)), labels_(std::move(labels)) {
  validate();
  gram_ = embedding_gram(atoms_);
  std::set<int> cls(labels_.begin(), labels_.end());
  classes_.assign(cls.begin(), cls.end());
}

GrassmannDictionary::GrassmannDictionary(std::vector<GrassmannPoint> atoms,
                                         std::vector<int> labels, Matrix gram)
    : atoms_(std::move(atoms)), labels_(std::move(labels)), gram_(std::move(gram)) {
  validate();
  if (gram_.rows() != size() || gram_.cols() != size())
    throw std::invalid_argument("dictionary: gram dimensions must match the atom count");
  std::set<int> cls(labels_.begin(), labels_.end());
  classes_.assign(cls.begin(), cls.end());
}

void GrassmannDictionary::validate() const {
  if (atoms_.empty()) throw std::invalid_argument("dictionary must be non-empty");
  if (labels_.size() != atoms_.size())
    throw std::invalid_argument("dictionary: one label per atom required");
  const auto p = atoms_.front().ambient_dim();
  const auto d = atoms_.front().subspace_dim();
  for (const auto& a : atoms_)
    if (a.ambient_dim() != p || a.subspace_dim() != d)
      throw std::invalid_argument("dictionary atoms must share ambient and subspace dims");
}

void GrassmannDictionary::save_json(const std::string& path) const {
  nlohmann::ordered_json j;
  j["format"] = "glds-dictionary";
  j["version"] = 1;
  j["ambient_dim"] = ambient_dim();
  j["subspace_dim"] = subspace_dim();
  j["atom_count"] = size();
  j["labels"] = labels_;
  auto& payload = j["atoms"] = nlohmann::ordered_json::array();
  for (const auto& a : atoms_) {
    std::vector<double> rowmajor;
    rowmajor.reserve(static_cast<std::size_t>(a.basis.size()));
    for (std::int64_t r = 0; r < a.basis.rows(); ++r)
      for (std::int64_t c = 0; c < a.basis.cols(); ++c) rowmajor.push_back(a.basis(r, c));
    payload.push_back(rowmajor);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dictionary file: " + path);
  out << j.dump(1, '\t') << '\n';
}

GrassmannDictionary GrassmannDictionary::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read dictionary file: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "glds-dictionary")
    throw std::runtime_error("not a glds dictionary file: " + path);
  const std::int64_t p = j.at("ambient_dim");
  const std::int64_t d = j.at("subspace_dim");
  std::vector<int> labels = j.at("labels").get<std::vector<int>>();
  std::vector<GrassmannPoint> atoms;
  for (const auto& payload : j.at("atoms")) {
    const auto values = payload.get<std::vector<double>>();
    if (static_cast<std::int64_t>(values.size()) != p * d)
      throw std::runtime_error("dictionary atom payload size mismatch in " + path);
    Matrix basis(p, d);
    for (std::int64_t r = 0; r < p; ++r)
      for (std::int64_t c = 0; c < d; ++c)
        basis(r, c) = values[static_cast<std::size_t>(r * d + c)];
    atoms.push_back(GrassmannPoint{std::move(basis)});
  }
  return GrassmannDictionary(std::move(atoms), std::move(labels));
}

Vector query_kernel(const GrassmannPoint& query, const GrassmannDictionary& dict) {
  if (query.ambient_dim() != dict.ambient_dim() || query.subspace_dim() != dict.subspace_dim())
    throw std::invalid_argument("query_kernel: query/dictionary dimension mismatch");
  Vector k(dict.size());
  for (std::int64_t j = 0; j < dict.size(); ++j)
    k[j] = pair_kernel(query, dict.atoms()[static_cast<std::size_t>(j)]);
  return k;
}

double coding_objective(const Vector& y, const Vector& kernel, const Matrix& gram, double lambda,
                        int subspace_dim) {
  return static_cast<double>(subspace_dim) - 2.0 * kernel.dot(y) + y.dot(gram * y) +
         lambda * y.lpNorm<1>();
}

namespace {

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

SparseCode lasso_coordinate_descent(const Vector& kernel, const Matrix& gram, double lambda,
                                    double tol, int max_iter, int subspace_dim) {
  const std::int64_t n = kernel.size();
  SparseCode result;
  result.y = Vector::Zero(n);
  Vector gy = Vector::Zero(n);  // gram * y, kept incrementally
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    for (std::int64_t j = 0; j < n; ++j) {
      const double rho = kernel[j] - (gy[j] - gram(j, j) * result.y[j]);
      const double updated = soft_threshold(rho, lambda / 2.0) / gram(j, j);
      const double delta = updated - result.y[j];
      if (delta != 0.0) {
        gy += delta * gram.col(j);
        result.y[j] = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++result.sweeps;
    result.objective_history.push_back(
        coding_objective(result.y, kernel, gram, lambda, subspace_dim));
    if (max_change < tol) break;
  }
  return result;
}

// Pairwise moves y_i += delta, y_j -= delta keep the affine constraint
// sum y = 1 exact; each move minimizes a piecewise quadratic in delta.
SparseCode affine_coordinate_descent(const Vector& kernel, const Matrix& gram, double lambda,
                                     double tol, int max_iter, int subspace_dim) {
  const std::int64_t n = kernel.size();
  SparseCode result;
  result.y = Vector::Constant(n, 1.0 / static_cast<double>(n));
  if (n == 1) {
    result.objective_history.push_back(
        coding_objective(result.y, kernel, gram, lambda, subspace_dim));
    return result;
  }
  Vector gy = gram * result.y;

  auto minimize_pair = [&](std::int64_t i, std::int64_t j) {
    // Objective restricted to delta: a*delta^2 + b*delta + lambda(|y_i+delta| + |y_j-delta|).
    const double a = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
    const double b = 2.0 * (gy[i] - gy[j]) - 2.0 * (kernel[i] - kernel[j]);
    const double yi = result.y[i];
    const double yj = result.y[j];
    if (a <= 0.0) return 0.0;
    double best_delta = 0.0;
    double best_value = lambda * (std::abs(yi) + std::abs(yj));
    auto consider = [&](double delta) {
      const double value =
          a * delta * delta + b * delta + lambda * (std::abs(yi + delta) + std::abs(yj - delta));
      if (value < best_value - 1e-15) {
        best_value = value;
        best_delta = delta;
      }
    };
    // Candidate minimizers per sign region plus the breakpoints.
    for (double si : {-1.0, 1.0})
      for (double sj : {-1.0, 1.0}) consider((-b - lambda * (si - sj)) / (2.0 * a));
    consider(-yi);
    consider(yj);
    return best_delta;
  };

  for (int sweep = 0; sweep < max_iter; ++sweep) {
    double max_change = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t j = (i + 1) % n;
      const double delta = minimize_pair(i, j);
      if (delta != 0.0) {
        result.y[i] += delta;
        result.y[j] -= delta;
        gy += delta * (gram.col(i) - gram.col(j));
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    ++result.sweeps;
    result.objective_history.push_back(
        coding_objective(result.y, kernel, gram, lambda, subspace_dim));
    if (max_change < tol) break;
  }
  return result;
}

double resolve_lambda(const SparseCodeOptions& options, int subspace_dim) {
  return options.lambda >= 0.0 ? options.lambda : 0.01 * static_cast<double>(subspace_dim);
}

}  // namespace

SparseCode sparse_code_kernel(const Vector& kernel, const GrassmannDictionary& dict,
                              const SparseCodeOptions& options) {
  if (kernel.size() != dict.size())
    throw std::invalid_argument("sparse_code: kernel length must match the dictionary size");
  if (!kernel.allFinite() || !dict.gram().allFinite())
    throw std::invalid_argument("sparse_code: non-finite kernel values");
  const double lambda = resolve_lambda(options, dict.subspace_dim());
  if (options.sum_to_one)
    return affine_coordinate_descent(kernel, dict.gram(), lambda, options.tol, options.max_iter,
                                     dict.subspace_dim());
  return lasso_coordinate_descent(kernel, dict.gram(), lambda, options.tol, options.max_iter,
                                  dict.subspace_dim());
}

SparseCode sparse_code(const GrassmannPoint& query, const GrassmannDictionary& dict,
                       const SparseCodeOptions& options) {
  return sparse_code_kernel(query_kernel(query, dict), dict, options);
}

Classification classify_src_kernel(const Vector& kernel, const GrassmannDictionary& dict,
                                   const SparseCodeOptions& options) {
  const SparseCode code = sparse_code_kernel(kernel, dict, options);
  const double d = static_cast<double>(dict.subspace_dim());

  Classification out;
  out.classes = dict.classes();
  out.residuals.resize(out.classes.size());
  double best = 0.0;
  bool first = true;
  for (std::size_t ci = 0; ci < out.classes.size(); ++ci) {
    const int cls = out.classes[ci];
    // ||X^ - sum_{j in c} y_j D_j^||_F^2 through the kernel expansion.
    double linear = 0.0, quad = 0.0;
    for (std::int64_t i = 0; i < dict.size(); ++i) {
      if (dict.labels()[static_cast<std::size_t>(i)] != cls) continue;
      linear += code.y[i] * kernel[i];
      for (std::int64_t j = 0; j < dict.size(); ++j) {
        if (dict.labels()[static_cast<std::size_t>(j)] != cls) continue;
        quad += code.y[i] * dict.gram()(i, j) * code.y[j];
      }
    }
    const double residual = d - 2.0 * linear + quad;
    out.residuals[ci] = residual;
    if (first || residual < best) {
      best = residual;
      out.label = cls;
      first = false;
    }
  }
  return out;
}

Classification classify_src(const GrassmannPoint& query, const GrassmannDictionary& dict,
                            const SparseCodeOptions& options) {
  return classify_src_kernel(query_kernel(query, dict), dict, options);
}

int nearest_neighbor_kernel(const Vector& kernel, const GrassmannDictionary& dict) {
  // chordal^2 = 2d - 2k_j, so the largest kernel value is the nearest atom.
  std::int64_t best = 0;
  for (std::int64_t j = 1; j < dict.size(); ++j)
    if (kernel[j] > kernel[best]) best = j;
  return dict.labels()[static_cast<std::size_t>(best)];
}

int nearest_neighbor(const GrassmannPoint& query, const GrassmannDictionary& dict) {
  return nearest_neighbor_kernel(query_kernel(query, dict), dict);
}

}  // namespace glds
