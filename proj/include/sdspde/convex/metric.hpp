#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <optional>
#include <string>

namespace sdspde {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// SPD Riesz map G of a finite-dimensional Hilbert space: <u,v>_G = u . G v.
/// Convex functions are stored in Euclidean coordinates; a metric turns
/// Euclidean gradients into H-gradients (G^{-1} grad) and pairs states with
/// co-states.
class Metric {
 public:
  virtual ~Metric() = default;

  virtual int dim() const = 0;
  virtual Vec apply(const Vec& v) const = 0;  // G v
  virtual Vec solve(const Vec& v) const = 0;  // G^{-1} v
  /// Sparse G^{-1} when available (used to build Newton systems).
  virtual std::optional<SpMat> inverse_sparse() const { return std::nullopt; }
  /// Scale w when G = w I.
  virtual std::optional<double> scalar_weight() const { return std::nullopt; }
  virtual std::string name() const = 0;

  double inner(const Vec& u, const Vec& v) const { return u.dot(apply(v)); }
  double norm_sq(const Vec& u) const { return inner(u, u); }
};

using MetricPtr = std::shared_ptr<const Metric>;

MetricPtr identity_metric(int dim);
MetricPtr scaled_identity_metric(int dim, double weight);
/// G given through its sparse inverse (e.g. G = w (-Laplacian)^{-1}).
MetricPtr inverse_sparse_metric(SpMat g_inverse, std::string name);

}  // namespace sdspde
