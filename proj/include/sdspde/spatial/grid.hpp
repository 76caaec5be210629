#pragma once

#include "sdspde/convex/metric.hpp"

#include <array>
#include <functional>
#include <memory>

namespace sdspde {

/// Uniform grid on the unit box (0,1)^d with homogeneous Dirichlet data.
/// Nodes are the K^d interior points, x index fastest. Gradients live on the
/// staggered edges between neighbouring nodes (boundary nodes included), so
/// that the Laplacian is exactly -G'G and div = -G'.
class SpatialDiscretization {
 public:
  SpatialDiscretization(int dimension, int k);

  int dimension() const { return dim_; }
  int points_per_axis() const { return k_; }
  double h() const { return h_; }
  /// h^d, the quadrature weight of a node or an edge.
  double cell_volume() const { return vol_; }
  int size() const { return n_; }
  int edge_count() const { return static_cast<int>(grad_.rows()); }

  std::array<double, 2> coordinate(int node) const;
  int node_index(int i, int j = 0) const { return i + k_ * j; }
  /// Samples f at the interior nodes (y ignored in 1-D).
  Vec sample(const std::function<double(double, double)>& f) const;

  const SpMat& laplacian() const { return lap_; }
  const SpMat& gradient() const { return grad_; }
  const SpMat& divergence() const { return div_; }

  /// (-Laplacian)^{-1} v.
  Vec solve_negative_laplacian(const Vec& v) const;

  double l2_inner(const Vec& u, const Vec& v) const;
  double edge_inner(const Vec& f, const Vec& g) const;
  /// |grad u|^2 in L^2: the V = H^1_0 norm.
  double v_norm_sq(const Vec& u) const;
  /// <u, (-Laplacian)^{-1} u>: the V* = H^{-1} norm.
  double v_star_norm_sq(const Vec& u) const;

  /// G = h^d I.
  MetricPtr l2_metric() const;
  /// G = h^d (-Laplacian)^{-1}.
  MetricPtr h_minus_one_metric() const;

 private:
  int dim_, k_, n_;
  double h_, vol_;
  SpMat lap_, grad_, div_;
  std::shared_ptr<const Metric> l2_, hm1_;
};

/// Throws invalid_argument unless dimension is 1 or 2 and K >= 2.
SpatialDiscretization build_grid(int dimension, int k);

/// <u, w>_{L^2} with -Laplacian w = v.
double h_minus_one_inner(const SpatialDiscretization& grid, const Vec& u, const Vec& v);

}  // namespace sdspde
