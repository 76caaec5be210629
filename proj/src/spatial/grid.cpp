#include "sdspde/spatial/grid.hpp"

#include "sdspde/error.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sdspde {

namespace {

void check_size(const SpatialDiscretization& g, const Vec& v, const char* what) {
  if (v.size() != g.size()) {
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + ": field has " +
                                                   std::to_string(v.size()) + " entries, grid has " +
                                                   std::to_string(g.size()));
  }
}

}  // namespace

SpatialDiscretization::SpatialDiscretization(int dimension, int k) : dim_(dimension), k_(k) {
  if (dimension != 1 && dimension != 2) {
    throw Error(ErrorCode::invalid_argument, "grid dimension must be 1 or 2");
  }
  if (k < 2) throw Error(ErrorCode::invalid_argument, "grid needs K >= 2 points per axis");
  h_ = 1.0 / (k + 1);
  vol_ = dim_ == 1 ? h_ : h_ * h_;
  n_ = dim_ == 1 ? k_ : k_ * k_;

  // Edge e between nodes a (behind) and b (ahead): (G u)_e = (u_b - u_a) / h,
  // with boundary nodes contributing zero.
  std::vector<Eigen::Triplet<double>> t;
  int edges = 0;
  const int rows = dim_ == 1 ? 1 : k_;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i <= k_; ++i, ++edges) {
      if (i < k_) t.emplace_back(edges, node_index(i, j), 1.0 / h_);
      if (i > 0) t.emplace_back(edges, node_index(i - 1, j), -1.0 / h_);
    }
  }
  if (dim_ == 2) {
    for (int j = 0; j <= k_; ++j) {
      for (int i = 0; i < k_; ++i, ++edges) {
        if (j < k_) t.emplace_back(edges, node_index(i, j), 1.0 / h_);
        if (j > 0) t.emplace_back(edges, node_index(i, j - 1), -1.0 / h_);
      }
    }
  }
  grad_.resize(edges, n_);
  grad_.setFromTriplets(t.begin(), t.end());
  div_ = -SpMat(grad_.transpose());
  lap_ = div_ * grad_;
  lap_.prune(0.0);

  l2_ = scaled_identity_metric(n_, vol_);
  hm1_ = inverse_sparse_metric(SpMat(-lap_ / vol_), "H^-1");
}

std::array<double, 2> SpatialDiscretization::coordinate(int node) const {
  const int i = node % k_, j = node / k_;
  return {(i + 1) * h_, dim_ == 1 ? 0.0 : (j + 1) * h_};
}

Vec SpatialDiscretization::sample(const std::function<double(double, double)>& f) const {
  Vec v(n_);
  for (int n = 0; n < n_; ++n) {
    auto x = coordinate(n);
    v[n] = f(x[0], x[1]);
  }
  return v;
}

Vec SpatialDiscretization::solve_negative_laplacian(const Vec& v) const {
  check_size(*this, v, "solve_negative_laplacian");
  // G^{-1} = -Laplacian / h^d, so G v = h^d (-Laplacian)^{-1} v.
  return hm1_->apply(v) / vol_;
}

double SpatialDiscretization::l2_inner(const Vec& u, const Vec& v) const {
  check_size(*this, u, "l2_inner");
  check_size(*this, v, "l2_inner");
  return vol_ * u.dot(v);
}

double SpatialDiscretization::edge_inner(const Vec& f, const Vec& g) const {
  if (f.size() != edge_count() || g.size() != edge_count()) {
    throw Error(ErrorCode::dimension_mismatch, "edge_inner: edge field size");
  }
  return vol_ * f.dot(g);
}

double SpatialDiscretization::v_norm_sq(const Vec& u) const {
  check_size(*this, u, "v_norm_sq");
  return vol_ * (grad_ * u).squaredNorm();
}

double SpatialDiscretization::v_star_norm_sq(const Vec& u) const { return h_minus_one_inner(*this, u, u); }

MetricPtr SpatialDiscretization::l2_metric() const { return l2_; }
MetricPtr SpatialDiscretization::h_minus_one_metric() const { return hm1_; }

SpatialDiscretization build_grid(int dimension, int k) { return SpatialDiscretization(dimension, k); }

double h_minus_one_inner(const SpatialDiscretization& grid, const Vec& u, const Vec& v) {
  check_size(grid, u, "h_minus_one_inner");
  const Vec w = grid.solve_negative_laplacian(v);
  if (!w.allFinite()) throw Error(ErrorCode::singular_solve, "h_minus_one_inner: Laplacian solve");
  return grid.l2_inner(u, w);
}

}  // namespace sdspde
