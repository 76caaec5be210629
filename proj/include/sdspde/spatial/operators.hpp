#pragma once

#include "sdspde/spatial/grid.hpp"

#include <functional>
#include <memory>
#include <string>

namespace sdspde {

/// Velocity field sampled at the interior nodes; ay is unused in 1-D.
struct AField {
  Vec ax, ay;
};

AField constant_field(const SpatialDiscretization& grid, double cx, double cy = 0.0);
AField field_from_function(const SpatialDiscretization& grid,
                           const std::function<double(double, double)>& fx,
                           const std::function<double(double, double)>& fy);
/// a = (d psi/dy, -d psi/dx) by central differences of psi sampled on the
/// closed grid; divergence-free in the discrete sense. 2-D only.
AField stream_field(const SpatialDiscretization& grid, const std::function<double(double, double)>& psi);

/// Central-difference divergence; a is taken as zero at the boundary nodes.
Vec discrete_divergence(const SpatialDiscretization& grid, const AField& a);
/// Largest |a| over nodes adjacent to the boundary.
double boundary_speed(const SpatialDiscretization& grid, const AField& a);

/// u -> a . grad u by central differences.
SpMat transport_matrix(const SpatialDiscretization& grid, const AField& a);
/// (T - T')/2 for the transport matrix T: a . grad u + (div a) u / 2 up to O(h),
/// skew for the L^2 product.
SpMat skew_transport_matrix(const SpatialDiscretization& grid, const AField& a);

class SpatialOperator {
 public:
  enum class Kind { laplacian, p_laplacian, transport, skew_transport, inverse_laplacian, custom_linear };
  enum class Symmetry { self_adjoint, skew_adjoint, none };

  static SpatialOperator laplacian(const SpatialDiscretization& grid);
  /// div(|grad u|^{p-2} grad u) on staggered gradients; p >= 2, 1-D only.
  static SpatialOperator p_laplacian(const SpatialDiscretization& grid, double p);
  static SpatialOperator transport(const SpatialDiscretization& grid, AField a);
  static SpatialOperator skew_transport(const SpatialDiscretization& grid, AField a);
  /// (-Laplacian)^{-1}.
  static SpatialOperator inverse_laplacian(const SpatialDiscretization& grid);
  /// Declared symmetry is audited on random fields (1e-10).
  static SpatialOperator custom_linear(const SpatialDiscretization& grid, SpMat matrix, Symmetry symmetry);

  Kind kind() const { return kind_; }
  Symmetry symmetry() const { return symmetry_; }
  double exponent() const { return p_; }
  int size() const { return grid_->size(); }
  const SpatialDiscretization& grid() const { return *grid_; }
  /// Linear kinds other than inverse_laplacian.
  const SpMat& matrix() const;

  Vec apply(const Vec& u) const;

 private:
  SpatialOperator(const SpatialDiscretization& grid, Kind kind, Symmetry symmetry);

  std::shared_ptr<const SpatialDiscretization> grid_;
  Kind kind_;
  Symmetry symmetry_;
  double p_ = 2.0;
  SpMat matrix_;
};

const char* to_string(SpatialOperator::Kind kind);

/// max |<A u, u>| / |u|^2 over random fields, in the L^2 product.
double skew_defect(const SpatialDiscretization& grid, const SpMat& a, int samples, unsigned long long seed);

}  // namespace sdspde
