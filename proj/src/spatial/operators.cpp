#include "sdspde/spatial/operators.hpp"

#include "sdspde/error.hpp"
#include "sdspde/util/splitmix.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace sdspde {

namespace {

void check_field(const SpatialDiscretization& g, const AField& a) {
  const bool ok = a.ax.size() == g.size() && (g.dimension() == 1 || a.ay.size() == g.size());
  if (!ok) throw Error(ErrorCode::dimension_mismatch, "a-field does not match the grid");
}

// Value of the component at node (i, j), zero off the interior.
double at(const SpatialDiscretization& g, const Vec& c, int i, int j) {
  const int k = g.points_per_axis();
  const int jmax = g.dimension() == 1 ? 1 : k;
  if (i < 0 || i >= k || j < 0 || j >= jmax) return 0.0;
  return c[g.node_index(i, j)];
}

}  // namespace

AField constant_field(const SpatialDiscretization& grid, double cx, double cy) {
  AField a;
  a.ax = Vec::Constant(grid.size(), cx);
  if (grid.dimension() == 2) a.ay = Vec::Constant(grid.size(), cy);
  return a;
}

AField field_from_function(const SpatialDiscretization& grid,
                           const std::function<double(double, double)>& fx,
                           const std::function<double(double, double)>& fy) {
  AField a;
  a.ax = grid.sample(fx);
  if (grid.dimension() == 2) a.ay = grid.sample(fy);
  return a;
}

AField stream_field(const SpatialDiscretization& grid, const std::function<double(double, double)>& psi) {
  if (grid.dimension() != 2) throw Error(ErrorCode::not_supported, "stream_field needs a 2-D grid");
  const int k = grid.points_per_axis();
  const double h = grid.h();
  AField a{Vec(grid.size()), Vec(grid.size())};
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < k; ++i) {
      const double x = (i + 1) * h, y = (j + 1) * h;
      const int n = grid.node_index(i, j);
      a.ax[n] = (psi(x, y + h) - psi(x, y - h)) / (2 * h);
      a.ay[n] = -(psi(x + h, y) - psi(x - h, y)) / (2 * h);
    }
  }
  return a;
}

Vec discrete_divergence(const SpatialDiscretization& grid, const AField& a) {
  check_field(grid, a);
  const int k = grid.points_per_axis();
  const int rows = grid.dimension() == 1 ? 1 : k;
  const double h = grid.h();
  Vec d(grid.size());
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < k; ++i) {
      double v = at(grid, a.ax, i + 1, j) - at(grid, a.ax, i - 1, j);
      if (grid.dimension() == 2) v += at(grid, a.ay, i, j + 1) - at(grid, a.ay, i, j - 1);
      d[grid.node_index(i, j)] = v / (2 * h);
    }
  }
  return d;
}

double boundary_speed(const SpatialDiscretization& grid, const AField& a) {
  check_field(grid, a);
  const int k = grid.points_per_axis();
  double m = 0.0;
  for (int n = 0; n < grid.size(); ++n) {
    const int i = n % k, j = n / k;
    const bool edge = i == 0 || i == k - 1 || (grid.dimension() == 2 && (j == 0 || j == k - 1));
    if (!edge) continue;
    m = std::max(m, std::abs(a.ax[n]));
    if (grid.dimension() == 2) m = std::max(m, std::abs(a.ay[n]));
  }
  return m;
}

SpMat transport_matrix(const SpatialDiscretization& grid, const AField& a) {
  check_field(grid, a);
  const int k = grid.points_per_axis();
  const int rows = grid.dimension() == 1 ? 1 : k;
  const double s = 1.0 / (2 * grid.h());
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < k; ++i) {
      const int n = grid.node_index(i, j);
      if (i + 1 < k) t.emplace_back(n, grid.node_index(i + 1, j), s * a.ax[n]);
      if (i > 0) t.emplace_back(n, grid.node_index(i - 1, j), -s * a.ax[n]);
      if (grid.dimension() == 2) {
        if (j + 1 < k) t.emplace_back(n, grid.node_index(i, j + 1), s * a.ay[n]);
        if (j > 0) t.emplace_back(n, grid.node_index(i, j - 1), -s * a.ay[n]);
      }
    }
  }
  SpMat m(grid.size(), grid.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMat skew_transport_matrix(const SpatialDiscretization& grid, const AField& a) {
  const SpMat t = transport_matrix(grid, a);
  SpMat g = 0.5 * (t - SpMat(t.transpose()));
  g.prune(0.0);
  return g;
}

SpatialOperator::SpatialOperator(const SpatialDiscretization& grid, Kind kind, Symmetry symmetry)
    : grid_(std::make_shared<const SpatialDiscretization>(grid)), kind_(kind), symmetry_(symmetry) {}

SpatialOperator SpatialOperator::laplacian(const SpatialDiscretization& grid) {
  SpatialOperator op(grid, Kind::laplacian, Symmetry::self_adjoint);
  op.matrix_ = grid.laplacian();
  return op;
}

SpatialOperator SpatialOperator::p_laplacian(const SpatialDiscretization& grid, double p) {
  if (!(p >= 2.0)) throw Error(ErrorCode::invalid_argument, "p-Laplacian needs p >= 2");
  if (grid.dimension() != 1) throw Error(ErrorCode::not_supported, "p-Laplacian is 1-D only");
  SpatialOperator op(grid, Kind::p_laplacian, p == 2.0 ? Symmetry::self_adjoint : Symmetry::none);
  op.p_ = p;
  return op;
}

SpatialOperator SpatialOperator::transport(const SpatialDiscretization& grid, AField a) {
  SpatialOperator op(grid, Kind::transport, Symmetry::none);
  op.matrix_ = transport_matrix(grid, a);
  return op;
}

SpatialOperator SpatialOperator::skew_transport(const SpatialDiscretization& grid, AField a) {
  SpatialOperator op(grid, Kind::skew_transport, Symmetry::skew_adjoint);
  op.matrix_ = skew_transport_matrix(grid, a);
  return op;
}

SpatialOperator SpatialOperator::inverse_laplacian(const SpatialDiscretization& grid) {
  return SpatialOperator(grid, Kind::inverse_laplacian, Symmetry::self_adjoint);
}

SpatialOperator SpatialOperator::custom_linear(const SpatialDiscretization& grid, SpMat matrix,
                                               Symmetry symmetry) {
  if (matrix.rows() != grid.size() || matrix.cols() != grid.size()) {
    throw Error(ErrorCode::dimension_mismatch, "custom_linear: matrix does not match the grid");
  }
  const double scale = std::max(1.0, matrix.norm());
  if (symmetry == Symmetry::skew_adjoint) {
    if (SpMat(matrix + SpMat(matrix.transpose())).norm() > 1e-10 * scale) {
      throw Error(ErrorCode::invalid_argument, "custom_linear: declared skew_adjoint but A + A' != 0");
    }
  } else if (symmetry == Symmetry::self_adjoint) {
    if (SpMat(matrix - SpMat(matrix.transpose())).norm() > 1e-10 * scale) {
      throw Error(ErrorCode::invalid_argument, "custom_linear: declared self_adjoint but A != A'");
    }
  }
  SpatialOperator op(grid, Kind::custom_linear, symmetry);
  op.matrix_ = std::move(matrix);
  return op;
}

const SpMat& SpatialOperator::matrix() const {
  if (kind_ == Kind::p_laplacian || kind_ == Kind::inverse_laplacian) {
    throw Error(ErrorCode::not_supported, std::string(to_string(kind_)) + " has no stored matrix");
  }
  return matrix_;
}

Vec SpatialOperator::apply(const Vec& u) const {
  if (u.size() != grid_->size()) {
    throw Error(ErrorCode::dimension_mismatch, std::string(to_string(kind_)) + ": field has " +
                                                   std::to_string(u.size()) + " entries, grid has " +
                                                   std::to_string(grid_->size()));
  }
  switch (kind_) {
    case Kind::p_laplacian: {
      Vec g = grid_->gradient() * u;
      for (int e = 0; e < g.size(); ++e) g[e] *= std::pow(std::abs(g[e]), p_ - 2.0);
      return grid_->divergence() * g;
    }
    case Kind::inverse_laplacian:
      return grid_->solve_negative_laplacian(u);
    default:
      return matrix_ * u;
  }
}

const char* to_string(SpatialOperator::Kind kind) {
  switch (kind) {
    case SpatialOperator::Kind::laplacian: return "laplacian";
    case SpatialOperator::Kind::p_laplacian: return "p_laplacian";
    case SpatialOperator::Kind::transport: return "transport";
    case SpatialOperator::Kind::skew_transport: return "skew_transport";
    case SpatialOperator::Kind::inverse_laplacian: return "inverse_laplacian";
    case SpatialOperator::Kind::custom_linear: return "custom_linear";
  }
  return "?";
}

double skew_defect(const SpatialDiscretization& grid, const SpMat& a, int samples, unsigned long long seed) {
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec u(grid.size());
    for (int i = 0; i < u.size(); ++i) u[i] = rng.normal();
    worst = std::max(worst, std::abs(grid.l2_inner(a * u, u)) / grid.l2_inner(u, u));
  }
  return worst;
}

}  // namespace sdspde
