#pragma once

#include "sdspde/convex/convex_function.hpp"

#include <memory>
#include <optional>
#include <string>

namespace sdspde {

namespace detail {
class LagrangianImpl;
}

/// Convex L(u,p) on H x H paired through the metric G: <u,p>_G = u . G p.
/// Self-dual kinds satisfy L*(p,u) = L(u,p) for that pairing; the boundary
/// kind instead satisfies l*(-a,b) = l(a,b).
class SelfDualLagrangian {
 public:
  enum class Kind { basic, skew_shifted, noise, boundary, moreau, divergence_lifted, fitzpatrick };

  /// phi(u) + phi*(p).
  static SelfDualLagrangian basic(ConvexFunction phi, MetricPtr metric = nullptr);
  /// phi(u) + phi*(Gamma u + p), Gamma skew for <.,.>_G. The associated field is grad phi - Gamma.
  static SelfDualLagrangian skew_shifted(ConvexFunction phi, SpMat gamma, MetricPtr metric = nullptr);
  /// M_B(a,b) = |a - 2B|^2/2 + |b|^2/2 + 2<b,B>.
  static SelfDualLagrangian noise(Vec b, MetricPtr metric = nullptr);
  /// l(a,b) = |a|^2/2 + |b|^2/2 - 2<u0,a> + |u0|^2.
  static SelfDualLagrangian boundary(Vec u0, MetricPtr metric = nullptr);

  Kind kind() const;
  int u_dim() const;
  int p_dim() const;
  const MetricPtr& metric() const;
  std::string describe() const;

  double value(const Vec& u, const Vec& p) const;
  double pairing(const Vec& u, const Vec& p) const;
  /// L(u,p) - <u,p>_G.
  double gap(const Vec& u, const Vec& p) const;

  /// Euclidean partial gradients.
  Vec grad_u(const Vec& u, const Vec& p) const;
  Vec grad_p(const Vec& u, const Vec& p) const;

  /// The single-valued selection p of the self-dual vector field at u, i.e. L(u,p) = <u,p>_G.
  Vec vector_field(const Vec& u) const;
  /// y with y + step * vector_field(y) = x.
  Vec resolvent(double step, const Vec& x) const;
  /// Splitting used by the semi-implicit stepper: vector_field = implicit + explicit.
  Vec implicit_resolvent(double step, const Vec& x) const;
  Vec explicit_field(const Vec& u) const;

  /// Convex part handled by proximal steps in the trajectory optimizer, if any.
  std::optional<ConvexFunction> prox_part() const;
  struct Remainder {
    double value = 0.0;
    Vec du, dp;
  };
  /// L minus prox_part(u), with its Euclidean partial gradients.
  Remainder remainder(const Vec& u, const Vec& p) const;

  /// Moreau kind: lambda and the inner minimizer J_lambda(u).
  double moreau_lambda() const;
  Vec moreau_point(const Vec& u) const;
  const SelfDualLagrangian& moreau_inner() const;

  /// Boundary kind: the pinned initial datum.
  const Vec& boundary_center() const;

  /// Basic kind: phi.
  const ConvexFunction& potential() const;

  explicit SelfDualLagrangian(std::shared_ptr<const detail::LagrangianImpl> impl);
  const detail::LagrangianImpl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const detail::LagrangianImpl> impl_;
};

/// inf_z L(z,p) + |u - z|_G^2/(2 lambda) + lambda |p|_G^2 / 2.
SelfDualLagrangian moreau_regularize(const SelfDualLagrangian& l, double lambda);

const char* to_string(SelfDualLagrangian::Kind kind);

}  // namespace sdspde
