#pragma once

#include "sdspde/convex/metric.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace sdspde {

/// Smooth strictly convex scalar potential psi with psi' strictly increasing.
struct ScalarPotential {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> second;
};

/// psi(y) = y^2/2 + y atan(y) - log(1+y^2)/2, so psi' = y + atan(y).
ScalarPotential arctan_flux_potential();
/// psi(y) = y^2/2.
ScalarPotential quadratic_potential();

namespace detail {
class ConvexImpl;
}

/// Inner Newton solve tolerances shared by numeric conjugates and proxes.
struct NewtonOptions {
  int max_iters = 200;
  double tol = 1e-12;
};

/// Proper closed convex function on R^n in Euclidean coordinates.
/// Cheap to copy; the representation is shared and immutable.
class ConvexFunction {
 public:
  enum class Kind {
    zero,
    quadratic_form,
    power_norm,
    shifted_quadratic,
    l1_norm,
    tabulated_1d,
    separable,
    sum,
    precomposed,
    moreau_envelope,
  };

  /// 0.5 x'Qx + c'x + k; Q symmetric positive semi-definite.
  static ConvexFunction quadratic_form(SpMat q, Vec linear = Vec(), double constant = 0.0);
  /// sum_i w_i |x_i|^alpha / alpha, alpha > 1.
  static ConvexFunction power_norm(double alpha, Vec weights);
  static ConvexFunction power_norm(double alpha, int dim, double weight = 1.0);
  /// 0.5 w |x - c|^2.
  static ConvexFunction shifted_quadratic(Vec center, double weight = 1.0);
  /// sum_i w_i |x_i|.
  static ConvexFunction l1_norm(Vec weights);
  static ConvexFunction zero(int dim);
  /// Piecewise-linear interpolant of convex samples; +inf off [grid.front(), grid.back()].
  static ConvexFunction tabulated_1d(std::vector<double> grid, std::vector<double> values);
  /// sum_i w_i psi(x_i).
  static ConvexFunction separable(ScalarPotential psi, Vec weights);
  static ConvexFunction sum(ConvexFunction a, ConvexFunction b);
  /// outer(A x).
  static ConvexFunction precomposed(ConvexFunction outer, SpMat a);
  /// inf_z f(z) + |x - z|_G^2 / (2 lambda).
  static ConvexFunction moreau_envelope(ConvexFunction inner, double lambda, MetricPtr metric);

  Kind kind() const;
  int dim() const;
  bool is_smooth() const;
  std::string describe() const;

  double value(const Vec& x) const;
  /// Minimal-norm element of the subdifferential.
  Vec subgradient(const Vec& x) const;
  SpMat hessian(const Vec& x) const;
  double conjugate(const Vec& p) const;
  /// Maximizer of <x,p> - f(x), i.e. an element of the subdifferential of f* at p.
  Vec conjugate_argmax(const Vec& p) const;
  /// argmin_z f(z) + |z - x|^2 / (2 step).
  Vec prox(double step, const Vec& x) const;

  /// Tabulated kind only: conjugate at sorted slopes in one linear sweep.
  std::vector<double> conjugate_sorted(const std::vector<double>& slopes) const;

  /// Moreau-envelope kind only.
  const ConvexFunction& envelope_inner() const;
  double envelope_lambda() const;
  const MetricPtr& envelope_metric() const;

  explicit ConvexFunction(std::shared_ptr<const detail::ConvexImpl> impl);
  const detail::ConvexImpl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const detail::ConvexImpl> impl_;
};

double fenchel_young_gap(const ConvexFunction& f, const Vec& u, const Vec& p);

/// argmin_z f(z) + |z - x|_G^2 / (2 step): the resolvent of the H-gradient of f.
Vec prox_in_metric(const ConvexFunction& f, double step, const Vec& x, const Metric& metric,
                   const NewtonOptions& opt = {});

/// H-gradient G^{-1} grad f.
Vec metric_gradient(const ConvexFunction& f, const Vec& x, const Metric& metric);

}  // namespace sdspde
