#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <string>

namespace sdspde::numeric {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

/// Solves A x = b. Small systems go through a dense factorization, larger ones
/// through a sparse one. Throws singular_solve.
Vec linear_solve(const SpMat& a, const Vec& b, bool symmetric_positive);

/// Smooth convex objective for Newton-type minimization.
struct Objective {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  std::function<SpMat(const Vec&)> hessian;
  bool hessian_spd = true;  // false when only a preconditioner-like Jacobian is available
};

struct NewtonResult {
  Vec x;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Levenberg-damped Newton with Armijo backtracking. Converges when the
/// max-norm of the gradient drops below tol * scale. Throws no_convergence.
NewtonResult minimize_newton(const Objective& obj, Vec x0, int max_iters, double tol, double scale,
                             const std::string& what);

/// Root of a continuous increasing function g on the real line.
double monotone_root(const std::function<double(double)>& g,
                     const std::function<double(double)>& dg, double guess, double tol,
                     const std::string& what);

/// Minimizes a convex scalar function: bracketing, golden-section, then
/// secant refinement on a derivative if provided.
struct ScalarMin {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
};
ScalarMin convex_scalar_min(const std::function<double(double)>& f, double guess, double scale,
                            double xtol, const std::string& what);

/// Golden-section search on [a, b] for a unimodal function.
ScalarMin golden_section(const std::function<double(double)>& f, double a, double b, double xtol);

}  // namespace sdspde::numeric
