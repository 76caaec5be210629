#pragma once

#include "sdspde/convex/lagrangian.hpp"
#include "sdspde/spatial/grid.hpp"

namespace sdspde {

/// L(u,p) = inf { sum_e h L_pt((grad u)_e, f_e) : -div f = p } on a 1-D grid.
/// The constraint leaves one free scalar: f_e = c - h sum_{i<e} p_i.
/// Self-dual in the L^2 geometry when L_pt is self-dual on the real line.
struct LiftedEvaluation {
  double value = 0.0;
  double c = 0.0;
  Vec flux;  // minimizing f on the K+1 edges
  int evaluations = 0;
};

/// Pointwise L_pt(y,f) = psi(y) + psi*(f), so the drift is div(psi'(grad u)).
SelfDualLagrangian lifted_divergence(const SpatialDiscretization& grid, ScalarPotential psi);
/// Any self-dual pointwise Lagrangian on R (u_dim 1, Euclidean pairing).
SelfDualLagrangian lifted_divergence(const SpatialDiscretization& grid, SelfDualLagrangian pointwise);

/// Evaluates the infimum and returns the minimizing flux. Throws
/// invalid_argument off 1-D and no_convergence if the scalar search fails.
LiftedEvaluation lifted_divergence_lagrangian(const SpatialDiscretization& grid,
                                              const SelfDualLagrangian& pointwise, const Vec& u,
                                              const Vec& p);

/// Divergence-lifted kind only.
LiftedEvaluation lifted_evaluate(const SelfDualLagrangian& lifted, const Vec& u, const Vec& p);
/// Pointwise gaps L_pt(grad u, f) - (grad u) f at the minimizing flux.
Vec lifted_pointwise_gaps(const SelfDualLagrangian& lifted, const Vec& u, const Vec& p);

}  // namespace sdspde
