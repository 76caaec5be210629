#pragma once

#include "sdspde/convex/lagrangian.hpp"
#include "sdspde/spatial/grid.hpp"
#include "sdspde/stochastic/brownian.hpp"

#include <memory>
#include <string>
#include <vector>

namespace sdspde {

/// du = -A(u) dt + B dW with A the self-dual field of `lagrangian`
/// (H = the Lagrangian's metric) and additive noise B.
struct AdditiveProblem {
  std::string name;
  std::shared_ptr<const SpatialDiscretization> grid;  // null for problems on R^d without a grid
  SelfDualLagrangian lagrangian;
  SelfDualLagrangian boundary;  // l_{u0}
  Vec u0;
  /// One d x N field shared by every path, or one per path (adapted).
  std::vector<Eigen::MatrixXd> noise;
  EnsemblePtr ensemble;

  int dim() const { return static_cast<int>(u0.size()); }
  int paths() const { return ensemble->paths(); }
  int steps() const { return ensemble->steps(); }
  double horizon() const { return ensemble->horizon(); }
  double dt() const { return ensemble->dt(); }
  const MetricPtr& metric() const { return lagrangian.metric(); }
  const Eigen::MatrixXd& noise_for(int m) const {
    return noise.size() == 1 ? noise[0] : noise[static_cast<size_t>(m)];
  }
  /// True when B vanishes identically, so solutions ignore the increments.
  bool noise_free() const;
  /// Throws dimension_mismatch on inconsistent shapes.
  void validate() const;
};

/// Replicates a time-constant B over the N steps.
Eigen::MatrixXd constant_noise(const Vec& b, int steps);

AdditiveProblem make_additive_problem(std::string name, std::shared_ptr<const SpatialDiscretization> grid,
                                      SelfDualLagrangian lagrangian, Vec u0, std::vector<Eigen::MatrixXd> noise,
                                      EnsemblePtr ensemble);

/// Same problem with another Lagrangian (e.g. its Moreau regularization).
AdditiveProblem with_lagrangian(const AdditiveProblem& p, SelfDualLagrangian l);
/// Same problem with another noise field.
AdditiveProblem with_noise(const AdditiveProblem& p, std::vector<Eigen::MatrixXd> noise);
/// Same problem on another ensemble; the noise is resampled by its time grid
/// when it is shared and time-constant.
AdditiveProblem with_ensemble(const AdditiveProblem& p, EnsemblePtr ens);

struct StepRule {
  double initial_lipschitz = 1.0;
  double grow = 2.0;    // Lipschitz estimate increase on a failed sufficient-decrease test
  double relax = 0.9;   // decrease after an accepted step
  int max_backtracks = 60;
};

struct SolverConfig {
  enum class Optimizer { proximal_gradient, accelerated_proximal, per_step_prox_recursion };
  enum class Init { march, zero };

  Optimizer optimizer = Optimizer::accelerated_proximal;
  Init init = Init::march;
  int max_iters = 500;
  /// Bound on each path's summed Fenchel gap sum_n gap_n dt.
  double gap_tol = 1e-9;
  std::vector<double> lambda_schedule;
  StepRule step_rule;
  int adapted_probes = 8;

  /// Throws invalid_argument.
  void validate() const;
};

const char* to_string(SolverConfig::Optimizer o);

}  // namespace sdspde
