#include "sdspde/solver/problem.hpp"

#include "sdspde/error.hpp"

#include <cmath>

namespace sdspde {

bool AdditiveProblem::noise_free() const {
  for (const auto& b : noise) {
    if (b.size() > 0 && b.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

void AdditiveProblem::validate() const {
  if (!ensemble) throw Error(ErrorCode::invalid_argument, "problem '" + name + "' has no ensemble");
  const int d = dim();
  if (lagrangian.u_dim() != d || lagrangian.p_dim() != d) {
    throw Error(ErrorCode::dimension_mismatch, "Lagrangian dimension differs from u0 in '" + name + "'");
  }
  if (boundary.kind() != SelfDualLagrangian::Kind::boundary || boundary.u_dim() != d) {
    throw Error(ErrorCode::dimension_mismatch, "boundary Lagrangian of '" + name + "' is not l_{u0} on H");
  }
  if (grid && grid->size() != d) throw Error(ErrorCode::dimension_mismatch, "grid size differs from u0");
  if (noise.size() != 1 && noise.size() != static_cast<size_t>(paths())) {
    throw Error(ErrorCode::dimension_mismatch, "noise must be shared or given per path");
  }
  for (const auto& b : noise) {
    if (b.rows() != d || b.cols() != steps()) {
      throw Error(ErrorCode::dimension_mismatch, "noise field must be d x N in '" + name + "'");
    }
    if (!b.allFinite()) throw Error(ErrorCode::invalid_argument, "noise field is not finite");
  }
  if (!u0.allFinite()) throw Error(ErrorCode::invalid_argument, "u0 is not finite");
}

Eigen::MatrixXd constant_noise(const Vec& b, int steps) { return b.replicate(1, steps); }

AdditiveProblem make_additive_problem(std::string name, std::shared_ptr<const SpatialDiscretization> grid,
                                      SelfDualLagrangian lagrangian, Vec u0, std::vector<Eigen::MatrixXd> noise,
                                      EnsemblePtr ensemble) {
  AdditiveProblem p{std::move(name),
                    std::move(grid),
                    lagrangian,
                    SelfDualLagrangian::boundary(u0, lagrangian.metric()),
                    std::move(u0),
                    std::move(noise),
                    std::move(ensemble)};
  p.validate();
  return p;
}

AdditiveProblem with_lagrangian(const AdditiveProblem& p, SelfDualLagrangian l) {
  AdditiveProblem q = p;
  q.lagrangian = std::move(l);
  q.validate();
  return q;
}

AdditiveProblem with_noise(const AdditiveProblem& p, std::vector<Eigen::MatrixXd> noise) {
  AdditiveProblem q = p;
  q.noise = std::move(noise);
  q.validate();
  return q;
}

AdditiveProblem with_ensemble(const AdditiveProblem& p, EnsemblePtr ens) {
  AdditiveProblem q = p;
  q.ensemble = std::move(ens);
  if (q.steps() != p.steps() || (q.noise.size() != 1 && q.paths() != p.paths())) {
    if (q.noise.size() != 1) throw Error(ErrorCode::ensemble_mismatch, "per-path noise cannot be resampled");
    const Eigen::MatrixXd& b = p.noise[0];
    bool constant = true;
    for (Eigen::Index n = 1; n < b.cols(); ++n) constant = constant && (b.col(n) - b.col(0)).cwiseAbs().maxCoeff() == 0.0;
    if (!constant) throw Error(ErrorCode::ensemble_mismatch, "time-dependent noise cannot be resampled");
    q.noise = {constant_noise(b.col(0), q.steps())};
  }
  q.validate();
  return q;
}

void SolverConfig::validate() const {
  if (!(gap_tol > 0.0)) throw Error(ErrorCode::invalid_argument, "gap_tol must be positive");
  if (max_iters < 0) throw Error(ErrorCode::invalid_argument, "max_iters must be non-negative");
  if (adapted_probes < 1) throw Error(ErrorCode::invalid_argument, "adapted_probes must be at least 1");
  for (size_t i = 0; i < lambda_schedule.size(); ++i) {
    if (!(lambda_schedule[i] > 0.0)) throw Error(ErrorCode::invalid_argument, "lambda_schedule entries must be positive");
    if (i > 0 && !(lambda_schedule[i] < lambda_schedule[i - 1])) {
      throw Error(ErrorCode::invalid_argument, "lambda_schedule must be strictly decreasing");
    }
  }
  if (!(step_rule.initial_lipschitz > 0.0) || !(step_rule.grow > 1.0) || !(step_rule.relax > 0.0) ||
      step_rule.relax > 1.0 || step_rule.max_backtracks < 1) {
    throw Error(ErrorCode::invalid_argument, "step_rule needs L0 > 0, grow > 1, relax in (0,1], backtracks >= 1");
  }
}

const char* to_string(SolverConfig::Optimizer o) {
  switch (o) {
    case SolverConfig::Optimizer::proximal_gradient: return "proximal_gradient";
    case SolverConfig::Optimizer::accelerated_proximal: return "accelerated_proximal";
    case SolverConfig::Optimizer::per_step_prox_recursion: return "per_step_prox_recursion";
  }
  return "?";
}

}  // namespace sdspde
