#pragma once

#include "sdspde/ito/process.hpp"
#include "sdspde/stochastic/brownian.hpp"

#include <cmath>
#include <vector>

namespace sdspde {

/// Left-point sums sum_n Z[m][n] dW[m][n], one per path. Z is M x N.
Eigen::VectorXd ito_integral(const BrownianEnsemble& ens, const RowMatrix& z);
/// Field-valued integrands: z[m] is d x N; returns d x M.
Eigen::MatrixXd ito_integral(const BrownianEnsemble& ens, const std::vector<Eigen::MatrixXd>& z);

/// Mean with its standard error over paths.
struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double z() const { return std_error > 0.0 ? mean / std_error : (mean == 0.0 ? 0.0 : HUGE_VAL); }
};
MeanEstimate estimate_mean(const Eigen::VectorXd& samples);

struct IsometryReport {
  double lhs = 0.0;  // E (int Z dW)^2
  double rhs = 0.0;  // E int Z^2 dt
  double relative_gap = 0.0;
  double std_error = 0.0;  // of the per-path difference
};
IsometryReport ito_isometry(const BrownianEnsemble& ens, const RowMatrix& z);

/// Per-path |u_N|^2 - |u_0|^2 - sum (2 <drift,u_n> + |F|^2) dt in the H metric.
Eigen::VectorXd ito_formula_defects(const ItoProcessEnsemble& u);

struct ItoFormulaReport {
  double residual = 0.0;      // mean defect on the fine level
  double coarse_residual = 0.0;
  double extrapolated = 0.0;  // 2 r(N) - r(N/2)
  double std_error = 0.0;       // of the per-path extrapolated defect
  double z = 0.0;
  /// The defect is consistent with zero after removing its first-order part.
  bool consistent(double threshold = 4.0) const { return std::abs(z) <= threshold; }
};
ItoFormulaReport ito_formula_check(const ItoProcessEnsemble& u);
/// Richardson check from the same process family on N and N/2 steps of one
/// Brownian path set. Throws ensemble_mismatch unless the paths line up.
ItoFormulaReport ito_formula_richardson(const ItoProcessEnsemble& fine, const ItoProcessEnsemble& coarse);

struct IntegrationByPartsReport {
  double lhs = 0.0;  // E sum <u_n, v~_n> dt
  double rhs = 0.0;  // -E sum <v_n,u~_n> dt - E sum <F,G> dt + E<u_N,v_N> - E<u_0,v_0>
  double residual = 0.0;
  double std_error = 0.0;
  double dt_term = 0.0;  // E sum <u~,v~> dt^2, the exact first-order defect
  double budget = 0.0;   // 4 stderr + |dt_term|
  bool within_budget() const { return std::abs(residual) <= budget; }
};
/// Throws ensemble_mismatch unless u and v live on the same ensemble and space.
IntegrationByPartsReport check_integration_by_parts(const ItoProcessEnsemble& u, const ItoProcessEnsemble& v);

}  // namespace sdspde
