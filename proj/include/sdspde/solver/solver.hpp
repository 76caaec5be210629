#pragma once

#include "sdspde/ito/process.hpp"
#include "sdspde/solver/problem.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sdspde {

/// Discrete functional on the left-point grid. With y_n = u_n + drift_n dt,
///   I = E{ sum L(y_n, -drift_n) dt + l(u(0), u_N) + 1/2 sum M_{B_n}(F_n, -F_n) dt } - E C,
/// where C = sum <y_n,F_n> dW_n + 1/2 sum |F_n|^2 (dW_n^2 - dt) is the
/// zero-mean part of the discrete Ito formula (reported as `martingale`).
/// The gap form is evaluated from the same quantities and must agree to
/// 1e-10. Processes marked unverified are audited with check_adapted;
/// throws non_adapted_input when that fails or the process is marked failed.
GapReport assemble_I(const AdditiveProblem& prob, const ItoProcessEnsemble& proc, int probes = 8);

/// Per-node Fenchel gaps L(y_n, -drift_n) + <y_n, drift_n>, M x N. No adaptedness requirement.
RowMatrix fenchel_gap_density(const AdditiveProblem& prob, const ItoProcessEnsemble& proc);

/// Fraction of nodes whose value is below tol.
double fraction_below(const RowMatrix& values, double tol);

struct PathLog {
  int iterations = 0;
  int backtracks = 0;
  int restarts = 0;
  double initial_gap = 0.0;  // sum_n gap_n dt at the starting point
  double final_gap = 0.0;
  bool converged = false;
};

struct IterationLog {
  std::string optimizer;
  std::vector<PathLog> paths;  // path order
  int total_iterations() const;
  double max_final_gap() const;
};

struct SolveResult {
  ItoProcessEnsemble process;
  GapReport report;
  IterationLog log;
  /// y[m] is d x N: the post-drift states, used as warm starts.
  std::vector<Eigen::MatrixXd> y;
  AdaptednessReport adapted;
};

/// F = B and u(0) = u0 are fixed analytically; the per-path drift problem
/// min_y sum gap_n dt is solved by the configured optimizer. Its minimum 0 is
/// the implicit march y_n = (I + dt A)^{-1} u_n. Throws no_convergence
/// (message carries the gap breakdown) and non_coercive.
SolveResult minimize(const AdditiveProblem& prob, const SolverConfig& cfg);
/// Same, starting the iterative optimizers from the given y (per path, d x N).
SolveResult minimize_from(const AdditiveProblem& prob, const SolverConfig& cfg,
                          const std::vector<Eigen::MatrixXd>& y_start);

/// Semi-implicit oracle u_{n+1} = J(u_n - dt E(u_n) + B_n dW_n), with J the
/// implicit resolvent and E the explicit (skew) field. The drift is backed
/// out as (u_{n+1} - u_n - B_n dW_n) / dt; it depends on dW_n through J, so
/// the result is left unverified. Basic and skew_shifted kinds only.
ItoProcessEnsemble reference_step(const AdditiveProblem& prob);

struct ResidualReport {
  /// max_n E|u(t_n) - u0 + sum_{k<n} A(u_k) dt - sum_{k<n} B_k dW_k|
  double defect = 0.0;
  /// Same with A evaluated as implicit(u_{k+1}) + explicit(u_k), which the
  /// reference stepper satisfies exactly.
  double right_defect = 0.0;
  int worst_step = 0;
  double std_error = 0.0;  // of the per-path defect norms at worst_step
  std::string norm;        // "H" or "V*"
};

/// Integral-equation defect. For divergence_lifted kinds A(u) = -div f with
/// f the minimizing flux and the defect is measured in V* = H^-1. Throws
/// non_recoverable_field for kinds carrying no drift.
ResidualReport residual_check(const AdditiveProblem& prob, const ItoProcessEnsemble& proc);
/// Uses the given B_k (shared or per path) instead of the problem's noise.
ResidualReport residual_check(const AdditiveProblem& prob, const ItoProcessEnsemble& proc,
                              const std::vector<Eigen::MatrixXd>& noise);

struct ContinuationStage {
  double lambda = 0.0;
  int iterations = 0;
  double fenchel_gap = 0.0;  // of the regularized problem
  /// E sum |u_n - J_lambda u_n|_H^2 dt / lambda
  double proxy_ratio = 0.0;
  /// (E sum |J_lambda u_n|_V^2 dt)^{1/2}
  double proxy_v_norm = 0.0;
};

struct ContinuationResult {
  SolveResult final;  // unregularized polish warm-started from the last stage
  std::vector<ContinuationStage> stages;
  int total_iterations = 0;
  double proxy_ratio_spread() const;  // max / min of proxy_ratio
};

/// Requires a non-empty lambda_schedule.
ContinuationResult lambda_continuation(const AdditiveProblem& prob, const SolverConfig& cfg);

struct MultiplicativeProblem {
  AdditiveProblem base;  // base.noise is ignored
  std::function<Vec(const Vec&)> b_map;
  std::string b_name;
  double declared_growth = 1.0;  // delta in |B u| <= C |u|^delta
  double theta = 0.5;
  int max_outer = 30;
  double fp_tol = 1e-4;
  int burn_in = 2;
};

struct PicardResult {
  SolveResult solution;
  std::vector<Eigen::MatrixXd> frozen_noise;  // B_k used by the last solve, per path
  std::vector<double> residuals;             // E sum |F - B(u)|^2 dt per outer iteration
  bool converged = false;
  bool monotone_after_burn_in = false;
  double growth_exponent = 0.0;  // log-log slope of |B u| against |u| on the iterates
  int outer_iterations() const { return static_cast<int>(residuals.size()); }
};

/// B_0 = B(u0); each outer step solves the additive problem with F = B_k and
/// sets B_{k+1} = (1 - theta) B_k + theta B(u_k) on the left-point states.
/// Throws diverged after three consecutive residual increases and
/// no_convergence when max_outer is exhausted.
PicardResult picard_multiplicative(const MultiplicativeProblem& prob, const SolverConfig& cfg);

/// Least-squares slope of log|B u|_H against log|u|_H over sampled states.
double growth_exponent(const std::function<Vec(const Vec&)>& b_map, const Metric& metric,
                       const std::vector<Vec>& states);

}  // namespace sdspde
