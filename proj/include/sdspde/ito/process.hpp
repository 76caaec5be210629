#pragma once

#include "sdspde/convex/metric.hpp"
#include "sdspde/spatial/grid.hpp"
#include "sdspde/stochastic/brownian.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sdspde {

/// Per-path data (x0, drift, diffusion): x0 is d x M, drift[m] and
/// diffusion[m] are d x N with step n in column n.
struct ProcessTriple {
  Eigen::MatrixXd x0;
  std::vector<Eigen::MatrixXd> drift, diffusion;

  static ProcessTriple zeros(int dim, int paths, int steps);
  int dim() const { return static_cast<int>(x0.rows()); }
  int paths() const { return static_cast<int>(x0.cols()); }
  int steps() const { return drift.empty() ? 0 : static_cast<int>(drift[0].cols()); }
};

ProcessTriple operator+(const ProcessTriple& a, const ProcessTriple& b);
ProcessTriple operator*(double s, const ProcessTriple& a);

enum class Adaptedness { unverified, by_construction, passed, failed };
const char* to_string(Adaptedness a);

/// Discrete Ito process u(t_n) = u0 + sum_{k<n} drift_k dt + sum_{k<n} F_k dW_k
/// on a shared Brownian ensemble, with H given by a metric.
class ItoProcessEnsemble {
 public:
  ItoProcessEnsemble(EnsemblePtr ens, MetricPtr h_metric, ProcessTriple data,
                     Adaptedness adapted = Adaptedness::unverified,
                     std::shared_ptr<const SpatialDiscretization> grid = nullptr);

  const BrownianEnsemble& ensemble() const { return *ens_; }
  const EnsemblePtr& ensemble_ptr() const { return ens_; }
  const MetricPtr& metric() const { return metric_; }
  const std::shared_ptr<const SpatialDiscretization>& grid() const { return grid_; }
  const ProcessTriple& data() const { return data_; }
  int dim() const { return data_.dim(); }
  int paths() const { return data_.paths(); }
  int steps() const { return data_.steps(); }
  double dt() const { return ens_->dt(); }

  Adaptedness adaptedness() const { return adapted_; }
  void set_adaptedness(Adaptedness a) { adapted_ = a; }

  /// Cached trajectory of path m, d x (N+1).
  const Eigen::MatrixXd& trajectory(int m) const { return traj_[static_cast<size_t>(m)]; }
  Eigen::VectorXd state(int m, int n) const { return traj_[static_cast<size_t>(m)].col(n); }
  Eigen::VectorXd terminal(int m) const { return state(m, steps()); }

  /// E(|u0|^2 + sum |drift|^2 dt + sum |F|^2 dt) in the H metric.
  double a2_norm_sq() const;

  ItoProcessEnsemble scaled(double s) const;

 private:
  EnsemblePtr ens_;
  MetricPtr metric_;
  std::shared_ptr<const SpatialDiscretization> grid_;
  ProcessTriple data_;
  Adaptedness adapted_;
  std::vector<Eigen::MatrixXd> traj_;
};

/// Forward accumulation of the trajectories from the triple.
std::vector<Eigen::MatrixXd> reconstruct(const BrownianEnsemble& ens, const ProcessTriple& data);
/// Recovers (x0, drift, F) from trajectories given the diffusion; the inverse of reconstruct.
ProcessTriple triple_from_trajectories(const BrownianEnsemble& ens, const std::vector<Eigen::MatrixXd>& traj,
                                       const std::vector<Eigen::MatrixXd>& diffusion);

/// E{<p0,u(0)> + sum <p1,drift> dt + (1/2) sum <P,F> dt} in the H metric.
double duality_pairing(const ItoProcessEnsemble& u, const ProcessTriple& p);

struct AdaptednessReport {
  double max_z = 0.0;
  int probes = 0;
  int tests = 0;
  int worst_step = -1;
  int worst_lag = -1;
  bool pass = false;
  std::string summary() const;
};

/// Correlation z-scores between projections of (drift_n, F_n) and dW_k for
/// k = n, n+1, n+2 at probe_count probed steps. Non-constant projections
/// with |z| > threshold fail the test. By-construction processes are
/// reported as passing without sampling.
AdaptednessReport check_adapted(const ItoProcessEnsemble& proc, int probe_count, double threshold = 4.0,
                                bool trust_certificate = true);
/// Runs check_adapted and records the verdict unless the process is certified.
AdaptednessReport audit_adaptedness(ItoProcessEnsemble& proc, int probe_count, double threshold = 4.0);

/// Norms for the Y^alpha_V summands. Default: grid V = H^1_0 and V* = H^-1,
/// or the H metric when there is no grid.
struct VNorms {
  std::function<double(const Eigen::VectorXd&)> v_norm, v_star_norm;
};
VNorms default_v_norms(const ItoProcessEnsemble& proc);

struct YNorm {
  double trajectory = 0.0;  // (E sum |u_n|_V^alpha dt)^{1/alpha}, n < N
  double drift = 0.0;       // (E sum |drift_n|_{V*}^beta dt)^{1/beta}
  double diffusion = 0.0;   // (E sum |F_n|_H^2 dt)^{1/2}
  double total() const { return trajectory + drift + diffusion; }
};
YNorm y_norm(const ItoProcessEnsemble& proc, double alpha, const VNorms& norms);
YNorm y_norm(const ItoProcessEnsemble& proc, double alpha);

/// Decomposition of I(u) into its three gaps plus the discretization defect.
struct GapReport {
  double fenchel_gap = 0.0;   // E sum [L(u,-drift) + <u,drift>] dt
  double boundary_gap = 0.0;  // E |u(0) - u0|^2
  double noise_gap = 0.0;     // E sum |F - B|^2 dt
  double total_I = 0.0;
  double ito_residual = 0.0;
  double martingale = 0.0;  // zero-mean part dropped from total_I
  double mc_stderr = 0.0;
  double decomposition_defect() const {
    return total_I - (fenchel_gap + boundary_gap + noise_gap) - ito_residual;
  }
};

}  // namespace sdspde
