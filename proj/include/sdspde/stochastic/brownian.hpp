#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>

namespace sdspde {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// M scalar Brownian paths on the uniform grid t_n = n T / N.
/// Path m of the finest level is a pure function of (seed, m, N, T), so
/// ensembles can be grown in M without changing existing paths. Coarser
/// levels are exact sums of consecutive fine increments.
class BrownianEnsemble {
 public:
  BrownianEnsemble(std::uint64_t seed, double horizon, RowMatrix increments, std::uint32_t coarsening);

  int paths() const { return static_cast<int>(dw_.rows()); }
  int steps() const { return static_cast<int>(dw_.cols()); }
  double horizon() const { return t_; }
  double dt() const { return t_ / steps(); }
  std::uint64_t seed() const { return seed_; }
  /// Fine steps summed into each step of this ensemble (1 when sampled directly).
  std::uint32_t coarsening() const { return coarsening_; }
  std::uint32_t generator_id() const;

  double dw(int m, int n) const { return dw_(m, n); }
  const RowMatrix& increments() const { return dw_; }
  /// W[m](t_n) for n = 0..N.
  double w(int m, int n) const;
  Eigen::VectorXd path(int m) const;
  /// W(T) per path.
  Eigen::VectorXd terminal() const;

  /// Standard normal from the auxiliary stream, aligned with dw(m, n).
  /// Only defined for directly sampled ensembles.
  double auxiliary_normal(int m, int n) const;

  /// Same seed, horizon, level and increments.
  bool same_as(const BrownianEnsemble& other) const;

 private:
  std::uint64_t seed_;
  double t_;
  RowMatrix dw_;
  std::uint32_t coarsening_;
};

using EnsemblePtr = std::shared_ptr<const BrownianEnsemble>;

/// Throws invalid_argument unless M, N >= 1 and T > 0.
BrownianEnsemble sample_ensemble(int m, int n, double horizon, std::uint64_t seed);
EnsemblePtr make_ensemble(int m, int n, double horizon, std::uint64_t seed);

/// Increments of path m, regenerated from (seed, m).
Eigen::VectorXd regenerate_path(std::uint64_t seed, int m, int n, double horizon);

/// Sums groups of `factor` increments. N must be divisible by factor.
BrownianEnsemble coarsen(const BrownianEnsemble& fine, int factor);

/// Moment summary of all increments.
struct IncrementStats {
  double mean = 0.0;
  double variance = 0.0;
  double mean_z = 0.0;  // mean / sqrt(dt / (M N))
  double variance_ratio = 0.0;  // variance / dt
};
IncrementStats increment_stats(const BrownianEnsemble& ens);

}  // namespace sdspde
