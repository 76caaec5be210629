#include "sdspde/stochastic/brownian.hpp"

#include "sdspde/error.hpp"
#include "sdspde/stochastic/philox.hpp"
#include "sdspde/util/parallel.hpp"

#include <cmath>
#include <string>

namespace sdspde {

namespace {
constexpr std::uint32_t kIncrementStream = 0;
constexpr std::uint32_t kAuxiliaryStream = 1;
}  // namespace

BrownianEnsemble::BrownianEnsemble(std::uint64_t seed, double horizon, RowMatrix increments,
                                   std::uint32_t coarsening)
    : seed_(seed), t_(horizon), dw_(std::move(increments)), coarsening_(coarsening) {
  if (dw_.rows() < 1 || dw_.cols() < 1 || !(horizon > 0.0) || coarsening < 1) {
    throw Error(ErrorCode::invalid_argument, "Brownian ensemble needs M, N >= 1, T > 0");
  }
}

std::uint32_t BrownianEnsemble::generator_id() const { return kPhiloxBoxMuller; }

double BrownianEnsemble::w(int m, int n) const {
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += dw_(m, k);
  return s;
}

Eigen::VectorXd BrownianEnsemble::path(int m) const {
  Eigen::VectorXd w(steps() + 1);
  w[0] = 0.0;
  for (int k = 0; k < steps(); ++k) w[k + 1] = w[k] + dw_(m, k);
  return w;
}

Eigen::VectorXd BrownianEnsemble::terminal() const {
  Eigen::VectorXd out(paths());
  for (int m = 0; m < paths(); ++m) out[m] = w(m, steps());
  return out;
}

double BrownianEnsemble::auxiliary_normal(int m, int n) const {
  if (coarsening_ != 1) {
    throw Error(ErrorCode::not_supported, "auxiliary normals exist only on the sampled level");
  }
  return philox_normal(seed_, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n), kAuxiliaryStream);
}

bool BrownianEnsemble::same_as(const BrownianEnsemble& o) const {
  return this == &o || (seed_ == o.seed_ && t_ == o.t_ && coarsening_ == o.coarsening_ &&
                        dw_.rows() == o.dw_.rows() && dw_.cols() == o.dw_.cols() && dw_ == o.dw_);
}

Eigen::VectorXd regenerate_path(std::uint64_t seed, int m, int n, double horizon) {
  if (n < 1 || !(horizon > 0.0) || m < 0) {
    throw Error(ErrorCode::invalid_argument, "regenerate_path: need N >= 1, T > 0, m >= 0");
  }
  const double s = std::sqrt(horizon / n);
  Eigen::VectorXd dw(n);
  for (int j = 0; 2 * j < n; ++j) {
    const auto z = philox_normal_pair(seed, static_cast<std::uint64_t>(m), static_cast<std::uint32_t>(j),
                                      kIncrementStream);
    dw[2 * j] = s * z[0];
    if (2 * j + 1 < n) dw[2 * j + 1] = s * z[1];
  }
  return dw;
}

BrownianEnsemble sample_ensemble(int m, int n, double horizon, std::uint64_t seed) {
  if (m < 1 || n < 1 || !(horizon > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "sample_ensemble: need M, N >= 1 and T > 0 (got M=" +
                                                 std::to_string(m) + ", N=" + std::to_string(n) + ")");
  }
  RowMatrix dw(m, n);
  parallel_for(m, [&](int p) { dw.row(p) = regenerate_path(seed, p, n, horizon).transpose(); });
  return BrownianEnsemble(seed, horizon, std::move(dw), 1);
}

EnsemblePtr make_ensemble(int m, int n, double horizon, std::uint64_t seed) {
  return std::make_shared<const BrownianEnsemble>(sample_ensemble(m, n, horizon, seed));
}

BrownianEnsemble coarsen(const BrownianEnsemble& fine, int factor) {
  if (factor < 1 || fine.steps() % factor != 0) {
    throw Error(ErrorCode::invalid_argument, "coarsen: factor " + std::to_string(factor) +
                                                 " does not divide N=" + std::to_string(fine.steps()));
  }
  const int n = fine.steps() / factor;
  RowMatrix dw(fine.paths(), n);
  for (int m = 0; m < fine.paths(); ++m) {
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int j = 0; j < factor; ++j) s += fine.dw(m, k * factor + j);
      dw(m, k) = s;
    }
  }
  return BrownianEnsemble(fine.seed(), fine.horizon(), std::move(dw),
                          fine.coarsening() * static_cast<std::uint32_t>(factor));
}

IncrementStats increment_stats(const BrownianEnsemble& ens) {
  const double count = static_cast<double>(ens.paths()) * ens.steps();
  double s = 0.0;
  for (int m = 0; m < ens.paths(); ++m) {
    for (int n = 0; n < ens.steps(); ++n) s += ens.dw(m, n);
  }
  IncrementStats st;
  st.mean = s / count;
  double v = 0.0;
  for (int m = 0; m < ens.paths(); ++m) {
    for (int n = 0; n < ens.steps(); ++n) {
      const double d = ens.dw(m, n) - st.mean;
      v += d * d;
    }
  }
  st.variance = v / (count > 1 ? count - 1 : 1);
  st.mean_z = st.mean / std::sqrt(ens.dt() / count);
  st.variance_ratio = st.variance / ens.dt();
  return st;
}

}  // namespace sdspde
