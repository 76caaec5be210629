#include "sdspde/stochastic/ito_calculus.hpp"

#include "sdspde/error.hpp"
#include "sdspde/util/parallel.hpp"

#include <cmath>
#include <string>

namespace sdspde {

namespace {

void require_same_space(const ItoProcessEnsemble& u, const ItoProcessEnsemble& v, const char* what) {
  if (!u.ensemble().same_as(v.ensemble())) {
    throw Error(ErrorCode::ensemble_mismatch, std::string(what) + ": processes use different Brownian ensembles");
  }
  if (u.dim() != v.dim()) {
    throw Error(ErrorCode::ensemble_mismatch, std::string(what) + ": processes live in different spaces");
  }
}

}  // namespace

Eigen::VectorXd ito_integral(const BrownianEnsemble& ens, const RowMatrix& z) {
  if (z.rows() != ens.paths() || z.cols() != ens.steps()) {
    throw Error(ErrorCode::dimension_mismatch, "ito_integral: integrand is not M x N");
  }
  Eigen::VectorXd out(ens.paths());
  for (int m = 0; m < ens.paths(); ++m) {
    double s = 0.0;
    for (int n = 0; n < ens.steps(); ++n) s += z(m, n) * ens.dw(m, n);
    out[m] = s;
  }
  return out;
}

Eigen::MatrixXd ito_integral(const BrownianEnsemble& ens, const std::vector<Eigen::MatrixXd>& z) {
  if (static_cast<int>(z.size()) != ens.paths()) {
    throw Error(ErrorCode::dimension_mismatch, "ito_integral: one integrand per path expected");
  }
  const int d = z.empty() ? 0 : static_cast<int>(z[0].rows());
  Eigen::MatrixXd out(d, ens.paths());
  for (int m = 0; m < ens.paths(); ++m) {
    const auto& zm = z[static_cast<size_t>(m)];
    if (zm.rows() != d || zm.cols() != ens.steps()) {
      throw Error(ErrorCode::dimension_mismatch, "ito_integral: integrand is not d x N");
    }
    Eigen::VectorXd s = Eigen::VectorXd::Zero(d);
    for (int n = 0; n < ens.steps(); ++n) s += zm.col(n) * ens.dw(m, n);
    out.col(m) = s;
  }
  return out;
}

MeanEstimate estimate_mean(const Eigen::VectorXd& x) {
  MeanEstimate e;
  const double n = static_cast<double>(x.size());
  if (x.size() == 0) return e;
  e.mean = x.mean();
  if (x.size() > 1) {
    const double var = (x.array() - e.mean).square().sum() / (n - 1);
    e.std_error = std::sqrt(var / n);
  }
  return e;
}

IsometryReport ito_isometry(const BrownianEnsemble& ens, const RowMatrix& z) {
  const Eigen::VectorXd i = ito_integral(ens, z);
  Eigen::VectorXd diff(ens.paths());
  IsometryReport r;
  for (int m = 0; m < ens.paths(); ++m) {
    const double q = z.row(m).squaredNorm() * ens.dt();
    r.lhs += i[m] * i[m];
    r.rhs += q;
    diff[m] = i[m] * i[m] - q;
  }
  r.lhs /= ens.paths();
  r.rhs /= ens.paths();
  r.relative_gap = std::abs(r.lhs - r.rhs) / std::max(std::abs(r.rhs), 1e-300);
  r.std_error = estimate_mean(diff).std_error;
  return r;
}

Eigen::VectorXd ito_formula_defects(const ItoProcessEnsemble& u) {
  const auto& g = *u.metric();
  const double dt = u.dt();
  Eigen::VectorXd out(u.paths());
  parallel_for(u.paths(), [&](int m) {
    const auto& traj = u.trajectory(m);
    const auto& a = u.data().drift[static_cast<size_t>(m)];
    const auto& f = u.data().diffusion[static_cast<size_t>(m)];
    double s = g.norm_sq(traj.col(u.steps())) - g.norm_sq(traj.col(0));
    for (int n = 0; n < u.steps(); ++n) {
      s -= dt * (2.0 * g.inner(a.col(n), traj.col(n)) + g.norm_sq(f.col(n)));
    }
    out[m] = s;
  });
  return out;
}

ItoFormulaReport ito_formula_check(const ItoProcessEnsemble& u) {
  const auto e = estimate_mean(ito_formula_defects(u));
  ItoFormulaReport r;
  r.residual = r.coarse_residual = r.extrapolated = e.mean;
  r.std_error = e.std_error;
  r.z = e.z();
  return r;
}

ItoFormulaReport ito_formula_richardson(const ItoProcessEnsemble& fine, const ItoProcessEnsemble& coarse) {
  const auto& ef = fine.ensemble();
  const auto& ec = coarse.ensemble();
  if (ef.paths() != ec.paths() || ef.seed() != ec.seed() || ef.horizon() != ec.horizon() ||
      ef.steps() != 2 * ec.steps() || fine.dim() != coarse.dim()) {
    throw Error(ErrorCode::ensemble_mismatch, "ito_formula_richardson: coarse level is not fine/2 on the same paths");
  }
  for (int m = 0; m < ef.paths(); ++m) {
    for (int n = 0; n < ec.steps(); ++n) {
      const double s = ef.dw(m, 2 * n) + ef.dw(m, 2 * n + 1);
      if (std::abs(s - ec.dw(m, n)) > 1e-12 * (1.0 + std::abs(s))) {
        throw Error(ErrorCode::ensemble_mismatch, "ito_formula_richardson: increments do not aggregate");
      }
    }
  }
  const Eigen::VectorXd df = ito_formula_defects(fine), dc = ito_formula_defects(coarse);
  const auto e = estimate_mean(2.0 * df - dc);
  ItoFormulaReport r;
  r.residual = df.mean();
  r.coarse_residual = dc.mean();
  r.extrapolated = e.mean;
  r.std_error = e.std_error;
  r.z = e.z();
  return r;
}

IntegrationByPartsReport check_integration_by_parts(const ItoProcessEnsemble& u, const ItoProcessEnsemble& v) {
  require_same_space(u, v, "check_integration_by_parts");
  const auto& g = *u.metric();
  const double dt = u.dt();
  const int mm = u.paths();
  Eigen::VectorXd lhs(mm), rhs(mm), dtt(mm);
  parallel_for(mm, [&](int m) {
    const auto& tu = u.trajectory(m);
    const auto& tv = v.trajectory(m);
    const auto& du = u.data().drift[static_cast<size_t>(m)];
    const auto& dv = v.data().drift[static_cast<size_t>(m)];
    const auto& fu = u.data().diffusion[static_cast<size_t>(m)];
    const auto& fv = v.data().diffusion[static_cast<size_t>(m)];
    double l = 0.0, r = 0.0, q = 0.0;
    for (int n = 0; n < u.steps(); ++n) {
      l += dt * g.inner(tu.col(n), dv.col(n));
      r -= dt * g.inner(tv.col(n), du.col(n));
      r -= dt * g.inner(fu.col(n), fv.col(n));
      q += dt * dt * g.inner(du.col(n), dv.col(n));
    }
    r += g.inner(tu.col(u.steps()), tv.col(u.steps())) - g.inner(tu.col(0), tv.col(0));
    lhs[m] = l;
    rhs[m] = r;
    dtt[m] = q;
  });
  IntegrationByPartsReport rep;
  rep.lhs = lhs.mean();
  rep.rhs = rhs.mean();
  const auto e = estimate_mean(lhs - rhs);
  rep.residual = e.mean;
  rep.std_error = e.std_error;
  rep.dt_term = dtt.mean();
  const double scale = std::abs(rep.lhs) + std::abs(rep.rhs);
  rep.budget = 4.0 * rep.std_error + std::abs(rep.dt_term) + 1e-12 * (1.0 + scale);
  return rep;
}

}  // namespace sdspde
