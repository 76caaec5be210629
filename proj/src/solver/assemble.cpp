#include "sdspde/error.hpp"
#include "sdspde/solver/detail.hpp"
#include "sdspde/solver/solver.hpp"
#include "sdspde/util/parallel.hpp"

#include <cmath>

namespace sdspde {

namespace {

void require_shapes(const AdditiveProblem& prob, const ItoProcessEnsemble& proc) {
  prob.validate();
  if (proc.dim() != prob.dim()) throw Error(ErrorCode::dimension_mismatch, "process dimension differs from the problem");
  if (!proc.ensemble().same_as(*prob.ensemble)) {
    throw Error(ErrorCode::ensemble_mismatch, "process and problem use different Brownian ensembles");
  }
}

void require_adapted(const ItoProcessEnsemble& proc, int probes) {
  if (proc.adaptedness() == Adaptedness::failed) {
    throw Error(ErrorCode::non_adapted_input, "process is marked as failing the adaptedness audit");
  }
  if (proc.adaptedness() == Adaptedness::unverified) {
    const auto r = check_adapted(proc, probes);
    if (!r.pass) throw Error(ErrorCode::non_adapted_input, r.summary());
  }
}

struct PathTerms {
  double direct = 0.0;
  double fenchel = 0.0, boundary = 0.0, noise = 0.0, ito = 0.0, martingale = 0.0;
};

}  // namespace

GapReport assemble_I(const AdditiveProblem& prob, const ItoProcessEnsemble& proc, int probes) {
  require_shapes(prob, proc);
  require_adapted(proc, probes);
  return detail::assemble_unchecked(prob, proc);
}

GapReport detail::assemble_unchecked(const AdditiveProblem& prob, const ItoProcessEnsemble& proc) {
  require_shapes(prob, proc);

  const auto& g = *prob.metric();
  const int mm = prob.paths(), nn = prob.steps();
  const double dt = prob.dt();
  const bool shared = prob.noise.size() == 1;
  std::vector<SelfDualLagrangian> shared_noise;
  if (shared) {
    for (int n = 0; n < nn; ++n) shared_noise.push_back(SelfDualLagrangian::noise(prob.noise[0].col(n), prob.metric()));
  }

  std::vector<PathTerms> terms(static_cast<size_t>(mm));
  parallel_for(mm, [&](int m) {
    PathTerms t;
    const auto& traj = proc.trajectory(m);
    const auto& drift = proc.data().drift[static_cast<size_t>(m)];
    const auto& diff = proc.data().diffusion[static_cast<size_t>(m)];
    const auto& b = prob.noise_for(m);
    const Vec x0 = traj.col(0);
    double lag = 0.0, half_m = 0.0;
    for (int n = 0; n < nn; ++n) {
      const Vec v = drift.col(n);
      const Vec y = traj.col(n) + v * dt;
      const Vec f = diff.col(n);
      const double dw = prob.ensemble->dw(m, n);
      const double l = prob.lagrangian.value(y, -v);
      lag += l * dt;
      t.fenchel += (l + g.inner(y, v)) * dt;
      const double mb = shared ? shared_noise[static_cast<size_t>(n)].value(f, -f)
                               : SelfDualLagrangian::noise(b.col(n), prob.metric()).value(f, -f);
      half_m += 0.5 * mb * dt;
      t.noise += g.norm_sq(f - b.col(n)) * dt;
      t.ito -= 0.5 * g.norm_sq(v) * dt * dt;
      const double ff = g.norm_sq(f);
      t.martingale += g.inner(y, f) * dw + 0.5 * ff * (dw * dw - dt);
    }
    const double ell = prob.boundary.value(x0, traj.col(nn));
    t.boundary = g.norm_sq(x0 - prob.u0);
    t.direct = lag + ell + half_m - t.martingale;
    terms[static_cast<size_t>(m)] = t;
  });

  GapReport r;
  Vec direct(mm);
  for (int m = 0; m < mm; ++m) {
    const auto& t = terms[static_cast<size_t>(m)];
    direct[m] = t.direct;
    r.fenchel_gap += t.fenchel;
    r.boundary_gap += t.boundary;
    r.noise_gap += t.noise;
    r.ito_residual += t.ito;
    r.martingale += t.martingale;
  }
  r.fenchel_gap /= mm;
  r.boundary_gap /= mm;
  r.noise_gap /= mm;
  r.ito_residual /= mm;
  r.martingale /= mm;
  r.total_I = direct.mean();
  r.mc_stderr = mm > 1 ? std::sqrt((direct.array() - r.total_I).square().sum() / (mm - 1) / mm) : 0.0;
  return r;
}

RowMatrix fenchel_gap_density(const AdditiveProblem& prob, const ItoProcessEnsemble& proc) {
  require_shapes(prob, proc);
  const auto& g = *prob.metric();
  const int mm = prob.paths(), nn = prob.steps();
  const double dt = prob.dt();
  RowMatrix out(mm, nn);
  parallel_for(mm, [&](int m) {
    const auto& traj = proc.trajectory(m);
    const auto& drift = proc.data().drift[static_cast<size_t>(m)];
    for (int n = 0; n < nn; ++n) {
      const Vec v = drift.col(n);
      const Vec y = traj.col(n) + v * dt;
      out(m, n) = prob.lagrangian.value(y, -v) + g.inner(y, v);
    }
  });
  return out;
}

double fraction_below(const RowMatrix& values, double tol) {
  if (values.size() == 0) return 1.0;
  return static_cast<double>((values.array() < tol).count()) / static_cast<double>(values.size());
}

}  // namespace sdspde
