#include "sdspde/error.hpp"
#include "sdspde/solver/detail.hpp"
#include "sdspde/solver/solver.hpp"
#include "sdspde/util/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdspde {

using Mat = Eigen::MatrixXd;

namespace {

// Per-path drift problem in the post-drift states y (d x N):
//   u_0 = u0, u_{n+1} = y_n + B_n dW_n, p_n = (u_n - y_n) / dt,
//   G(y) = sum_n dt [L(y_n, p_n) - <y_n, p_n>] = f(y) + g(y),
// with g = sum dt phi(y_n) for the Lagrangian's prox part.
class PathObjective {
 public:
  PathObjective(const AdditiveProblem& prob, int m)
      : l_(prob.lagrangian), g_(*prob.metric()), prox_(prob.lagrangian.prox_part()), dt_(prob.dt()),
        nn_(prob.steps()), u0_(prob.u0), kick_(prob.noise_for(m)) {
    for (int n = 0; n < nn_; ++n) kick_.col(n) *= prob.ensemble->dw(m, n);
  }

  int steps() const { return nn_; }

  Mat states(const Mat& y) const {
    Mat u(y.rows(), nn_ + 1);
    u.col(0) = u0_;
    for (int n = 0; n < nn_; ++n) u.col(n + 1) = y.col(n) + kick_.col(n);
    return u;
  }

  Mat march() const {
    Mat y(u0_.size(), nn_);
    Vec u = u0_;
    for (int n = 0; n < nn_; ++n) {
      y.col(n) = l_.resolvent(dt_, u);
      u = y.col(n) + kick_.col(n);
    }
    return y;
  }

  Mat still() const {
    Mat y(u0_.size(), nn_);
    Vec u = u0_;
    for (int n = 0; n < nn_; ++n) {
      y.col(n) = u;
      u = u + kick_.col(n);
    }
    return y;
  }

  double smooth(const Mat& y, Mat* grad) const {
    const Mat u = states(y);
    double f = 0.0;
    Mat rp(y.rows(), nn_), gy(y.rows(), nn_);
    if (grad) grad->resize(y.rows(), nn_);
    for (int n = 0; n < nn_; ++n) {
      const Vec yn = y.col(n);
      const Vec p = (u.col(n) - yn) / dt_;
      const Vec gp = g_.apply(p);
      const auto r = l_.remainder(yn, p);
      f += dt_ * (r.value - yn.dot(gp));
      if (!std::isfinite(f)) return HUGE_VAL;
      if (grad) {
        const Vec gyn = g_.apply(yn);
        grad->col(n) = dt_ * (r.du - gp) - (r.dp - gyn);
        rp.col(n) = r.dp;
        gy.col(n) = gyn;
      }
    }
    if (grad) {
      for (int n = 0; n + 1 < nn_; ++n) grad->col(n) += rp.col(n + 1) - gy.col(n + 1);
    }
    return f;
  }

  double nonsmooth(const Mat& y) const {
    if (!prox_) return 0.0;
    double s = 0.0;
    for (int n = 0; n < nn_; ++n) s += dt_ * prox_->value(y.col(n));
    return s;
  }

  Mat prox(const Mat& y, double step) const {
    if (!prox_) return y;
    Mat z(y.rows(), nn_);
    for (int n = 0; n < nn_; ++n) z.col(n) = prox_->prox(step * dt_, y.col(n));
    return z;
  }

  /// sum_n gap_n dt evaluated through the Lagrangian itself.
  double gap(const Mat& y) const {
    const Mat u = states(y);
    double s = 0.0;
    for (int n = 0; n < nn_; ++n) {
      const Vec yn = y.col(n);
      const Vec p = (u.col(n) - yn) / dt_;
      s += dt_ * l_.gap(yn, p);
    }
    return s;
  }

  double scale() const { return 1.0 + u0_.cwiseAbs().maxCoeff() + kick_.cwiseAbs().sum(); }

 private:
  const SelfDualLagrangian& l_;
  const Metric& g_;
  std::optional<ConvexFunction> prox_;
  double dt_;
  int nn_;
  Vec u0_;
  Mat kick_;
};

// Monotone FISTA with backtracking and function-value restart; plain
// proximal gradient when accelerate is false.
Mat proximal_descent(const PathObjective& obj, Mat x, const SolverConfig& cfg, bool accelerate, PathLog& log) {
  const auto& rule = cfg.step_rule;
  double lip = rule.initial_lipschitz;
  double fx = obj.smooth(x, nullptr) + obj.nonsmooth(x);
  log.initial_gap = fx;
  if (!std::isfinite(fx)) throw Error(ErrorCode::invalid_argument, "optimizer start has infinite objective");
  Mat z = x, xprev = x;
  double t = 1.0;
  const double blowup = 1e10 * obj.scale();
  for (int k = 0; k < cfg.max_iters && fx > cfg.gap_tol; ++k) {
    Mat grad;
    const double fz = obj.smooth(z, &grad);
    Mat cand;
    double fc = HUGE_VAL;
    int bt = 0;
    for (;; ++bt) {
      cand = obj.prox(z - grad / lip, 1.0 / lip);
      fc = obj.smooth(cand, nullptr);
      const Mat d = cand - z;
      const double model = fz + (grad.array() * d.array()).sum() + 0.5 * lip * d.squaredNorm();
      if (std::isfinite(fc) && fc <= model + 1e-13 * (1.0 + std::abs(fz))) break;
      if (bt >= rule.max_backtracks) {
        throw Error(ErrorCode::no_convergence, "step-size backtracking exhausted at Lipschitz estimate " +
                                                   std::to_string(lip));
      }
      lip *= rule.grow;
    }
    log.backtracks += bt;
    ++log.iterations;
    const double fcand = fc + obj.nonsmooth(cand);
    if (cand.cwiseAbs().maxCoeff() > blowup || !std::isfinite(fcand)) {
      throw Error(ErrorCode::non_coercive, "trajectory iterates diverge (|y| > " + std::to_string(blowup) + ")");
    }
    xprev = x;
    const bool improved = fcand <= fx;
    if (improved) {
      x = cand;
      fx = fcand;
    }
    if (accelerate) {
      if (!improved) {
        ++log.restarts;
        t = 1.0;
        z = x;
      } else {
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = x + ((t - 1.0) / tn) * (x - xprev);
        t = tn;
      }
    } else {
      z = x;
    }
    lip = std::max(lip * rule.relax, 1e-300);
  }
  log.final_gap = fx;
  log.converged = fx <= cfg.gap_tol;
  return x;
}

}  // namespace

int IterationLog::total_iterations() const {
  int s = 0;
  for (const auto& p : paths) s += p.iterations;
  return s;
}

double IterationLog::max_final_gap() const {
  double s = 0.0;
  for (const auto& p : paths) s = std::max(s, p.final_gap);
  return s;
}

namespace detail {

ItoProcessEnsemble process_from_states(const AdditiveProblem& prob, const std::vector<Mat>& y, Adaptedness a) {
  const int mm = prob.paths(), nn = prob.steps(), d = prob.dim();
  const double dt = prob.dt();
  ProcessTriple t = ProcessTriple::zeros(d, mm, nn);
  for (int m = 0; m < mm; ++m) {
    t.x0.col(m) = prob.u0;
    const Mat& b = prob.noise_for(m);
    Vec u = prob.u0;
    auto& drift = t.drift[static_cast<size_t>(m)];
    for (int n = 0; n < nn; ++n) {
      drift.col(n) = (y[static_cast<size_t>(m)].col(n) - u) / dt;
      u = y[static_cast<size_t>(m)].col(n) + b.col(n) * prob.ensemble->dw(m, n);
    }
    t.diffusion[static_cast<size_t>(m)] = b;
  }
  return ItoProcessEnsemble(prob.ensemble, prob.metric(), std::move(t), a, prob.grid);
}

}  // namespace detail

namespace {

SolveResult solve(const AdditiveProblem& prob, const SolverConfig& cfg, const std::vector<Mat>* start) {
  prob.validate();
  cfg.validate();
  const int mm = prob.paths();
  if (start && static_cast<int>(start->size()) != mm) {
    throw Error(ErrorCode::dimension_mismatch, "warm start needs one d x N block per path");
  }
  const bool march_only = cfg.optimizer == SolverConfig::Optimizer::per_step_prox_recursion;
  std::vector<Mat> y(static_cast<size_t>(mm));
  std::vector<PathLog> logs(static_cast<size_t>(mm));
  parallel_for(mm, [&](int m) {
    PathObjective obj(prob, m);
    auto& log = logs[static_cast<size_t>(m)];
    if (march_only) {
      y[static_cast<size_t>(m)] = obj.march();
      log.initial_gap = log.final_gap = obj.gap(y[static_cast<size_t>(m)]);
      log.converged = log.final_gap <= cfg.gap_tol;
      return;
    }
    Mat x0;
    if (start) {
      x0 = (*start)[static_cast<size_t>(m)];
      if (x0.rows() != prob.dim() || x0.cols() != prob.steps()) {
        throw Error(ErrorCode::dimension_mismatch, "warm start block is not d x N");
      }
    } else {
      x0 = cfg.init == SolverConfig::Init::march ? obj.march() : obj.still();
    }
    y[static_cast<size_t>(m)] =
        proximal_descent(obj, std::move(x0), cfg, cfg.optimizer == SolverConfig::Optimizer::accelerated_proximal, log);
  });

  IterationLog log{to_string(cfg.optimizer), std::move(logs)};
  Adaptedness status = march_only || prob.noise_free() ? Adaptedness::by_construction : Adaptedness::unverified;
  ItoProcessEnsemble proc = detail::process_from_states(prob, y, status);
  AdaptednessReport audit;
  if (status == Adaptedness::unverified) {
    audit = audit_adaptedness(proc, cfg.adapted_probes);
    if (prob.paths() < 2) proc.set_adaptedness(Adaptedness::unverified);
  } else {
    audit = check_adapted(proc, cfg.adapted_probes);
  }
  GapReport report = detail::assemble_unchecked(prob, proc);

  if (!march_only) {
    int worst = 0;
    for (int m = 0; m < mm; ++m) {
      if (log.paths[static_cast<size_t>(m)].final_gap > log.paths[static_cast<size_t>(worst)].final_gap) worst = m;
    }
    if (!log.paths[static_cast<size_t>(worst)].converged) {
      std::ostringstream s;
      s.precision(6);
      s << "path " << worst << " reached summed Fenchel gap " << log.paths[static_cast<size_t>(worst)].final_gap
        << " > gap_tol " << cfg.gap_tol << " after " << log.paths[static_cast<size_t>(worst)].iterations
        << " iterations; ensemble gaps: fenchel " << report.fenchel_gap << ", boundary " << report.boundary_gap
        << ", noise " << report.noise_gap << ", total_I " << report.total_I;
      throw Error(ErrorCode::no_convergence, s.str());
    }
  }
  return SolveResult{std::move(proc), report, std::move(log), std::move(y), audit};
}

}  // namespace

SolveResult minimize(const AdditiveProblem& prob, const SolverConfig& cfg) { return solve(prob, cfg, nullptr); }

SolveResult minimize_from(const AdditiveProblem& prob, const SolverConfig& cfg, const std::vector<Mat>& y_start) {
  return solve(prob, cfg, &y_start);
}

}  // namespace sdspde
