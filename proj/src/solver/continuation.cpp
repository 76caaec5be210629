#include "sdspde/error.hpp"
#include "sdspde/solver/solver.hpp"
#include "sdspde/util/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace sdspde {

double ContinuationResult::proxy_ratio_spread() const {
  if (stages.empty()) return 1.0;
  double lo = HUGE_VAL, hi = 0.0;
  for (const auto& s : stages) {
    lo = std::min(lo, s.proxy_ratio);
    hi = std::max(hi, s.proxy_ratio);
  }
  return lo > 0.0 ? hi / lo : HUGE_VAL;
}

ContinuationResult lambda_continuation(const AdditiveProblem& prob, const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.lambda_schedule.empty()) throw Error(ErrorCode::invalid_argument, "lambda_continuation needs a lambda_schedule");
  std::vector<ContinuationStage> stages;
  int total = 0;
  std::vector<Eigen::MatrixXd> warm;
  const int mm = prob.paths(), nn = prob.steps();
  const double dt = prob.dt();
  for (double lambda : cfg.lambda_schedule) {
    const SelfDualLagrangian reg = moreau_regularize(prob.lagrangian, lambda);
    const AdditiveProblem stage_prob = with_lagrangian(prob, reg);
    SolveResult r = warm.empty() ? minimize(stage_prob, cfg) : minimize_from(stage_prob, cfg, warm);

    std::vector<double> defect(static_cast<size_t>(mm)), vnorm(static_cast<size_t>(mm));
    parallel_for(mm, [&](int m) {
      const auto& u = r.process.trajectory(m);
      double a = 0.0, b = 0.0;
      for (int n = 0; n < nn; ++n) {
        const Vec j = reg.moreau_point(u.col(n));
        a += prob.metric()->norm_sq(u.col(n) - j) * dt;
        b += (prob.grid ? prob.grid->v_norm_sq(j) : prob.metric()->norm_sq(j)) * dt;
      }
      defect[static_cast<size_t>(m)] = a;
      vnorm[static_cast<size_t>(m)] = b;
    });
    ContinuationStage s;
    s.lambda = lambda;
    s.iterations = r.log.total_iterations();
    s.fenchel_gap = r.report.fenchel_gap;
    double a = 0.0, b = 0.0;
    for (int m = 0; m < mm; ++m) {
      a += defect[static_cast<size_t>(m)];
      b += vnorm[static_cast<size_t>(m)];
    }
    s.proxy_ratio = a / mm / lambda;
    s.proxy_v_norm = std::sqrt(b / mm);
    total += s.iterations;
    stages.push_back(s);
    warm = std::move(r.y);
  }
  ContinuationResult out{minimize_from(prob, cfg, warm), std::move(stages), total};
  out.total_iterations += out.final.log.total_iterations();
  return out;
}

}  // namespace sdspde
