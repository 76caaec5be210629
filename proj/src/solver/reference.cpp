#include "sdspde/error.hpp"
#include "sdspde/solver/solver.hpp"
#include "sdspde/util/parallel.hpp"

#include <cmath>

namespace sdspde {

using Mat = Eigen::MatrixXd;
using Kind = SelfDualLagrangian::Kind;

ItoProcessEnsemble reference_step(const AdditiveProblem& prob) {
  prob.validate();
  const auto kind = prob.lagrangian.kind();
  if (kind != Kind::basic && kind != Kind::skew_shifted) {
    throw Error(ErrorCode::not_supported,
                std::string("reference_step needs a basic or skew_shifted Lagrangian, got ") + to_string(kind));
  }
  const int mm = prob.paths(), nn = prob.steps(), d = prob.dim();
  const double dt = prob.dt();
  ProcessTriple t = ProcessTriple::zeros(d, mm, nn);
  parallel_for(mm, [&](int m) {
    const Mat& b = prob.noise_for(m);
    auto& drift = t.drift[static_cast<size_t>(m)];
    Vec u = prob.u0;
    for (int n = 0; n < nn; ++n) {
      const Vec kick = b.col(n) * prob.ensemble->dw(m, n);
      const Vec next = prob.lagrangian.implicit_resolvent(dt, u - dt * prob.lagrangian.explicit_field(u) + kick);
      drift.col(n) = (next - u - kick) / dt;
      u = next;
    }
    t.x0.col(m) = prob.u0;
    t.diffusion[static_cast<size_t>(m)] = b;
  });
  return ItoProcessEnsemble(prob.ensemble, prob.metric(), std::move(t), Adaptedness::unverified, prob.grid);
}

ResidualReport residual_check(const AdditiveProblem& prob, const ItoProcessEnsemble& proc) {
  return residual_check(prob, proc, prob.noise);
}

ResidualReport residual_check(const AdditiveProblem& prob, const ItoProcessEnsemble& proc,
                              const std::vector<Mat>& noise) {
  prob.validate();
  const auto kind = prob.lagrangian.kind();
  if (kind == Kind::noise || kind == Kind::boundary) {
    throw Error(ErrorCode::non_recoverable_field, std::string(to_string(kind)) + " Lagrangian carries no drift");
  }
  if (proc.dim() != prob.dim() || !proc.ensemble().same_as(*prob.ensemble)) {
    throw Error(ErrorCode::ensemble_mismatch, "process does not live on the problem's ensemble");
  }
  const int mm = prob.paths(), nn = prob.steps();
  if (noise.size() != 1 && noise.size() != static_cast<size_t>(mm)) {
    throw Error(ErrorCode::dimension_mismatch, "noise must be shared or given per path");
  }
  const double dt = prob.dt();
  const bool dual_norm = kind == Kind::divergence_lifted;
  if (dual_norm && !prob.grid) throw Error(ErrorCode::invalid_argument, "V* defect needs a grid");
  const auto& l = prob.lagrangian;
  auto norm = [&](const Vec& v) {
    return dual_norm ? std::sqrt(std::max(0.0, prob.grid->v_star_norm_sq(v))) : std::sqrt(prob.metric()->norm_sq(v));
  };

  // left[m](n), right[m](n): defect norms at t_n.
  RowMatrix left(mm, nn + 1), right(mm, nn + 1);
  parallel_for(mm, [&](int m) {
    const Mat& u = proc.trajectory(m);
    const Mat& b = noise.size() == 1 ? noise[0] : noise[static_cast<size_t>(m)];
    Vec acc_l = Vec::Zero(prob.dim()), acc_r = acc_l;
    left(m, 0) = norm(u.col(0) - prob.u0);
    right(m, 0) = left(m, 0);
    for (int n = 0; n < nn; ++n) {
      const Vec noise_inc = b.col(n) * prob.ensemble->dw(m, n);
      acc_l += l.vector_field(u.col(n)) * dt - noise_inc;
      Vec ar;
      if (kind == Kind::skew_shifted) {
        ar = l.vector_field(u.col(n + 1)) - l.explicit_field(u.col(n + 1)) + l.explicit_field(u.col(n));
      } else {
        ar = l.vector_field(u.col(n + 1));
      }
      acc_r += ar * dt - noise_inc;
      left(m, n + 1) = norm(u.col(n + 1) - prob.u0 + acc_l);
      right(m, n + 1) = norm(u.col(n + 1) - prob.u0 + acc_r);
    }
  });

  ResidualReport r;
  r.norm = dual_norm ? "V*" : "H";
  for (int n = 0; n <= nn; ++n) {
    const double e = left.col(n).mean();
    if (e > r.defect || n == 0) {
      r.defect = e;
      r.worst_step = n;
    }
    r.right_defect = std::max(r.right_defect, right.col(n).mean());
  }
  if (mm > 1) {
    const Vec c = left.col(r.worst_step);
    r.std_error = std::sqrt((c.array() - c.mean()).square().sum() / (mm - 1) / mm);
  }
  return r;
}

}  // namespace sdspde
