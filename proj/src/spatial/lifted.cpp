#include "sdspde/spatial/lifted.hpp"

#include "sdspde/convex/lagrangian_impl.hpp"
#include "sdspde/util/numeric.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace sdspde {

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

// L_pt(y, f) on the real line with its partial derivatives.
class Pointwise {
 public:
  virtual ~Pointwise() = default;
  virtual std::string name() const = 0;
  virtual double value(double y, double f) const = 0;
  virtual double dy(double y, double f) const = 0;
  virtual double df(double y, double f) const = 0;
  virtual double dff(double y, double f) const = 0;
  // The self-dual field f = beta(y) and its slope.
  virtual double beta(double y) const = 0;
  virtual double dbeta(double y) const = 0;
};

class PotentialPointwise final : public Pointwise {
 public:
  explicit PotentialPointwise(ScalarPotential psi) : psi_(std::move(psi)) {}
  std::string name() const override { return psi_.name; }
  double value(double y, double f) const override {
    const double z = inverse(f);
    return psi_.value(y) + f * z - psi_.value(z);
  }
  double dy(double y, double) const override { return psi_.derivative(y); }
  double df(double, double f) const override { return inverse(f); }
  double dff(double, double f) const override { return 1.0 / psi_.second(inverse(f)); }
  double beta(double y) const override { return psi_.derivative(y); }
  double dbeta(double y) const override { return psi_.second(y); }
  const ScalarPotential& potential() const { return psi_; }

 private:
  // z with psi'(z) = f.
  double inverse(double f) const {
    return numeric::monotone_root([&](double z) { return psi_.derivative(z) - f; }, psi_.second, f, 1e-15,
                                  "lifted flux: psi' inversion");
  }
  ScalarPotential psi_;
};

class GenericPointwise final : public Pointwise {
 public:
  explicit GenericPointwise(SelfDualLagrangian l) : l_(std::move(l)) {}
  std::string name() const override { return l_.describe(); }
  double value(double y, double f) const override { return l_.value(v1(y), v1(f)); }
  double dy(double y, double f) const override { return l_.grad_u(v1(y), v1(f))[0]; }
  double df(double y, double f) const override { return l_.grad_p(v1(y), v1(f))[0]; }
  double dff(double y, double f) const override {
    const double e = 1e-5 * (1.0 + std::abs(f));
    return (df(y, f + e) - df(y, f - e)) / (2 * e);
  }
  double beta(double y) const override { return l_.vector_field(v1(y))[0]; }
  double dbeta(double y) const override {
    const double e = 1e-5 * (1.0 + std::abs(y));
    return (beta(y + e) - beta(y - e)) / (2 * e);
  }

 private:
  SelfDualLagrangian l_;
};

class Lifted final : public detail::LagrangianImpl {
 public:
  Lifted(const SpatialDiscretization& grid, std::shared_ptr<const Pointwise> pt)
      : LagrangianImpl(grid.l2_metric()), grid_(grid), pt_(std::move(pt)) {
    if (grid.dimension() != 1) {
      throw Error(ErrorCode::invalid_argument, "divergence lifting needs a 1-D grid");
    }
    if (auto* pot = dynamic_cast<const PotentialPointwise*>(pt_.get())) {
      const int e = grid.edge_count();
      phi_ = ConvexFunction::precomposed(
          ConvexFunction::separable(pot->potential(), Vec::Constant(e, grid.h())), grid.gradient());
    }
  }

  SelfDualLagrangian::Kind kind() const override { return SelfDualLagrangian::Kind::divergence_lifted; }
  int dim() const override { return grid_.size(); }
  std::string describe() const override { return "divergence_lifted(" + pt_->name() + ")"; }

  LiftedEvaluation evaluate(const Vec& u, const Vec& p) const {
    check(u, "u");
    check(p, "p");
    const double h = grid_.h();
    const Vec y = grid_.gradient() * u;
    const int ne = static_cast<int>(y.size());
    Vec s(ne);
    s[0] = 0.0;
    for (int e = 1; e < ne; ++e) s[e] = s[e - 1] + h * p[e - 1];

    int evals = 0;
    auto total = [&](double c) {
      ++evals;
      double v = 0.0;
      for (int e = 0; e < ne; ++e) v += pt_->value(y[e], c - s[e]);
      return h * v;
    };
    auto slope = [&](double c) {
      double v = 0.0;
      for (int e = 0; e < ne; ++e) v += pt_->df(y[e], c - s[e]);
      return h * v;
    };
    auto curvature = [&](double c) {
      double v = 0.0;
      for (int e = 0; e < ne; ++e) v += pt_->dff(y[e], c - s[e]);
      return h * v;
    };

    // Guess from the feasible-looking flux f = beta(y) shifted to the constraint.
    double guess = 0.0;
    for (int e = 0; e < ne; ++e) guess += pt_->beta(y[e]) + s[e];
    guess /= ne;
    const double scale = 1.0 + std::abs(guess) + s.cwiseAbs().maxCoeff();
    const auto coarse = numeric::convex_scalar_min(total, guess, 0.1 * scale, 1e-3 * scale,
                                                   "lifted flux: scalar search");
    const double c = numeric::monotone_root(slope, curvature, coarse.x, 1e-14,
                                            "lifted flux: scalar refinement");
    LiftedEvaluation out;
    out.c = c;
    out.flux = Vec::Constant(ne, c) - s;
    out.value = total(c);
    out.evaluations = evals + coarse.evaluations;
    return out;
  }

  Vec gaps(const Vec& u, const Vec& p) const {
    const auto ev = evaluate(u, p);
    const Vec y = grid_.gradient() * u;
    Vec g(y.size());
    for (int e = 0; e < y.size(); ++e) g[e] = pt_->value(y[e], ev.flux[e]) - y[e] * ev.flux[e];
    return g;
  }

  double value(const Vec& u, const Vec& p) const override { return evaluate(u, p).value; }

  Vec grad_u(const Vec& u, const Vec& p) const override {
    const auto ev = evaluate(u, p);
    const Vec y = grid_.gradient() * u;
    Vec d(y.size());
    for (int e = 0; e < y.size(); ++e) d[e] = pt_->dy(y[e], ev.flux[e]);
    return grid_.h() * (grid_.gradient().transpose() * d);
  }

  Vec grad_p(const Vec& u, const Vec& p) const override { return grad_p_at(u, evaluate(u, p)); }

  Vec vector_field(const Vec& u) const override {
    check(u, "u");
    Vec f = grid_.gradient() * u;
    for (int e = 0; e < f.size(); ++e) f[e] = pt_->beta(f[e]);
    return grid_.gradient().transpose() * f;
  }

  // y + step G' beta(G y) = x by damped Newton; the Jacobian is tridiagonal SPD.
  Vec resolvent(double step, const Vec& x) const override {
    check(x, "x");
    const SpMat& g = grid_.gradient();
    auto residual = [&](const Vec& y) -> Vec { return y + step * vector_field(y) - x; };
    Vec y = x;
    Vec r = residual(y);
    const double scale = 1.0 + x.cwiseAbs().maxCoeff();
    for (int it = 0; it < 100; ++it) {
      if (r.cwiseAbs().maxCoeff() <= 1e-13 * scale) return y;
      const Vec gy = g * y;
      Vec w(gy.size());
      for (int e = 0; e < gy.size(); ++e) w[e] = pt_->dbeta(gy[e]);
      SpMat j = SpMat(g.transpose()) * w.asDiagonal() * g;
      j *= step;
      SpMat id(x.size(), x.size());
      id.setIdentity();
      j += id;
      const Vec dy = numeric::linear_solve(j, -r, true);
      double t = 1.0;
      const double r0 = r.norm();
      for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
        const Vec yn = y + t * dy;
        const Vec rn = residual(yn);
        if (rn.norm() <= (1.0 - 1e-4 * t) * r0 || ls == 39) {
          y = yn;
          r = rn;
          break;
        }
      }
    }
    if (r.cwiseAbs().maxCoeff() <= 1e-10 * scale) return y;
    throw Error(ErrorCode::no_convergence, "divergence_lifted resolvent: Newton budget exhausted");
  }

  std::optional<ConvexFunction> prox_part() const override { return phi_; }

  SelfDualLagrangian::Remainder remainder(const Vec& u, const Vec& p) const override {
    const auto ev = evaluate(u, p);
    SelfDualLagrangian::Remainder r;
    r.dp = grad_p_at(u, ev);
    if (phi_) {
      r.value = ev.value - phi_->value(u);
      r.du = Vec::Zero(u.size());
    } else {
      r.value = ev.value;
      r.du = grad_u(u, p);
    }
    return r;
  }

 private:
  void check(const Vec& v, const char* what) const {
    if (v.size() != grid_.size()) {
      throw Error(ErrorCode::dimension_mismatch, std::string("divergence_lifted: ") + what + " has " +
                                                     std::to_string(v.size()) + " entries, grid has " +
                                                     std::to_string(grid_.size()));
    }
  }

  // d f_e / d p_i = -h for e > i.
  Vec grad_p_at(const Vec& u, const LiftedEvaluation& ev) const {
    const double h = grid_.h();
    const Vec y = grid_.gradient() * u;
    const int ne = static_cast<int>(y.size());
    Vec out(grid_.size());
    double tail = 0.0;
    for (int e = ne - 1; e >= 1; --e) {
      tail += pt_->df(y[e], ev.flux[e]);
      out[e - 1] = -h * h * tail;
    }
    return out;
  }

  SpatialDiscretization grid_;
  std::shared_ptr<const Pointwise> pt_;
  std::optional<ConvexFunction> phi_;
};

const Lifted& as_lifted(const SelfDualLagrangian& l) {
  auto* p = dynamic_cast<const Lifted*>(&l.impl());
  if (!p) throw Error(ErrorCode::invalid_argument, "not a divergence_lifted Lagrangian: " + l.describe());
  return *p;
}

}  // namespace

SelfDualLagrangian lifted_divergence(const SpatialDiscretization& grid, ScalarPotential psi) {
  return SelfDualLagrangian(
      std::make_shared<Lifted>(grid, std::make_shared<PotentialPointwise>(std::move(psi))));
}

SelfDualLagrangian lifted_divergence(const SpatialDiscretization& grid, SelfDualLagrangian pointwise) {
  if (pointwise.u_dim() != 1) {
    throw Error(ErrorCode::dimension_mismatch, "divergence lifting needs a pointwise Lagrangian on R");
  }
  return SelfDualLagrangian(
      std::make_shared<Lifted>(grid, std::make_shared<GenericPointwise>(std::move(pointwise))));
}

LiftedEvaluation lifted_divergence_lagrangian(const SpatialDiscretization& grid,
                                              const SelfDualLagrangian& pointwise, const Vec& u,
                                              const Vec& p) {
  return as_lifted(lifted_divergence(grid, pointwise)).evaluate(u, p);
}

LiftedEvaluation lifted_evaluate(const SelfDualLagrangian& lifted, const Vec& u, const Vec& p) {
  return as_lifted(lifted).evaluate(u, p);
}

Vec lifted_pointwise_gaps(const SelfDualLagrangian& lifted, const Vec& u, const Vec& p) {
  return as_lifted(lifted).gaps(u, p);
}

}  // namespace sdspde
