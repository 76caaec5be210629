#include "sdspde/convex/lagrangian.hpp"

#include "sdspde/convex/lagrangian_impl.hpp"
#include "sdspde/util/numeric.hpp"
#include "sdspde/util/splitmix.hpp"

#include <cmath>
#include <sstream>

namespace sdspde {

using detail::LagrangianImpl;
using Kind = SelfDualLagrangian::Kind;

namespace {

void check_dim(const Vec& v, int n, const std::string& what) {
  if (v.size() != n) {
    std::ostringstream os;
    os << what << ": expected dimension " << n << ", got " << v.size();
    throw Error(ErrorCode::dimension_mismatch, os.str());
  }
}

MetricPtr or_identity(MetricPtr g, int n) {
  if (!g) return identity_metric(n);
  if (g->dim() != n) throw Error(ErrorCode::dimension_mismatch, "lagrangian: metric dimension");
  return g;
}

SpMat metric_inverse(const Metric& g) {
  auto m = g.inverse_sparse();
  if (!m) throw Error(ErrorCode::not_supported, "metric has no sparse inverse");
  return *m;
}

class Basic final : public LagrangianImpl {
 public:
  Basic(ConvexFunction phi, MetricPtr g)
      : LagrangianImpl(or_identity(std::move(g), phi.dim())), phi_(std::move(phi)) {}
  Kind kind() const override { return Kind::basic; }
  int dim() const override { return phi_.dim(); }
  std::string describe() const override { return "basic(" + phi_.describe() + ")"; }
  double value(const Vec& u, const Vec& p) const override {
    const double a = phi_.value(u);
    if (!std::isfinite(a)) return a;
    return a + conj(p);
  }
  Vec grad_u(const Vec& u, const Vec&) const override { return phi_.subgradient(u); }
  Vec grad_p(const Vec&, const Vec& p) const override {
    return metric_->apply(phi_.conjugate_argmax(metric_->apply(p)));
  }
  Vec vector_field(const Vec& u) const override { return metric_gradient(phi_, u, *metric_); }
  Vec resolvent(double s, const Vec& x) const override {
    return prox_in_metric(phi_, s, x, *metric_);
  }
  std::optional<ConvexFunction> prox_part() const override { return phi_; }
  SelfDualLagrangian::Remainder remainder(const Vec& u, const Vec& p) const override {
    Vec gp = metric_->apply(p);
    SelfDualLagrangian::Remainder r;
    r.value = phi_.conjugate(gp);
    r.du = Vec::Zero(u.size());
    r.dp = metric_->apply(phi_.conjugate_argmax(gp));
    return r;
  }
  const ConvexFunction& phi() const { return phi_; }

 private:
  double conj(const Vec& p) const {
    try {
      return phi_.conjugate(metric_->apply(p));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::unbounded_conjugate) return std::numeric_limits<double>::infinity();
      throw;
    }
  }
  ConvexFunction phi_;
};

class Skew final : public LagrangianImpl {
 public:
  Skew(ConvexFunction phi, SpMat gamma, MetricPtr g)
      : LagrangianImpl(or_identity(std::move(g), phi.dim())),
        phi_(std::move(phi)),
        gamma_(std::move(gamma)) {
    if (gamma_.rows() != phi_.dim() || gamma_.cols() != phi_.dim()) {
      throw Error(ErrorCode::dimension_mismatch, "skew_shifted: Gamma shape");
    }
    gamma_.makeCompressed();
    gamma_t_ = gamma_.transpose();
    SplitMix64 rng(7);
    const double scale = 1.0 + gamma_.norm();
    for (int k = 0; k < 3; ++k) {
      Vec u(dim());
      for (int i = 0; i < dim(); ++i) u[i] = rng.normal();
      const double q = metric_->inner(gamma_ * u, u);
      if (std::abs(q) > 1e-10 * scale * metric_->norm_sq(u)) {
        std::ostringstream os;
        os << "skew_shifted: Gamma is not skew for the metric (<Gamma u,u> = " << q << ")";
        throw Error(ErrorCode::invalid_argument, os.str());
      }
    }
  }
  Kind kind() const override { return Kind::skew_shifted; }
  int dim() const override { return phi_.dim(); }
  std::string describe() const override { return "skew_shifted(" + phi_.describe() + ")"; }
  double value(const Vec& u, const Vec& p) const override {
    const double a = phi_.value(u);
    if (!std::isfinite(a)) return a;
    try {
      return a + phi_.conjugate(metric_->apply(gamma_ * u + p));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::unbounded_conjugate) return std::numeric_limits<double>::infinity();
      throw;
    }
  }
  Vec grad_u(const Vec& u, const Vec& p) const override {
    return phi_.subgradient(u) + gamma_t_ * w(u, p);
  }
  Vec grad_p(const Vec& u, const Vec& p) const override { return w(u, p); }
  Vec vector_field(const Vec& u) const override {
    return metric_gradient(phi_, u, *metric_) - gamma_ * u;
  }
  Vec resolvent(double s, const Vec& x) const override {
    check_dim(x, dim(), "skew_shifted resolvent");
    const SpMat ginv = metric_inverse(*metric_);
    SpMat eye(dim(), dim());
    eye.setIdentity();
    Vec y = x;
    const double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 100; ++it) {
      Vec r = y + s * vector_field(y) - x;
      if (r.lpNorm<Eigen::Infinity>() <= 1e-13 * scale) return y;
      SpMat j = eye + s * (SpMat(ginv * phi_.hessian(y)) - gamma_);
      Vec d = numeric::linear_solve(j, r, false);
      double t = 1.0;
      const double r0 = r.norm();
      for (int ls = 0; ls < 30; ++ls) {
        Vec yt = y - t * d;
        if ((yt + s * vector_field(yt) - x).norm() <= (1.0 - 1e-4 * t) * r0 || ls == 29) {
          y = std::move(yt);
          break;
        }
        t *= 0.5;
      }
    }
    throw Error(ErrorCode::no_convergence, "skew_shifted resolvent: Newton budget exhausted");
  }
  Vec implicit_resolvent(double s, const Vec& x) const override {
    return prox_in_metric(phi_, s, x, *metric_);
  }
  Vec explicit_field(const Vec& u) const override { return -(gamma_ * u); }
  std::optional<ConvexFunction> prox_part() const override { return phi_; }
  SelfDualLagrangian::Remainder remainder(const Vec& u, const Vec& p) const override {
    Vec q = metric_->apply(gamma_ * u + p);
    SelfDualLagrangian::Remainder r;
    r.value = phi_.conjugate(q);
    Vec wv = metric_->apply(phi_.conjugate_argmax(q));
    r.du = gamma_t_ * wv;
    r.dp = std::move(wv);
    return r;
  }

 private:
  Vec w(const Vec& u, const Vec& p) const {
    return metric_->apply(phi_.conjugate_argmax(metric_->apply(gamma_ * u + p)));
  }
  ConvexFunction phi_;
  SpMat gamma_, gamma_t_;
};

class Noise final : public LagrangianImpl {
 public:
  Noise(Vec b, MetricPtr g) : LagrangianImpl(or_identity(std::move(g), b.size())), b_(std::move(b)) {}
  Kind kind() const override { return Kind::noise; }
  int dim() const override { return static_cast<int>(b_.size()); }
  std::string describe() const override { return "noise"; }
  double value(const Vec& a, const Vec& c) const override {
    check_dim(a, dim(), "noise");
    check_dim(c, dim(), "noise");
    return 0.5 * metric_->norm_sq(a - 2.0 * b_) + 0.5 * metric_->norm_sq(c) +
           2.0 * metric_->inner(c, b_);
  }
  Vec grad_u(const Vec& a, const Vec&) const override { return metric_->apply(a - 2.0 * b_); }
  Vec grad_p(const Vec&, const Vec& c) const override { return metric_->apply(c + 2.0 * b_); }
  Vec vector_field(const Vec& a) const override { return a - 2.0 * b_; }
  Vec resolvent(double s, const Vec& x) const override { return (x + 2.0 * s * b_) / (1.0 + s); }

 private:
  Vec b_;
};

class Boundary final : public LagrangianImpl {
 public:
  Boundary(Vec u0, MetricPtr g)
      : LagrangianImpl(or_identity(std::move(g), u0.size())), u0_(std::move(u0)) {}
  Kind kind() const override { return Kind::boundary; }
  int dim() const override { return static_cast<int>(u0_.size()); }
  std::string describe() const override { return "boundary"; }
  double value(const Vec& a, const Vec& b) const override {
    check_dim(a, dim(), "boundary");
    check_dim(b, dim(), "boundary");
    return 0.5 * metric_->norm_sq(a) + 0.5 * metric_->norm_sq(b) - 2.0 * metric_->inner(u0_, a) +
           metric_->norm_sq(u0_);
  }
  Vec grad_u(const Vec& a, const Vec&) const override { return metric_->apply(a - 2.0 * u0_); }
  Vec grad_p(const Vec&, const Vec& b) const override { return metric_->apply(b); }
  Vec vector_field(const Vec&) const override { return not_available("vector_field"); }
  Vec resolvent(double, const Vec&) const override { return not_available("resolvent"); }
  const Vec& center() const { return u0_; }

 private:
  Vec u0_;
};

class Moreau final : public LagrangianImpl {
 public:
  Moreau(SelfDualLagrangian inner, double lambda)
      : LagrangianImpl(inner.metric()), inner_(std::move(inner)), lambda_(lambda) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "moreau_regularize: lambda > 0");
    if (inner_.kind() == Kind::boundary) {
      throw Error(ErrorCode::not_supported, "moreau_regularize: boundary kind is not self-dual");
    }
    if (inner_.kind() == Kind::basic) {
      envelope_ = ConvexFunction::moreau_envelope(inner_.potential(), lambda_, metric_);
      flat_ = SelfDualLagrangian::basic(*envelope_, metric_);
    }
  }
  Kind kind() const override { return Kind::moreau; }
  int dim() const override { return inner_.u_dim(); }
  std::string describe() const override {
    std::ostringstream os;
    os << "moreau(" << inner_.describe() << ", lambda=" << lambda_ << ")";
    return os.str();
  }
  double value(const Vec& u, const Vec& p) const override {
    if (flat_) return flat_->value(u, p);
    Vec z = argmin_z(u, p);
    return inner_.value(z, p) + metric_->norm_sq(u - z) / (2.0 * lambda_) +
           0.5 * lambda_ * metric_->norm_sq(p);
  }
  Vec grad_u(const Vec& u, const Vec& p) const override {
    if (flat_) return flat_->grad_u(u, p);
    return metric_->apply(u - argmin_z(u, p)) / lambda_;
  }
  Vec grad_p(const Vec& u, const Vec& p) const override {
    if (flat_) return flat_->grad_p(u, p);
    return inner_.grad_p(argmin_z(u, p), p) + lambda_ * metric_->apply(p);
  }
  Vec vector_field(const Vec& u) const override { return (u - point(u)) / lambda_; }
  Vec resolvent(double s, const Vec& x) const override {
    if (flat_) return flat_->resolvent(s, x);
    return x + (s / (lambda_ + s)) * (inner_.resolvent(lambda_ + s, x) - x);
  }
  std::optional<ConvexFunction> prox_part() const override {
    if (flat_) return envelope_;
    return std::nullopt;
  }
  SelfDualLagrangian::Remainder remainder(const Vec& u, const Vec& p) const override {
    if (flat_) return flat_->remainder(u, p);
    return LagrangianImpl::remainder(u, p);
  }
  Vec point(const Vec& u) const { return inner_.resolvent(lambda_, u); }
  double lambda() const { return lambda_; }
  const SelfDualLagrangian& inner() const { return inner_; }

 private:
  Vec argmin_z(const Vec& u, const Vec& p) const {
    // Strongly convex in z; gradient steps with Barzilai-Borwein lengths.
    Vec z = u;
    auto grad = [&](const Vec& zz) -> Vec {
      return inner_.grad_u(zz, p) + metric_->apply(zz - u) / lambda_;
    };
    Vec g = grad(z);
    double alpha = lambda_ / (1.0 + (metric_->scalar_weight() ? *metric_->scalar_weight() : 1.0));
    const double scale = 1.0 + metric_->apply(u).lpNorm<Eigen::Infinity>() / lambda_;
    for (int it = 0; it < 20000; ++it) {
      if (g.lpNorm<Eigen::Infinity>() <= 1e-13 * scale) return z;
      Vec zn = z - alpha * g;
      Vec gn = grad(zn);
      Vec dz = zn - z, dg = gn - g;
      const double den = dz.dot(dg);
      if (den > 0.0) alpha = dz.squaredNorm() / den;
      z = std::move(zn);
      g = std::move(gn);
    }
    throw Error(ErrorCode::no_convergence, "moreau_regularize: inner minimization budget exhausted");
  }

  SelfDualLagrangian inner_;
  double lambda_;
  std::optional<ConvexFunction> envelope_;
  std::optional<SelfDualLagrangian> flat_;
};

template <class T>
const T& as(const LagrangianImpl& impl, const char* what) {
  auto* p = dynamic_cast<const T*>(&impl);
  if (!p) throw Error(ErrorCode::invalid_argument, std::string("lagrangian is not of kind ") + what);
  return *p;
}

}  // namespace

SelfDualLagrangian::SelfDualLagrangian(std::shared_ptr<const detail::LagrangianImpl> impl)
    : impl_(std::move(impl)) {}

SelfDualLagrangian SelfDualLagrangian::basic(ConvexFunction phi, MetricPtr metric) {
  return SelfDualLagrangian(std::make_shared<Basic>(std::move(phi), std::move(metric)));
}
SelfDualLagrangian SelfDualLagrangian::skew_shifted(ConvexFunction phi, SpMat gamma,
                                                    MetricPtr metric) {
  return SelfDualLagrangian(
      std::make_shared<Skew>(std::move(phi), std::move(gamma), std::move(metric)));
}
SelfDualLagrangian SelfDualLagrangian::noise(Vec b, MetricPtr metric) {
  return SelfDualLagrangian(std::make_shared<Noise>(std::move(b), std::move(metric)));
}
SelfDualLagrangian SelfDualLagrangian::boundary(Vec u0, MetricPtr metric) {
  return SelfDualLagrangian(std::make_shared<Boundary>(std::move(u0), std::move(metric)));
}

SelfDualLagrangian moreau_regularize(const SelfDualLagrangian& l, double lambda) {
  return SelfDualLagrangian(std::make_shared<Moreau>(l, lambda));
}

Kind SelfDualLagrangian::kind() const { return impl_->kind(); }
int SelfDualLagrangian::u_dim() const { return impl_->dim(); }
int SelfDualLagrangian::p_dim() const { return impl_->dim(); }
const MetricPtr& SelfDualLagrangian::metric() const { return impl_->metric(); }
std::string SelfDualLagrangian::describe() const { return impl_->describe(); }

double SelfDualLagrangian::value(const Vec& u, const Vec& p) const {
  check_dim(u, u_dim(), describe());
  check_dim(p, p_dim(), describe());
  return impl_->value(u, p);
}
double SelfDualLagrangian::pairing(const Vec& u, const Vec& p) const {
  check_dim(u, u_dim(), describe());
  check_dim(p, p_dim(), describe());
  return impl_->metric()->inner(u, p);
}
double SelfDualLagrangian::gap(const Vec& u, const Vec& p) const {
  return value(u, p) - pairing(u, p);
}
Vec SelfDualLagrangian::grad_u(const Vec& u, const Vec& p) const { return impl_->grad_u(u, p); }
Vec SelfDualLagrangian::grad_p(const Vec& u, const Vec& p) const { return impl_->grad_p(u, p); }
Vec SelfDualLagrangian::vector_field(const Vec& u) const {
  check_dim(u, u_dim(), describe());
  return impl_->vector_field(u);
}
Vec SelfDualLagrangian::resolvent(double step, const Vec& x) const {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "resolvent: step must be positive");
  check_dim(x, u_dim(), describe());
  return impl_->resolvent(step, x);
}
Vec SelfDualLagrangian::implicit_resolvent(double step, const Vec& x) const {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "resolvent: step must be positive");
  return impl_->implicit_resolvent(step, x);
}
Vec SelfDualLagrangian::explicit_field(const Vec& u) const { return impl_->explicit_field(u); }
std::optional<ConvexFunction> SelfDualLagrangian::prox_part() const { return impl_->prox_part(); }
SelfDualLagrangian::Remainder SelfDualLagrangian::remainder(const Vec& u, const Vec& p) const {
  return impl_->remainder(u, p);
}

double SelfDualLagrangian::moreau_lambda() const { return as<Moreau>(*impl_, "moreau").lambda(); }
Vec SelfDualLagrangian::moreau_point(const Vec& u) const {
  return as<Moreau>(*impl_, "moreau").point(u);
}
const SelfDualLagrangian& SelfDualLagrangian::moreau_inner() const {
  return as<Moreau>(*impl_, "moreau").inner();
}
const Vec& SelfDualLagrangian::boundary_center() const {
  return as<Boundary>(*impl_, "boundary").center();
}
const ConvexFunction& SelfDualLagrangian::potential() const {
  return as<Basic>(*impl_, "basic").phi();
}

const char* to_string(SelfDualLagrangian::Kind kind) {
  switch (kind) {
    case Kind::basic: return "basic";
    case Kind::skew_shifted: return "skew_shifted";
    case Kind::noise: return "noise";
    case Kind::boundary: return "boundary";
    case Kind::moreau: return "moreau";
    case Kind::divergence_lifted: return "divergence_lifted";
    case Kind::fitzpatrick: return "fitzpatrick";
  }
  return "unknown";
}

}  // namespace sdspde
