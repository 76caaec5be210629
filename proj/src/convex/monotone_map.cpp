#include "sdspde/convex/monotone_map.hpp"

#include "sdspde/error.hpp"
#include "sdspde/util/splitmix.hpp"

#include <algorithm>
#include <cmath>

namespace sdspde {

MonotoneMap MonotoneMap::gradient(ConvexFunction phi, Growth growth) {
  MonotoneMap m;
  m.kind_ = Kind::gradient;
  m.phi_ = std::move(phi);
  m.growth_ = growth;
  return m;
}

MonotoneMap MonotoneMap::gradient_plus_skew(ConvexFunction phi, SpMat gamma, Growth growth) {
  if (gamma.rows() != phi.dim() || gamma.cols() != phi.dim()) {
    throw Error(ErrorCode::dimension_mismatch, "gradient_plus_skew: Gamma shape");
  }
  SpMat sym = SpMat(gamma + SpMat(gamma.transpose()));
  if (sym.norm() > 1e-12 * (1.0 + gamma.norm())) {
    throw Error(ErrorCode::invalid_argument, "gradient_plus_skew: Gamma must be antisymmetric");
  }
  MonotoneMap m;
  m.kind_ = Kind::gradient_plus_skew;
  m.phi_ = std::move(phi);
  m.gamma_ = std::move(gamma);
  m.growth_ = growth;
  return m;
}

MonotoneMap MonotoneMap::scalar_graph(std::vector<double> v, std::vector<double> q, Growth growth) {
  if (v.empty() || v.size() != q.size()) {
    throw Error(ErrorCode::empty_graph, "scalar_graph: need matching non-empty samples");
  }
  for (size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1]) || q[i] < q[i - 1]) {
      throw Error(ErrorCode::invalid_argument, "scalar_graph: samples must be increasing");
    }
  }
  MonotoneMap m;
  m.kind_ = Kind::scalar_graph;
  m.gv_ = std::move(v);
  m.gq_ = std::move(q);
  m.growth_ = growth;
  return m;
}

int MonotoneMap::dim() const { return kind_ == Kind::scalar_graph ? 1 : phi_->dim(); }

const ConvexFunction& MonotoneMap::potential() const {
  if (!phi_) throw Error(ErrorCode::invalid_argument, "scalar_graph map has no potential");
  return *phi_;
}

double MonotoneMap::apply_scalar(double u) const {
  if (kind_ != Kind::scalar_graph) {
    Vec x(1);
    x[0] = u;
    return apply(x)[0];
  }
  if (gv_.size() == 1) return gq_[0];
  auto it = std::upper_bound(gv_.begin(), gv_.end(), u);
  size_t i = static_cast<size_t>(it - gv_.begin());
  i = std::clamp<size_t>(i, 1, gv_.size() - 1);
  const double t = (u - gv_[i - 1]) / (gv_[i] - gv_[i - 1]);
  return gq_[i - 1] + t * (gq_[i] - gq_[i - 1]);
}

Vec MonotoneMap::apply(const Vec& u) const {
  if (u.size() != dim()) throw Error(ErrorCode::dimension_mismatch, "MonotoneMap::apply");
  switch (kind_) {
    case Kind::gradient: return phi_->subgradient(u);
    case Kind::gradient_plus_skew: return phi_->subgradient(u) + gamma_ * u;
    case Kind::scalar_graph: {
      Vec r(1);
      r[0] = apply_scalar(u[0]);
      return r;
    }
  }
  return Vec();
}

void MonotoneMap::graph(int samples, double range, std::vector<double>& v,
                        std::vector<double>& q) const {
  if (dim() != 1) throw Error(ErrorCode::dimension_mismatch, "graph: one-dimensional maps only");
  v.clear();
  q.clear();
  if (samples < 1) return;
  if (kind_ == Kind::scalar_graph && samples >= static_cast<int>(gv_.size())) {
    v = gv_;
    q = gq_;
    return;
  }
  for (int i = 0; i < samples; ++i) {
    const double x = samples == 1 ? 0.0 : -range + 2.0 * range * i / (samples - 1);
    v.push_back(x);
    q.push_back(apply_scalar(x));
  }
}

namespace {
Vec sample(SplitMix64& rng, int n, double radius) {
  Vec u(n);
  const double r = radius * rng.uniform();
  for (int i = 0; i < n; ++i) u[i] = r * rng.uniform(-1.0, 1.0);
  return u;
}
}  // namespace

MonotonicityReport check_monotone(const MonotoneMap& a, int samples, double radius,
                                  std::uint64_t seed, double tol) {
  SplitMix64 rng(seed);
  MonotonicityReport rep;
  rep.min_inner = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vec u = sample(rng, a.dim(), radius), v = sample(rng, a.dim(), radius);
    rep.min_inner = std::min(rep.min_inner, (a.apply(u) - a.apply(v)).dot(u - v));
  }
  rep.pass = rep.min_inner >= -tol;
  return rep;
}

CoercivityReport coercivity_certificate(const MonotoneMap& a, int samples, double radius,
                                        std::uint64_t seed, double tol) {
  SplitMix64 rng(seed);
  const Growth& g = a.growth();
  CoercivityReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vec u = sample(rng, a.dim(), radius);
    Vec au = a.apply(u);
    const double lhs = au.dot(u);
    const double rhs = std::max(g.c1 * std::pow(u.norm(), g.alpha) - g.m1,
                                g.c2 * std::pow(au.norm(), g.beta()) - g.m2);
    rep.worst_margin = std::min(rep.worst_margin, (lhs - rhs) + tol * (1.0 + std::abs(lhs)));
  }
  rep.pass = rep.worst_margin >= 0.0;
  return rep;
}

}  // namespace sdspde
