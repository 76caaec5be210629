#include "sdspde/convex/duality.hpp"

#include "sdspde/convex/lagrangian_impl.hpp"
#include "sdspde/util/numeric.hpp"
#include "sdspde/util/splitmix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sdspde {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class Fitzpatrick final : public detail::LagrangianImpl {
 public:
  Fitzpatrick(const MonotoneMap& a, int samples, double range)
      : LagrangianImpl(identity_metric(1)), a_(a) {
    a.graph(samples, range, v_, q_);
    if (v_.empty()) throw Error(ErrorCode::empty_graph, "fitzpatrick: no graph samples");
  }
  SelfDualLagrangian::Kind kind() const override { return SelfDualLagrangian::Kind::fitzpatrick; }
  int dim() const override { return 1; }
  std::string describe() const override { return "fitzpatrick"; }
  double value(const Vec& u, const Vec& p) const override {
    double best = kNegInf;
    for (size_t i = 0; i < v_.size(); ++i) {
      best = std::max(best, u[0] * q_[i] + v_[i] * p[0] - v_[i] * q_[i]);
    }
    return best;
  }
  Vec grad_u(const Vec&, const Vec&) const override { return not_available("grad_u"); }
  Vec grad_p(const Vec&, const Vec&) const override { return not_available("grad_p"); }
  Vec vector_field(const Vec& u) const override { return a_.apply(u); }
  Vec resolvent(double, const Vec&) const override { return not_available("resolvent"); }

 private:
  MonotoneMap a_;
  std::vector<double> v_, q_;
};

double safe(const std::function<double(const Vec&)>& h, const Vec& z) {
  double v;
  try {
    v = h(z);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::unbounded_conjugate || e.code() == ErrorCode::invalid_argument) {
      return kNegInf;
    }
    throw;
  }
  return std::isnan(v) ? kNegInf : v;
}

struct Box {
  double r;
  Vec clamp(Vec z) const { return z.cwiseMax(-r).cwiseMin(r); }
};

/// Finite-difference Newton ascent. Returns false if the function is not
/// locally smooth enough for the finite-difference model.
bool fd_newton(const std::function<double(const Vec&)>& h, Vec& z, double& hz, const Box& box,
               int& evals) {
  const int n = static_cast<int>(z.size());
  for (int it = 0; it < 60; ++it) {
    const double delta = 1e-4 * std::max(1.0, z.lpNorm<Eigen::Infinity>());
    Vec g(n);
    Eigen::MatrixXd hess(n, n);
    Vec fp(n), fm(n);
    for (int i = 0; i < n; ++i) {
      Vec e = z;
      e[i] += delta;
      fp[i] = safe(h, e);
      e[i] -= 2.0 * delta;
      fm[i] = safe(h, e);
      evals += 2;
      if (!std::isfinite(fp[i]) || !std::isfinite(fm[i])) return false;
      g[i] = (fp[i] - fm[i]) / (2.0 * delta);
      hess(i, i) = (fp[i] - 2.0 * hz + fm[i]) / (delta * delta);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Vec e = z;
        e[i] += delta;
        e[j] += delta;
        const double pp = safe(h, e);
        e[j] -= 2.0 * delta;
        const double pm = safe(h, e);
        e[i] -= 2.0 * delta;
        const double mm = safe(h, e);
        e[j] += 2.0 * delta;
        const double mp = safe(h, e);
        evals += 4;
        if (!std::isfinite(pp + pm + mm + mp)) return false;
        hess(i, j) = hess(j, i) = (pp - pm - mp + mm) / (4.0 * delta * delta);
      }
    }
    if (g.lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + std::abs(hz))) return true;
    Eigen::MatrixXd neg = -hess;
    double mu = 0.0;
    Vec d;
    for (int k = 0; k < 40; ++k) {
      Eigen::LLT<Eigen::MatrixXd> llt(neg + mu * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        d = llt.solve(g);
        break;
      }
      mu = std::max(1e-8, mu * 10.0);
    }
    if (d.size() == 0) return false;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Vec zt = box.clamp(z + t * d);
      const double ht = safe(h, zt);
      ++evals;
      if (ht >= hz + 1e-4 * t * g.dot(d) || (ht >= hz && t < 1e-6)) {
        moved = ht > hz || (zt - z).lpNorm<Eigen::Infinity>() < 1e-14;
        z = std::move(zt);
        hz = ht;
        break;
      }
      t *= 0.5;
    }
    if (!moved) return false;
  }
  return false;
}

void coordinate_sweeps(const std::function<double(const Vec&)>& h, Vec& z, double& hz,
                       const Box& box, int& evals) {
  const int n = static_cast<int>(z.size());
  for (int sweep = 0; sweep < 400; ++sweep) {
    const double before = hz;
    for (int i = 0; i < n; ++i) {
      auto line = [&](double t) {
        Vec e = z;
        e[i] = t;
        return -safe(h, e);
      };
      numeric::ScalarMin m = numeric::golden_section(line, -box.r, box.r, 1e-10 * box.r);
      evals += m.evaluations;
      if (-m.value >= hz) {
        z[i] = m.x;
        hz = -m.value;
      }
    }
    if (hz - before <= 1e-15 * (1.0 + std::abs(hz))) break;
  }
}

void compass_polish(const std::function<double(const Vec&)>& h, Vec& z, double& hz,
                    const Box& box, int& evals) {
  const int n = static_cast<int>(z.size());
  double step = 1e-3 * std::max(1.0, z.lpNorm<Eigen::Infinity>());
  int moves = 0;
  while (step > 1e-11 && moves < 20000) {
    bool improved = false;
    for (int i = 0; i < n && !improved; ++i) {
      for (double s : {step, -step}) {
        Vec e = z;
        e[i] += s;
        e = box.clamp(e);
        const double he = safe(h, e);
        ++evals;
        if (he > hz) {
          z = std::move(e);
          hz = he;
          improved = true;
          ++moves;
          break;
        }
      }
    }
    if (!improved) step *= 0.25;
  }
}

}  // namespace

SupResult brute_force_sup(const std::function<double(const Vec&)>& h, Vec start, double radius) {
  Box box{radius};
  SupResult res;
  Vec z = box.clamp(std::move(start));
  double hz = safe(h, z);
  res.evaluations = 1;
  if (!std::isfinite(hz)) {
    // Look for a finite starting point along the coordinate axes.
    z.setZero();
    hz = safe(h, z);
  }
  Vec z0 = z;
  double h0 = hz;
  bool ok = std::isfinite(hz) && fd_newton(h, z, hz, box, res.evaluations);
  if (!ok) {
    if (!std::isfinite(hz) || hz < h0) {
      z = z0;
      hz = h0;
    }
    coordinate_sweeps(h, z, hz, box, res.evaluations);
  }
  compass_polish(h, z, hz, box, res.evaluations);
  res.escaped = (z.cwiseAbs().array() >= 0.99 * radius).any();
  res.argmax = std::move(z);
  res.value = hz;
  return res;
}

SupResult brute_force_conjugate(const SelfDualLagrangian& l, const Vec& q1, const Vec& q2,
                                double radius) {
  const int n = l.u_dim();
  const Metric& g = *l.metric();
  Vec gq1 = g.apply(q1), gq2 = g.apply(q2);
  auto h = [&](const Vec& z) {
    Vec v = z.head(n), q = z.tail(n);
    const double lv = l.value(v, q);
    if (!std::isfinite(lv)) return kNegInf;
    return v.dot(gq1) + q.dot(gq2) - lv;
  };
  return brute_force_sup(h, Vec::Zero(2 * n), radius);
}

double fitzpatrick(const MonotoneMap& a, double u, double p, int graph_samples, double range) {
  if (graph_samples < 1) throw Error(ErrorCode::empty_graph, "fitzpatrick: no graph samples");
  std::vector<double> v, q;
  a.graph(graph_samples, range, v, q);
  if (v.empty()) throw Error(ErrorCode::empty_graph, "fitzpatrick: no graph samples");
  double best = kNegInf;
  for (size_t i = 0; i < v.size(); ++i) best = std::max(best, u * q[i] + v[i] * p - v[i] * q[i]);
  return best;
}

SelfDualLagrangian fitzpatrick_lagrangian(const MonotoneMap& a, int graph_samples, double range) {
  return SelfDualLagrangian(std::make_shared<Fitzpatrick>(a, graph_samples, range));
}

double hamiltonian(const SelfDualLagrangian& l, const Vec& u, const Vec& v) {
  if (u.size() != l.u_dim() || v.size() != l.u_dim()) {
    throw Error(ErrorCode::dimension_mismatch, "hamiltonian: dimensions");
  }
  if (l.kind() == SelfDualLagrangian::Kind::basic) {
    const ConvexFunction& phi = l.potential();
    const double fu = phi.value(u);
    if (!std::isfinite(fu)) return kNegInf;
    return phi.value(v) - fu;
  }
  const Metric& g = *l.metric();
  Vec gv = g.apply(v);
  auto h = [&](const Vec& p) {
    const double lv = l.value(u, p);
    if (!std::isfinite(lv)) return kNegInf;
    return p.dot(gv) - lv;
  };
  const double radius = 20.0 * (1.0 + std::max(u.lpNorm<Eigen::Infinity>(), v.lpNorm<Eigen::Infinity>()));
  SupResult r = brute_force_sup(h, Vec::Zero(u.size()), radius);
  if (r.escaped) throw Error(ErrorCode::unbounded_sup, "hamiltonian: sup escapes the search box");
  return r.value;
}

SelfDualityReport check_self_duality(const SelfDualLagrangian& l, int sample_count, double tol,
                                     const SelfDualityOptions& opt) {
  const int n = l.u_dim();
  if (n > 4) throw Error(ErrorCode::not_supported, "check_self_duality: dimension above 4");
  SplitMix64 rng(opt.seed);
  SelfDualityReport rep;
  rep.lagrangian = l.describe();
  rep.tol = tol;
  const bool boundary = l.kind() == SelfDualLagrangian::Kind::boundary;
  for (int s = 0; s < sample_count; ++s) {
    Vec u(n), p(n);
    for (int i = 0; i < n; ++i) u[i] = rng.uniform(-opt.sample_radius, opt.sample_radius);
    for (int i = 0; i < n; ++i) p[i] = rng.uniform(-opt.sample_radius, opt.sample_radius);
    const double radius =
        opt.box_scale * (1.0 + std::max(u.lpNorm<Eigen::Infinity>(), p.lpNorm<Eigen::Infinity>()));
    double target, conj;
    SupResult r;
    if (boundary) {
      target = l.value(u, p);
      r = brute_force_conjugate(l, -u, p, radius);
    } else {
      target = l.value(u, p);
      r = brute_force_conjugate(l, p, u, radius);
    }
    conj = r.value;
    double diff = std::abs(conj - target);
    if (r.escaped) {
      ++rep.escaped;
      if (opt.throw_on_escape) {
        std::ostringstream os;
        os << "check_self_duality: sup escaped the box of radius " << radius;
        throw Error(ErrorCode::grid_too_coarse, os.str());
      }
      diff = std::numeric_limits<double>::infinity();
    }
    if (rep.worst_u.size() == 0 || diff > rep.max_abs_diff) {
      rep.max_abs_diff = diff;
      rep.worst_u = u;
      rep.worst_p = p;
    }
    ++rep.samples;
  }
  rep.pass = rep.escaped == 0 && rep.max_abs_diff <= tol;
  return rep;
}

}  // namespace sdspde
