#include "sdspde/util/numeric.hpp"

#include "sdspde/error.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <limits>
#include <sstream>

namespace sdspde::numeric {

namespace {
constexpr int kDenseLimit = 96;
}

Vec linear_solve(const SpMat& a, const Vec& b, bool symmetric_positive) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw Error(ErrorCode::dimension_mismatch, "linear_solve: shape mismatch");
  }
  Vec x;
  if (a.rows() <= kDenseLimit) {
    Eigen::MatrixXd d(a);
    if (symmetric_positive) {
      Eigen::LLT<Eigen::MatrixXd> llt(d);
      if (llt.info() == Eigen::Success) {
        x = llt.solve(b);
      }
    }
    if (x.size() == 0) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(d);
      x = lu.solve(b);
    }
  } else {
    if (symmetric_positive) {
      Eigen::SimplicialLDLT<SpMat> ldlt(a);
      if (ldlt.info() == Eigen::Success) {
        x = ldlt.solve(b);
      }
    }
    if (x.size() == 0) {
      Eigen::SparseLU<SpMat> lu;
      lu.analyzePattern(a);
      lu.factorize(a);
      if (lu.info() != Eigen::Success) {
        throw Error(ErrorCode::singular_solve, "sparse LU factorization failed");
      }
      x = lu.solve(b);
    }
  }
  if (!x.allFinite()) {
    throw Error(ErrorCode::singular_solve, "linear system produced non-finite solution");
  }
  return x;
}

NewtonResult minimize_newton(const Objective& obj, Vec x, int max_iters, double tol, double scale,
                             const std::string& what) {
  const int n = static_cast<int>(x.size());
  double fx = obj.value(x);
  Vec g = obj.gradient(x);
  double mu = 0.0;
  SpMat eye(n, n);
  eye.setIdentity();
  NewtonResult res;
  for (int it = 0; it < max_iters; ++it) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    res.gradient_norm = gnorm;
    if (gnorm <= tol * scale) {
      res.x = std::move(x);
      res.iterations = it;
      return res;
    }
    SpMat h = obj.hessian(x);
    Vec d;
    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      SpMat hm = h;
      if (mu > 0.0) hm += mu * eye;
      try {
        d = -linear_solve(hm, g, obj.hessian_spd);
      } catch (const Error&) {
        mu = std::max(1e-12, mu * 10.0);
        continue;
      }
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        // Not a descent direction: fall back toward gradient descent.
        mu = std::max(1e-10 * (1.0 + h.norm()), mu * 10.0);
        continue;
      }
      double t = 1.0;
      for (int ls = 0; ls < 50; ++ls) {
        Vec xt = x + t * d;
        double ft = obj.value(xt);
        if (std::isfinite(ft) && ft <= fx + 1e-4 * t * slope) {
          x = std::move(xt);
          // Values at the optimum may be flat in double precision; accept any
          // non-increase once the step is tiny.
          fx = ft;
          accepted = true;
          break;
        }
        if (std::isfinite(ft) && std::abs(ft - fx) <= 1e-15 * (1.0 + std::abs(fx)) &&
            t * d.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
          x = std::move(xt);
          fx = ft;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (accepted) {
        mu = (t == 1.0) ? mu * 0.1 : mu;
        if (mu < 1e-14) mu = 0.0;
      } else {
        mu = std::max(1e-10 * (1.0 + h.norm()), mu * 10.0);
      }
    }
    if (!accepted) {
      break;
    }
    g = obj.gradient(x);
  }
  const double gnorm = g.lpNorm<Eigen::Infinity>();
  if (gnorm <= tol * scale * 100.0) {
    // Line search stalled at the floating-point floor just outside tolerance.
    res.x = std::move(x);
    res.iterations = max_iters;
    res.gradient_norm = gnorm;
    return res;
  }
  std::ostringstream os;
  os << what << ": Newton stopped with gradient residual " << gnorm << " (tolerance " << tol * scale
     << ")";
  throw Error(ErrorCode::no_convergence, os.str());
}

double monotone_root(const std::function<double(double)>& g,
                     const std::function<double(double)>& dg, double guess, double tol,
                     const std::string& what) {
  double lo = guess, hi = guess;
  double glo = g(lo), ghi = glo;
  if (glo == 0.0) return guess;
  double step = std::max(1.0, std::abs(guess));
  if (glo < 0.0) {
    for (int i = 0; i < 200 && ghi < 0.0; ++i) {
      lo = hi;
      glo = ghi;
      hi += step;
      step *= 2.0;
      ghi = g(hi);
    }
  } else {
    for (int i = 0; i < 200 && glo > 0.0; ++i) {
      hi = lo;
      ghi = glo;
      lo -= step;
      step *= 2.0;
      glo = g(lo);
    }
  }
  if (!(glo <= 0.0 && ghi >= 0.0)) {
    throw Error(ErrorCode::no_convergence, what + ": could not bracket root");
  }
  double x = (glo == ghi) ? lo : lo - glo * (hi - lo) / (ghi - glo);
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double gx = g(x);
    if (gx == 0.0) return x;
    if (gx < 0.0) lo = x; else hi = x;
    double d = dg ? dg(x) : 0.0;
    double xn = (d > 0.0) ? x - gx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= tol * (1.0 + std::abs(x)) || hi - lo <= tol * (1.0 + std::abs(x))) {
      return xn;
    }
    x = xn;
  }
  throw Error(ErrorCode::no_convergence, what + ": root iteration budget exhausted");
}

ScalarMin golden_section(const std::function<double(double)>& f, double a, double b, double xtol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  int evals = 2;
  while (b - a > xtol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
    ++evals;
    if (evals > 400) break;
  }
  ScalarMin out;
  if (fc <= fd) {
    out.x = c;
    out.value = fc;
  } else {
    out.x = d;
    out.value = fd;
  }
  out.evaluations = evals;
  return out;
}

ScalarMin convex_scalar_min(const std::function<double(double)>& f, double guess, double scale,
                            double xtol, const std::string& what) {
  double step = std::max(scale, 1e-8);
  double a = guess - step, m = guess, b = guess + step;
  double fa = f(a), fm = f(m), fb = f(b);
  int evals = 3;
  // Expand until m is bracketed by larger values.
  for (int i = 0; i < 200 && !(fm <= fa && fm <= fb); ++i) {
    if (fa < fm) {
      b = m;
      fb = fm;
      m = a;
      fm = fa;
      step *= 2.0;
      a = m - step;
      fa = f(a);
    } else {
      a = m;
      fa = fm;
      m = b;
      fm = fb;
      step *= 2.0;
      b = m + step;
      fb = f(b);
    }
    ++evals;
  }
  if (!(fm <= fa && fm <= fb)) {
    throw Error(ErrorCode::no_convergence, what + ": scalar minimum not bracketed");
  }
  ScalarMin gs = golden_section(f, a, b, xtol);
  gs.evaluations += evals;
  return gs;
}

}  // namespace sdspde::numeric
