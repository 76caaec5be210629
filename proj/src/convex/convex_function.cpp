#include "sdspde/convex/convex_function.hpp"

#include "convex_impl.hpp"
#include "sdspde/util/numeric.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

namespace sdspde {

using detail::ConvexImpl;
using detail::kInf;
using Kind = ConvexFunction::Kind;

namespace {

void check_dim(const Vec& x, int n, const char* what) {
  if (x.size() != n) {
    std::ostringstream os;
    os << what << ": expected dimension " << n << ", got " << x.size();
    throw Error(ErrorCode::dimension_mismatch, os.str());
  }
}

SpMat diagonal(const Vec& d) {
  SpMat m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

SpMat identity(int n) {
  SpMat m(n, n);
  m.setIdentity();
  return m;
}

/// Newton minimization of f(z) - <p,z> + |z - x|^2 / (2 step) (step = inf drops the last term).
Vec newton_on(const ConvexImpl& f, const Vec& p, const Vec* center, double step, Vec x0,
              const std::string& what) {
  numeric::Objective obj;
  const double inv = std::isfinite(step) ? 1.0 / step : 0.0;
  obj.value = [&](const Vec& z) {
    double v = f.value(z) - p.dot(z);
    if (center) v += 0.5 * inv * (z - *center).squaredNorm();
    return v;
  };
  obj.gradient = [&](const Vec& z) {
    Vec g = f.subgradient(z) - p;
    if (center) g += inv * (z - *center);
    return g;
  };
  obj.hessian = [&](const Vec& z) {
    SpMat h = f.hessian(z);
    if (center) h += inv * identity(f.dim());
    return h;
  };
  double scale = 1.0 + p.lpNorm<Eigen::Infinity>();
  if (center) scale += inv * center->lpNorm<Eigen::Infinity>();
  return numeric::minimize_newton(obj, std::move(x0), 200, 1e-12, scale, what).x;
}

/// SPD solver for (I + s Q) or Q with a small cache keyed by the shift.
class SpdCache {
 public:
  explicit SpdCache(SpMat q) : q_(std::move(q)) {}

  Vec solve_shifted(double s, const Vec& rhs) const {
    std::shared_ptr<const Eigen::SimplicialLDLT<SpMat>> f;
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(s);
      if (it != cache_.end()) f = it->second;
    }
    if (!f) {
      SpMat a = (s == 0.0) ? q_ : SpMat(identity(static_cast<int>(q_.rows())) + s * q_);
      auto fac = std::make_shared<Eigen::SimplicialLDLT<SpMat>>(a);
      if (fac->info() != Eigen::Success) {
        throw Error(ErrorCode::singular_solve, "quadratic_form: factorization failed");
      }
      f = fac;
      std::lock_guard<std::mutex> lock(mu_);
      if (cache_.size() > 16) cache_.clear();
      cache_.emplace(s, fac);
    }
    return f->solve(rhs);
  }

 private:
  SpMat q_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const Eigen::SimplicialLDLT<SpMat>>> cache_;
};

class Zero final : public ConvexImpl {
 public:
  explicit Zero(int n) : n_(n) {}
  Kind kind() const override { return Kind::zero; }
  int dim() const override { return n_; }
  bool smooth() const override { return true; }
  std::string describe() const override { return "zero"; }
  double value(const Vec& x) const override {
    check_dim(x, n_, "zero");
    return 0.0;
  }
  Vec subgradient(const Vec& x) const override { return Vec::Zero(x.size()); }
  SpMat hessian(const Vec&) const override { return SpMat(n_, n_); }
  double conjugate(const Vec& p) const override {
    return p.lpNorm<Eigen::Infinity>() <= 1e-14 ? 0.0 : kInf;
  }
  Vec conjugate_argmax(const Vec& p) const override {
    if (p.lpNorm<Eigen::Infinity>() > 1e-14) {
      throw Error(ErrorCode::unbounded_conjugate, "zero: conjugate is infinite off p=0");
    }
    return Vec::Zero(n_);
  }
  Vec prox(double, const Vec& x) const override { return x; }

 private:
  int n_;
};

class Quadratic final : public ConvexImpl {
 public:
  Quadratic(SpMat q, Vec c, double k) : q_(std::move(q)), c_(std::move(c)), k_(k), cache_(q_) {
    if (q_.rows() != q_.cols() || q_.rows() < 1) {
      throw Error(ErrorCode::invalid_argument, "quadratic_form: Q must be square");
    }
    if (c_.size() == 0) c_ = Vec::Zero(q_.rows());
    check_dim(c_, static_cast<int>(q_.rows()), "quadratic_form linear term");
    q_.makeCompressed();
    Eigen::SimplicialLDLT<SpMat> test(q_);
    invertible_ = test.info() == Eigen::Success && (test.vectorD().array() > 0.0).all();
  }
  Kind kind() const override { return Kind::quadratic_form; }
  int dim() const override { return static_cast<int>(q_.rows()); }
  bool smooth() const override { return true; }
  std::string describe() const override { return "quadratic_form"; }
  double value(const Vec& x) const override {
    check_dim(x, dim(), "quadratic_form");
    return 0.5 * x.dot(q_ * x) + c_.dot(x) + k_;
  }
  Vec subgradient(const Vec& x) const override { return q_ * x + c_; }
  SpMat hessian(const Vec&) const override { return q_; }
  double conjugate(const Vec& p) const override {
    Vec r = p - c_;
    return 0.5 * r.dot(solve_q(r)) - k_;
  }
  Vec conjugate_argmax(const Vec& p) const override { return solve_q(p - c_); }
  Vec prox(double s, const Vec& x) const override {
    check_dim(x, dim(), "quadratic_form prox");
    return cache_.solve_shifted(s, x - s * c_);
  }

 private:
  Vec solve_q(const Vec& r) const {
    check_dim(r, dim(), "quadratic_form conjugate");
    if (!invertible_) {
      throw Error(ErrorCode::unbounded_conjugate, "quadratic_form: singular Q");
    }
    return cache_.solve_shifted(0.0, r);
  }
  SpMat q_;
  Vec c_;
  double k_;
  bool invertible_ = false;
  SpdCache cache_;
};

class PowerNorm final : public ConvexImpl {
 public:
  PowerNorm(double alpha, Vec w) : a_(alpha), w_(std::move(w)) {
    if (!(alpha > 1.0)) throw Error(ErrorCode::invalid_argument, "power_norm: need alpha > 1");
    if (w_.size() < 1 || (w_.array() < 0.0).any()) {
      throw Error(ErrorCode::invalid_argument, "power_norm: weights must be non-negative");
    }
    b_ = a_ / (a_ - 1.0);
  }
  Kind kind() const override { return Kind::power_norm; }
  int dim() const override { return static_cast<int>(w_.size()); }
  bool smooth() const override { return true; }
  std::string describe() const override {
    std::ostringstream os;
    os << "power_norm(alpha=" << a_ << ")";
    return os.str();
  }
  double value(const Vec& x) const override {
    check_dim(x, dim(), "power_norm");
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += w_[i] * std::pow(std::abs(x[i]), a_);
    return s / a_;
  }
  Vec subgradient(const Vec& x) const override {
    check_dim(x, dim(), "power_norm");
    Vec g(dim());
    for (int i = 0; i < dim(); ++i) {
      g[i] = w_[i] * std::copysign(std::pow(std::abs(x[i]), a_ - 1.0), x[i]);
    }
    return g;
  }
  SpMat hessian(const Vec& x) const override {
    Vec d(dim());
    for (int i = 0; i < dim(); ++i) {
      double ax = std::max(std::abs(x[i]), a_ < 2.0 ? 1e-12 : 0.0);
      d[i] = (a_ == 2.0) ? w_[i] : w_[i] * (a_ - 1.0) * std::pow(ax, a_ - 2.0);
    }
    return diagonal(d);
  }
  double conjugate(const Vec& p) const override {
    check_dim(p, dim(), "power_norm conjugate");
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) {
      if (w_[i] == 0.0) {
        if (p[i] != 0.0) return kInf;
        continue;
      }
      s += std::pow(w_[i], 1.0 - b_) * std::pow(std::abs(p[i]), b_);
    }
    return s / b_;
  }
  Vec conjugate_argmax(const Vec& p) const override {
    check_dim(p, dim(), "power_norm conjugate");
    Vec x(dim());
    for (int i = 0; i < dim(); ++i) {
      if (w_[i] == 0.0) {
        if (p[i] != 0.0) throw Error(ErrorCode::unbounded_conjugate, "power_norm: zero weight");
        x[i] = 0.0;
        continue;
      }
      x[i] = std::copysign(std::pow(std::abs(p[i]) / w_[i], 1.0 / (a_ - 1.0)), p[i]);
    }
    return x;
  }
  Vec prox(double s, const Vec& x) const override {
    check_dim(x, dim(), "power_norm prox");
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) {
      const double ax = std::abs(x[i]);
      const double sw = s * w_[i];
      if (ax == 0.0 || sw == 0.0) {
        z[i] = x[i];
        continue;
      }
      if (a_ == 2.0) {
        z[i] = x[i] / (1.0 + sw);
        continue;
      }
      // t + sw t^{a-1} = |x| on [0, |x|].
      auto g = [&](double t) { return t + sw * std::pow(std::max(t, 0.0), a_ - 1.0) - ax; };
      auto dg = [&](double t) {
        return 1.0 + sw * (a_ - 1.0) * std::pow(std::max(t, 1e-300), a_ - 2.0);
      };
      double lo = 0.0, hi = ax;
      double t = ax / (1.0 + sw);
      for (int it = 0; it < 200; ++it) {
        double gt = g(t);
        if (gt > 0.0) hi = t; else lo = t;
        double tn = t - gt / dg(t);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) <= 1e-16 * (1.0 + ax)) {
          t = tn;
          break;
        }
        t = tn;
      }
      z[i] = std::copysign(t, x[i]);
    }
    return z;
  }

 private:
  double a_, b_;
  Vec w_;
};

class ShiftedQuadratic final : public ConvexImpl {
 public:
  ShiftedQuadratic(Vec c, double w) : c_(std::move(c)), w_(w) {
    if (!(w > 0.0) || c_.size() < 1) {
      throw Error(ErrorCode::invalid_argument, "shifted_quadratic: need weight > 0");
    }
  }
  Kind kind() const override { return Kind::shifted_quadratic; }
  int dim() const override { return static_cast<int>(c_.size()); }
  bool smooth() const override { return true; }
  std::string describe() const override { return "shifted_quadratic"; }
  double value(const Vec& x) const override {
    check_dim(x, dim(), "shifted_quadratic");
    return 0.5 * w_ * (x - c_).squaredNorm();
  }
  Vec subgradient(const Vec& x) const override { return w_ * (x - c_); }
  SpMat hessian(const Vec&) const override { return SpMat(w_ * identity(dim())); }
  double conjugate(const Vec& p) const override {
    check_dim(p, dim(), "shifted_quadratic conjugate");
    return p.dot(c_) + 0.5 * p.squaredNorm() / w_;
  }
  Vec conjugate_argmax(const Vec& p) const override { return c_ + p / w_; }
  Vec prox(double s, const Vec& x) const override { return (x + s * w_ * c_) / (1.0 + s * w_); }

 private:
  Vec c_;
  double w_;
};

class L1 final : public ConvexImpl {
 public:
  explicit L1(Vec w) : w_(std::move(w)) {
    if (w_.size() < 1 || (w_.array() < 0.0).any()) {
      throw Error(ErrorCode::invalid_argument, "l1_norm: weights must be non-negative");
    }
  }
  Kind kind() const override { return Kind::l1_norm; }
  int dim() const override { return static_cast<int>(w_.size()); }
  bool smooth() const override { return false; }
  std::string describe() const override { return "l1_norm"; }
  double value(const Vec& x) const override {
    check_dim(x, dim(), "l1_norm");
    return w_.dot(x.cwiseAbs());
  }
  Vec subgradient(const Vec& x) const override {
    Vec g(dim());
    for (int i = 0; i < dim(); ++i) g[i] = x[i] > 0 ? w_[i] : (x[i] < 0 ? -w_[i] : 0.0);
    return g;
  }
  double conjugate(const Vec& p) const override {
    check_dim(p, dim(), "l1_norm conjugate");
    for (int i = 0; i < dim(); ++i) {
      if (std::abs(p[i]) > w_[i] * (1.0 + 1e-12) + 1e-14) return kInf;
    }
    return 0.0;
  }
  Vec conjugate_argmax(const Vec& p) const override {
    if (!std::isfinite(conjugate(p))) {
      throw Error(ErrorCode::unbounded_conjugate, "l1_norm: |p| exceeds weight");
    }
    return Vec::Zero(dim());
  }
  Vec prox(double s, const Vec& x) const override {
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) {
      const double t = s * w_[i];
      z[i] = x[i] > t ? x[i] - t : (x[i] < -t ? x[i] + t : 0.0);
    }
    return z;
  }

 private:
  Vec w_;
};

class Tabulated final : public ConvexImpl {
 public:
  Tabulated(std::vector<double> x, std::vector<double> f) : x_(std::move(x)), f_(std::move(f)) {
    if (x_.size() < 2 || x_.size() != f_.size()) {
      throw Error(ErrorCode::invalid_argument, "tabulated_1d: need >= 2 matching samples");
    }
    s_.resize(x_.size() - 1);
    for (size_t i = 0; i + 1 < x_.size(); ++i) {
      if (!(x_[i + 1] > x_[i])) {
        throw Error(ErrorCode::invalid_argument, "tabulated_1d: grid must be increasing");
      }
      s_[i] = (f_[i + 1] - f_[i]) / (x_[i + 1] - x_[i]);
      if (i > 0 && s_[i] < s_[i - 1] - 1e-9 * (1.0 + std::abs(s_[i]))) {
        throw Error(ErrorCode::invalid_argument, "tabulated_1d: samples are not convex");
      }
      if (i > 0) s_[i] = std::max(s_[i], s_[i - 1]);
    }
  }
  Kind kind() const override { return Kind::tabulated_1d; }
  int dim() const override { return 1; }
  bool smooth() const override { return false; }
  std::string describe() const override { return "tabulated_1d"; }

  double value(const Vec& xv) const override {
    check_dim(xv, 1, "tabulated_1d");
    const double x = xv[0];
    if (x < x_.front() || x > x_.back()) return kInf;
    size_t i = segment(x);
    return f_[i] + s_[i] * (x - x_[i]);
  }
  Vec subgradient(const Vec& xv) const override {
    check_dim(xv, 1, "tabulated_1d");
    const double x = xv[0];
    if (x < x_.front() || x > x_.back()) {
      throw Error(ErrorCode::invalid_argument, "tabulated_1d: subgradient outside the grid");
    }
    auto it = std::lower_bound(x_.begin(), x_.end(), x);
    size_t i = static_cast<size_t>(it - x_.begin());
    double lo, hi;
    if (it != x_.end() && *it == x) {
      lo = i == 0 ? -kInf : s_[i - 1];
      hi = i + 1 == x_.size() ? kInf : s_[i];
    } else {
      lo = hi = s_[i - 1];
    }
    Vec g(1);
    g[0] = std::clamp(0.0, lo, hi);
    return g;
  }
  double conjugate(const Vec& p) const override {
    check_dim(p, 1, "tabulated_1d conjugate");
    size_t i = argmax_index(p[0]);
    return p[0] * x_[i] - f_[i];
  }
  Vec conjugate_argmax(const Vec& p) const override {
    check_dim(p, 1, "tabulated_1d conjugate");
    Vec x(1);
    x[0] = x_[argmax_index(p[0])];
    return x;
  }
  Vec prox(double s, const Vec& xv) const override {
    check_dim(xv, 1, "tabulated_1d prox");
    const double x = xv[0];
    // Node i owns x in [x_i + s s_{i-1}, x_i + s s_i]; segment i owns the gap after it.
    size_t lo = 0, hi = x_.size() - 1;
    while (lo < hi) {
      size_t mid = (lo + hi + 1) / 2;
      if (x_[mid] + s * s_[mid - 1] <= x) lo = mid; else hi = mid - 1;
    }
    Vec z(1);
    if (lo + 1 == x_.size() || x <= x_[lo] + s * s_[lo]) {
      z[0] = x_[lo];
    } else {
      z[0] = x - s * s_[lo];
    }
    return z;
  }

  std::vector<double> conjugate_sorted(const std::vector<double>& p) const {
    std::vector<double> out(p.size());
    size_t i = 0;
    for (size_t k = 0; k < p.size(); ++k) {
      if (k > 0 && p[k] < p[k - 1]) {
        throw Error(ErrorCode::invalid_argument, "conjugate_sorted: slopes must be sorted");
      }
      check_range(p[k]);
      while (i + 1 < x_.size() && s_[i] <= p[k]) ++i;
      out[k] = p[k] * x_[i] - f_[i];
    }
    return out;
  }

 private:
  size_t segment(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    size_t i = static_cast<size_t>(it - x_.begin());
    if (i == 0) return 0;
    return std::min(i - 1, s_.size() - 1);
  }
  void check_range(double p) const {
    const double eps0 = 1e-12 * (1.0 + std::abs(s_.front()));
    const double eps1 = 1e-12 * (1.0 + std::abs(s_.back()));
    if (p < s_.front() - eps0 || p > s_.back() + eps1) {
      std::ostringstream os;
      os << "tabulated_1d: slope " << p << " outside grid hull [" << s_.front() << ", "
         << s_.back() << "]; the sup escapes the declared grid";
      throw Error(ErrorCode::unbounded_conjugate, os.str());
    }
  }
  size_t argmax_index(double p) const {
    check_range(p);
    auto it = std::upper_bound(s_.begin(), s_.end(), p);
    return static_cast<size_t>(it - s_.begin());
  }

  std::vector<double> x_, f_, s_;
};

class Separable final : public ConvexImpl {
 public:
  Separable(ScalarPotential psi, Vec w) : psi_(std::move(psi)), w_(std::move(w)) {
    if (w_.size() < 1 || (w_.array() <= 0.0).any()) {
      throw Error(ErrorCode::invalid_argument, "separable: weights must be positive");
    }
  }
  Kind kind() const override { return Kind::separable; }
  int dim() const override { return static_cast<int>(w_.size()); }
  bool smooth() const override { return true; }
  std::string describe() const override { return "separable(" + psi_.name + ")"; }
  double value(const Vec& x) const override {
    check_dim(x, dim(), "separable");
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += w_[i] * psi_.value(x[i]);
    return s;
  }
  Vec subgradient(const Vec& x) const override {
    Vec g(dim());
    for (int i = 0; i < dim(); ++i) g[i] = w_[i] * psi_.derivative(x[i]);
    return g;
  }
  SpMat hessian(const Vec& x) const override {
    Vec d(dim());
    for (int i = 0; i < dim(); ++i) d[i] = w_[i] * psi_.second(x[i]);
    return diagonal(d);
  }
  double conjugate(const Vec& p) const override {
    Vec t = conjugate_argmax(p);
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += p[i] * t[i] - w_[i] * psi_.value(t[i]);
    return s;
  }
  Vec conjugate_argmax(const Vec& p) const override {
    check_dim(p, dim(), "separable conjugate");
    Vec t(dim());
    for (int i = 0; i < dim(); ++i) {
      const double r = p[i] / w_[i];
      t[i] = numeric::monotone_root([&](double y) { return psi_.derivative(y) - r; }, psi_.second,
                                    r, 1e-15, "separable conjugate");
    }
    return t;
  }
  Vec prox(double s, const Vec& x) const override {
    check_dim(x, dim(), "separable prox");
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) {
      const double sw = s * w_[i];
      z[i] = numeric::monotone_root([&](double y) { return y + sw * psi_.derivative(y) - x[i]; },
                                    [&](double y) { return 1.0 + sw * psi_.second(y); }, x[i],
                                    1e-15, "separable prox");
    }
    return z;
  }

 private:
  ScalarPotential psi_;
  Vec w_;
};

class Sum final : public ConvexImpl {
 public:
  Sum(ConvexFunction a, ConvexFunction b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.dim() != b_.dim()) throw Error(ErrorCode::dimension_mismatch, "sum: dimensions differ");
  }
  Kind kind() const override { return Kind::sum; }
  int dim() const override { return a_.dim(); }
  bool smooth() const override { return a_.is_smooth() && b_.is_smooth(); }
  std::string describe() const override { return "sum(" + a_.describe() + "," + b_.describe() + ")"; }
  double value(const Vec& x) const override { return a_.value(x) + b_.value(x); }
  Vec subgradient(const Vec& x) const override { return a_.subgradient(x) + b_.subgradient(x); }
  SpMat hessian(const Vec& x) const override { return a_.hessian(x) + b_.hessian(x); }
  double conjugate(const Vec& p) const override {
    Vec x = conjugate_argmax(p);
    return p.dot(x) - value(x);
  }
  Vec conjugate_argmax(const Vec& p) const override {
    require_smooth();
    check_dim(p, dim(), "sum conjugate");
    return newton_on(*this, p, nullptr, kInf, Vec::Zero(dim()), "sum conjugate");
  }
  Vec prox(double s, const Vec& x) const override {
    require_smooth();
    check_dim(x, dim(), "sum prox");
    return newton_on(*this, Vec::Zero(dim()), &x, s, x, "sum prox");
  }

 private:
  void require_smooth() const {
    if (!smooth()) throw Error(ErrorCode::not_supported, "sum: numeric routines need smooth terms");
  }
  ConvexFunction a_, b_;
};

class Precomposed final : public ConvexImpl {
 public:
  Precomposed(ConvexFunction outer, SpMat a) : outer_(std::move(outer)), a_(std::move(a)) {
    if (a_.rows() != outer_.dim()) {
      throw Error(ErrorCode::dimension_mismatch, "precomposed: map rows must match outer dim");
    }
    a_.makeCompressed();
    at_ = a_.transpose();
  }
  Kind kind() const override { return Kind::precomposed; }
  int dim() const override { return static_cast<int>(a_.cols()); }
  bool smooth() const override { return outer_.is_smooth(); }
  std::string describe() const override { return "precomposed(" + outer_.describe() + ")"; }
  double value(const Vec& x) const override {
    check_dim(x, dim(), "precomposed");
    return outer_.value(a_ * x);
  }
  Vec subgradient(const Vec& x) const override { return at_ * outer_.subgradient(a_ * x); }
  SpMat hessian(const Vec& x) const override {
    return SpMat(at_ * outer_.hessian(a_ * x) * a_);
  }
  double conjugate(const Vec& p) const override {
    Vec x = conjugate_argmax(p);
    return p.dot(x) - value(x);
  }
  Vec conjugate_argmax(const Vec& p) const override {
    require_smooth();
    check_dim(p, dim(), "precomposed conjugate");
    return newton_on(*this, p, nullptr, kInf, Vec::Zero(dim()), "precomposed conjugate");
  }
  Vec prox(double s, const Vec& x) const override {
    require_smooth();
    check_dim(x, dim(), "precomposed prox");
    return newton_on(*this, Vec::Zero(dim()), &x, s, x, "precomposed prox");
  }

 private:
  void require_smooth() const {
    if (!smooth()) {
      throw Error(ErrorCode::not_supported, "precomposed: numeric routines need a smooth outer");
    }
  }
  ConvexFunction outer_;
  SpMat a_, at_;
};

class Envelope final : public ConvexImpl {
 public:
  Envelope(ConvexFunction inner, double lambda, MetricPtr g)
      : inner_(std::move(inner)), lambda_(lambda), g_(std::move(g)) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "moreau_envelope: need lambda>0");
    if (!g_) g_ = identity_metric(inner_.dim());
    if (g_->dim() != inner_.dim()) {
      throw Error(ErrorCode::dimension_mismatch, "moreau_envelope: metric dimension");
    }
  }
  Kind kind() const override { return Kind::moreau_envelope; }
  int dim() const override { return inner_.dim(); }
  bool smooth() const override { return true; }
  std::string describe() const override {
    std::ostringstream os;
    os << "moreau_envelope(" << inner_.describe() << ", lambda=" << lambda_ << ")";
    return os.str();
  }
  Vec point(const Vec& x) const { return prox_in_metric(inner_, lambda_, x, *g_); }
  double value(const Vec& x) const override {
    check_dim(x, dim(), "moreau_envelope");
    Vec z = point(x);
    return inner_.value(z) + g_->norm_sq(x - z) / (2.0 * lambda_);
  }
  Vec subgradient(const Vec& x) const override {
    check_dim(x, dim(), "moreau_envelope");
    return g_->apply(x - point(x)) / lambda_;
  }
  double conjugate(const Vec& q) const override {
    check_dim(q, dim(), "moreau_envelope conjugate");
    return inner_.conjugate(q) + 0.5 * lambda_ * q.dot(g_->solve(q));
  }
  Vec conjugate_argmax(const Vec& q) const override {
    return inner_.conjugate_argmax(q) + lambda_ * g_->solve(q);
  }
  Vec prox(double s, const Vec& x) const override {
    check_dim(x, dim(), "moreau_envelope prox");
    if (auto w = g_->scalar_weight()) {
      const double t = s * *w;
      Vec z = prox_in_metric(inner_, lambda_ + t, x, *g_);
      return x + (t / (lambda_ + t)) * (z - x);
    }
    // Strongly convex smooth problem; gradient steps with Barzilai-Borwein lengths.
    Vec z = x, gz = subgradient(z) + (z - x) / s;
    double alpha = s / 2.0;
    for (int it = 0; it < 5000; ++it) {
      if (gz.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>() / s)) return z;
      Vec zn = z - alpha * gz;
      Vec gn = subgradient(zn) + (zn - x) / s;
      Vec dz = zn - z, dg = gn - gz;
      double den = dz.dot(dg);
      alpha = den > 0.0 ? dz.squaredNorm() / den : alpha;
      z = std::move(zn);
      gz = std::move(gn);
    }
    throw Error(ErrorCode::no_convergence, "moreau_envelope prox: budget exhausted");
  }

  const ConvexFunction& inner() const { return inner_; }
  double lambda() const { return lambda_; }
  const MetricPtr& metric() const { return g_; }

 private:
  ConvexFunction inner_;
  double lambda_;
  MetricPtr g_;
};

const Envelope& as_envelope(const ConvexImpl& impl) {
  auto* e = dynamic_cast<const Envelope*>(&impl);
  if (!e) throw Error(ErrorCode::invalid_argument, "not a moreau_envelope function");
  return *e;
}

}  // namespace

ScalarPotential arctan_flux_potential() {
  ScalarPotential p;
  p.name = "x+atan(x)";
  p.value = [](double y) { return 0.5 * y * y + y * std::atan(y) - 0.5 * std::log1p(y * y); };
  p.derivative = [](double y) { return y + std::atan(y); };
  p.second = [](double y) { return 1.0 + 1.0 / (1.0 + y * y); };
  return p;
}

ScalarPotential quadratic_potential() {
  ScalarPotential p;
  p.name = "x";
  p.value = [](double y) { return 0.5 * y * y; };
  p.derivative = [](double y) { return y; };
  p.second = [](double) { return 1.0; };
  return p;
}

ConvexFunction::ConvexFunction(std::shared_ptr<const detail::ConvexImpl> impl)
    : impl_(std::move(impl)) {}

ConvexFunction ConvexFunction::quadratic_form(SpMat q, Vec linear, double constant) {
  return ConvexFunction(std::make_shared<Quadratic>(std::move(q), std::move(linear), constant));
}
ConvexFunction ConvexFunction::power_norm(double alpha, Vec weights) {
  return ConvexFunction(std::make_shared<PowerNorm>(alpha, std::move(weights)));
}
ConvexFunction ConvexFunction::power_norm(double alpha, int dim, double weight) {
  return power_norm(alpha, Vec::Constant(dim, weight));
}
ConvexFunction ConvexFunction::shifted_quadratic(Vec center, double weight) {
  return ConvexFunction(std::make_shared<ShiftedQuadratic>(std::move(center), weight));
}
ConvexFunction ConvexFunction::l1_norm(Vec weights) {
  return ConvexFunction(std::make_shared<L1>(std::move(weights)));
}
ConvexFunction ConvexFunction::zero(int dim) { return ConvexFunction(std::make_shared<Zero>(dim)); }
ConvexFunction ConvexFunction::tabulated_1d(std::vector<double> grid, std::vector<double> values) {
  return ConvexFunction(std::make_shared<Tabulated>(std::move(grid), std::move(values)));
}
ConvexFunction ConvexFunction::separable(ScalarPotential psi, Vec weights) {
  return ConvexFunction(std::make_shared<Separable>(std::move(psi), std::move(weights)));
}
ConvexFunction ConvexFunction::sum(ConvexFunction a, ConvexFunction b) {
  return ConvexFunction(std::make_shared<Sum>(std::move(a), std::move(b)));
}
ConvexFunction ConvexFunction::precomposed(ConvexFunction outer, SpMat a) {
  return ConvexFunction(std::make_shared<Precomposed>(std::move(outer), std::move(a)));
}
ConvexFunction ConvexFunction::moreau_envelope(ConvexFunction inner, double lambda,
                                               MetricPtr metric) {
  return ConvexFunction(std::make_shared<Envelope>(std::move(inner), lambda, std::move(metric)));
}

ConvexFunction::Kind ConvexFunction::kind() const { return impl_->kind(); }
int ConvexFunction::dim() const { return impl_->dim(); }
bool ConvexFunction::is_smooth() const { return impl_->smooth(); }
std::string ConvexFunction::describe() const { return impl_->describe(); }
double ConvexFunction::value(const Vec& x) const { return impl_->value(x); }
Vec ConvexFunction::subgradient(const Vec& x) const { return impl_->subgradient(x); }
SpMat ConvexFunction::hessian(const Vec& x) const { return impl_->hessian(x); }
double ConvexFunction::conjugate(const Vec& p) const { return impl_->conjugate(p); }
Vec ConvexFunction::conjugate_argmax(const Vec& p) const { return impl_->conjugate_argmax(p); }
Vec ConvexFunction::prox(double step, const Vec& x) const {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "prox: step must be positive");
  return impl_->prox(step, x);
}

std::vector<double> ConvexFunction::conjugate_sorted(const std::vector<double>& slopes) const {
  auto* t = dynamic_cast<const Tabulated*>(impl_.get());
  if (!t) throw Error(ErrorCode::not_supported, "conjugate_sorted: tabulated_1d only");
  return t->conjugate_sorted(slopes);
}

const ConvexFunction& ConvexFunction::envelope_inner() const { return as_envelope(*impl_).inner(); }
double ConvexFunction::envelope_lambda() const { return as_envelope(*impl_).lambda(); }
const MetricPtr& ConvexFunction::envelope_metric() const { return as_envelope(*impl_).metric(); }

double fenchel_young_gap(const ConvexFunction& f, const Vec& u, const Vec& p) {
  const double fu = f.value(u);
  if (!std::isfinite(fu)) return kInf;
  double fs;
  try {
    fs = f.conjugate(p);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::unbounded_conjugate) return kInf;
    throw;
  }
  return fu + fs - u.dot(p);
}

Vec metric_gradient(const ConvexFunction& f, const Vec& x, const Metric& metric) {
  return metric.solve(f.subgradient(x));
}

Vec prox_in_metric(const ConvexFunction& f, double step, const Vec& x, const Metric& metric,
                   const NewtonOptions& opt) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "prox: step must be positive");
  if (auto w = metric.scalar_weight()) return f.prox(step / *w, x);
  if (f.kind() == Kind::moreau_envelope && f.envelope_metric().get() == &metric) {
    const double lam = f.envelope_lambda();
    Vec z = prox_in_metric(f.envelope_inner(), lam + step, x, metric, opt);
    return x + (step / (lam + step)) * (z - x);
  }
  if (!f.is_smooth()) {
    throw Error(ErrorCode::not_supported, "prox_in_metric: non-scalar metric needs smooth f");
  }
  auto ginv = metric.inverse_sparse();
  if (!ginv) throw Error(ErrorCode::not_supported, "prox_in_metric: metric lacks sparse inverse");
  // Root of R(z) = z - x + step G^{-1} grad f(z), Jacobian I + step G^{-1} Hess f.
  const int n = f.dim();
  SpMat eye(n, n);
  eye.setIdentity();
  Vec z = x;
  auto merit = [&](const Vec& zz) {
    return f.value(zz) + metric.norm_sq(zz - x) / (2.0 * step);
  };
  double mz = merit(z);
  const double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < opt.max_iters; ++it) {
    Vec r = z - x + step * (*ginv * f.subgradient(z));
    if (r.lpNorm<Eigen::Infinity>() <= opt.tol * scale) return z;
    SpMat j = eye + step * SpMat(*ginv * f.hessian(z));
    Vec d = -numeric::linear_solve(j, r, false);
    double t = 1.0;
    for (int ls = 0; ls < 40; ++ls) {
      Vec zt = z + t * d;
      double mt = merit(zt);
      if (std::isfinite(mt) && mt <= mz + 1e-12 * (1.0 + std::abs(mz))) {
        z = std::move(zt);
        mz = mt;
        break;
      }
      t *= 0.5;
      if (ls == 39) {
        z += t * d;
        mz = merit(z);
      }
    }
  }
  Vec r = z - x + step * (*ginv * f.subgradient(z));
  std::ostringstream os;
  os << "prox_in_metric: residual " << r.lpNorm<Eigen::Infinity>() << " after " << opt.max_iters
     << " Newton steps";
  throw Error(ErrorCode::no_convergence, os.str());
}

}  // namespace sdspde
