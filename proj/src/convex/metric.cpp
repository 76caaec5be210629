#include "sdspde/convex/metric.hpp"

#include "sdspde/error.hpp"
#include "sdspde/util/numeric.hpp"

#include <Eigen/SparseLU>

namespace sdspde {

namespace {

class ScaledIdentity final : public Metric {
 public:
  ScaledIdentity(int dim, double w) : dim_(dim), w_(w) {
    if (dim < 1 || !(w > 0.0)) throw Error(ErrorCode::invalid_argument, "metric: need dim>=1, w>0");
  }
  int dim() const override { return dim_; }
  Vec apply(const Vec& v) const override { return w_ * v; }
  Vec solve(const Vec& v) const override { return v / w_; }
  std::optional<SpMat> inverse_sparse() const override {
    SpMat m(dim_, dim_);
    m.setIdentity();
    return SpMat(m / w_);
  }
  std::optional<double> scalar_weight() const override { return w_; }
  std::string name() const override { return w_ == 1.0 ? "euclidean" : "scaled_identity"; }

 private:
  int dim_;
  double w_;
};

class InverseSparse final : public Metric {
 public:
  InverseSparse(SpMat ginv, std::string name) : ginv_(std::move(ginv)), name_(std::move(name)) {
    if (ginv_.rows() != ginv_.cols() || ginv_.rows() < 1) {
      throw Error(ErrorCode::invalid_argument, "metric: inverse must be square");
    }
    ginv_.makeCompressed();
    ldlt_.compute(ginv_);
    if (ldlt_.info() != Eigen::Success) {
      throw Error(ErrorCode::singular_solve, "metric: inverse not positive definite");
    }
  }
  int dim() const override { return static_cast<int>(ginv_.rows()); }
  Vec apply(const Vec& v) const override { return ldlt_.solve(v); }
  Vec solve(const Vec& v) const override { return ginv_ * v; }
  std::optional<SpMat> inverse_sparse() const override { return ginv_; }
  std::string name() const override { return name_; }

 private:
  SpMat ginv_;
  std::string name_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

}  // namespace

MetricPtr identity_metric(int dim) { return std::make_shared<ScaledIdentity>(dim, 1.0); }

MetricPtr scaled_identity_metric(int dim, double weight) {
  return std::make_shared<ScaledIdentity>(dim, weight);
}

MetricPtr inverse_sparse_metric(SpMat g_inverse, std::string name) {
  return std::make_shared<InverseSparse>(std::move(g_inverse), std::move(name));
}

}  // namespace sdspde
