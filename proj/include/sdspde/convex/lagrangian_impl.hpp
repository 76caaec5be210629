#pragma once

#include "sdspde/convex/lagrangian.hpp"
#include "sdspde/error.hpp"

namespace sdspde::detail {

class LagrangianImpl {
 public:
  explicit LagrangianImpl(MetricPtr metric) : metric_(std::move(metric)) {}
  virtual ~LagrangianImpl() = default;

  virtual SelfDualLagrangian::Kind kind() const = 0;
  virtual int dim() const = 0;
  virtual std::string describe() const = 0;
  virtual double value(const Vec& u, const Vec& p) const = 0;
  virtual Vec grad_u(const Vec& u, const Vec& p) const = 0;
  virtual Vec grad_p(const Vec& u, const Vec& p) const = 0;
  virtual Vec vector_field(const Vec& u) const = 0;
  virtual Vec resolvent(double step, const Vec& x) const = 0;
  virtual Vec implicit_resolvent(double step, const Vec& x) const { return resolvent(step, x); }
  virtual Vec explicit_field(const Vec& u) const { return Vec::Zero(u.size()); }
  virtual std::optional<ConvexFunction> prox_part() const { return std::nullopt; }
  virtual SelfDualLagrangian::Remainder remainder(const Vec& u, const Vec& p) const {
    return {value(u, p), grad_u(u, p), grad_p(u, p)};
  }

  const MetricPtr& metric() const { return metric_; }

 protected:
  Vec not_available(const char* what) const {
    throw Error(ErrorCode::not_supported, describe() + ": " + what + " not available");
  }

  MetricPtr metric_;
};

}  // namespace sdspde::detail
