#pragma once

#include "sdspde/convex/convex_function.hpp"
#include "sdspde/error.hpp"

#include <limits>
#include <string>

namespace sdspde::detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class ConvexImpl {
 public:
  virtual ~ConvexImpl() = default;
  virtual ConvexFunction::Kind kind() const = 0;
  virtual int dim() const = 0;
  virtual bool smooth() const = 0;
  virtual std::string describe() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec subgradient(const Vec& x) const = 0;
  virtual SpMat hessian(const Vec&) const {
    throw Error(ErrorCode::not_supported, describe() + ": no Hessian for non-smooth kind");
  }
  virtual double conjugate(const Vec& p) const = 0;
  virtual Vec conjugate_argmax(const Vec& p) const = 0;
  virtual Vec prox(double step, const Vec& x) const = 0;
};

}  // namespace sdspde::detail
