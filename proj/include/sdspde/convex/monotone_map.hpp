#pragma once

#include "sdspde/convex/convex_function.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sdspde {

/// Declared coercivity: <A u, u> >= max(c1 |u|^alpha - m1, c2 |A u|^beta - m2).
struct Growth {
  double c1 = 0.0, c2 = 0.0, m1 = 0.0, m2 = 0.0, alpha = 2.0;
  double beta() const { return alpha / (alpha - 1.0); }
};

/// Single-valued monotone map on R^n (Euclidean pairing).
class MonotoneMap {
 public:
  enum class Kind { gradient, gradient_plus_skew, scalar_graph };

  static MonotoneMap gradient(ConvexFunction phi, Growth growth = {});
  /// grad phi + Gamma with Gamma antisymmetric.
  static MonotoneMap gradient_plus_skew(ConvexFunction phi, SpMat gamma, Growth growth = {});
  /// Piecewise-linear interpolant of samples q(v), q non-decreasing; linear extension outside.
  static MonotoneMap scalar_graph(std::vector<double> v, std::vector<double> q, Growth growth = {});

  Kind kind() const { return kind_; }
  int dim() const;
  const Growth& growth() const { return growth_; }
  Vec apply(const Vec& u) const;
  double apply_scalar(double u) const;
  /// Gradient kinds only.
  const ConvexFunction& potential() const;

  /// Graph samples (v_i, A v_i) of a one-dimensional map on [-range, range].
  void graph(int samples, double range, std::vector<double>& v, std::vector<double>& q) const;

 private:
  Kind kind_ = Kind::gradient;
  std::optional<ConvexFunction> phi_;
  SpMat gamma_;
  std::vector<double> gv_, gq_;
  Growth growth_;
};

struct MonotonicityReport {
  double min_inner = 0.0;  // min <A u - A v, u - v> over sampled pairs
  bool pass = false;
};
MonotonicityReport check_monotone(const MonotoneMap& a, int samples, double radius,
                                  std::uint64_t seed, double tol = 1e-10);

struct CoercivityReport {
  double worst_margin = 0.0;  // min of <Au,u> - max(...)
  bool pass = false;
};
CoercivityReport coercivity_certificate(const MonotoneMap& a, int samples, double radius,
                                        std::uint64_t seed, double tol = 1e-10);

}  // namespace sdspde
