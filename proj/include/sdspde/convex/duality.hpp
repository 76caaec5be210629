#pragma once

#include "sdspde/convex/lagrangian.hpp"
#include "sdspde/convex/monotone_map.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace sdspde {

/// F_A(u,p) = max over sampled graph points (v,q) of u q + v p - v q.
double fitzpatrick(const MonotoneMap& a, double u, double p, int graph_samples,
                   double range = 10.0);

/// The Fitzpatrick function of a scalar map presented as a Lagrangian, for diagnostics.
SelfDualLagrangian fitzpatrick_lagrangian(const MonotoneMap& a, int graph_samples,
                                          double range = 10.0);

/// H_L(u,v) = sup_p <v,p>_G - L(u,p).
double hamiltonian(const SelfDualLagrangian& l, const Vec& u, const Vec& v);

struct SupResult {
  Vec argmax;
  double value = 0.0;
  bool escaped = false;  // maximizer pinned at the search box
  int evaluations = 0;
};

/// Brute-force maximization of a concave function on the box [-radius, radius]^n:
/// finite-difference Newton, then cyclic golden-section sweeps and a compass polish.
/// Uses only function values.
SupResult brute_force_sup(const std::function<double(const Vec&)>& h, Vec start, double radius);

/// L* evaluated by brute_force_sup in the pairing of L.
SupResult brute_force_conjugate(const SelfDualLagrangian& l, const Vec& q1, const Vec& q2,
                                double radius);

struct SelfDualityOptions {
  double sample_radius = 1.0;  // sampled (u,p) uniform in [-r, r]
  double box_scale = 10.0;     // search box radius relative to 1 + |(u,p)|
  std::uint64_t seed = 1;
  bool throw_on_escape = false;
};

struct SelfDualityReport {
  std::string lagrangian;
  int samples = 0;
  double max_abs_diff = 0.0;
  int escaped = 0;
  Vec worst_u, worst_p;
  double tol = 0.0;
  bool pass = false;
};

/// Samples (u,p) and compares L*(p,u) with L(u,p). The boundary kind is checked
/// against l*(-a,b) = l(a,b) instead.
SelfDualityReport check_self_duality(const SelfDualLagrangian& l, int sample_count, double tol,
                                     const SelfDualityOptions& opt = {});

}  // namespace sdspde
