#include <doctest.h>

#include "oracles.hpp"
#include "sdspde/convex/convex_function.hpp"
#include "sdspde/convex/duality.hpp"
#include "sdspde/convex/lagrangian.hpp"
#include "sdspde/convex/monotone_map.hpp"
#include "sdspde/error.hpp"
#include "sdspde/util/splitmix.hpp"

#include <cmath>
#include <vector>

using namespace sdspde;

namespace {

Vec v1(double x) {
  Vec v(1);
  v[0] = x;
  return v;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec random_vec(SplitMix64& rng, int n, double r) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-r, r);
  return v;
}

SpMat tridiag(int n) {
  SpMat q(n, n);
  for (int i = 0; i < n; ++i) {
    q.insert(i, i) = 2.0;
    if (i + 1 < n) {
      q.insert(i, i + 1) = -1.0;
      q.insert(i + 1, i) = -1.0;
    }
  }
  q.makeCompressed();
  return q;
}

ConvexFunction cube_tabulated() {
  std::vector<double> x, f;
  for (long i = 0; i <= 200000; ++i) {
    const double u = -10.0 + 1e-4 * static_cast<double>(i);
    x.push_back(u);
    f.push_back(std::pow(std::abs(u), 3) / 3.0);
  }
  return ConvexFunction::tabulated_1d(x, f);
}

/// Smooth catalog kinds on R^n used by the property tests.
std::vector<ConvexFunction> catalog(int n) {
  SpMat a(n, n);
  for (int i = 0; i < n; ++i) {
    a.insert(i, i) = 1.0;
    if (i + 1 < n) a.insert(i, i + 1) = 0.5;
  }
  a.makeCompressed();
  Vec w = Vec::LinSpaced(n, 0.5, 1.5);
  return {
      ConvexFunction::quadratic_form(tridiag(n), Vec::Constant(n, 0.3), 0.1),
      ConvexFunction::power_norm(3.0, w),
      ConvexFunction::power_norm(1.5, w),
      ConvexFunction::shifted_quadratic(Vec::LinSpaced(n, -1.0, 1.0), 2.0),
      ConvexFunction::separable(arctan_flux_potential(), w),
      ConvexFunction::sum(ConvexFunction::power_norm(4.0, n), ConvexFunction::shifted_quadratic(Vec::Zero(n))),
      ConvexFunction::precomposed(ConvexFunction::power_norm(3.0, n), a),
  };
}

}  // namespace

TEST_SUITE("convex") {

TEST_CASE("conjugate examples") {
  auto half = ConvexFunction::shifted_quadratic(Vec::Zero(1));
  CHECK(half.conjugate(v1(2.0)) == doctest::Approx(2.0).epsilon(1e-15));

  // Psi_B(G) = |G - 2B|^2/2 has conjugate |G|^2/2 + 2<G,B>.
  SplitMix64 rng(3);
  Vec b = random_vec(rng, 4, 1.0), g = random_vec(rng, 4, 2.0);
  auto psi = ConvexFunction::shifted_quadratic(2.0 * b);
  CHECK(psi.conjugate(g) == doctest::Approx(0.5 * g.squaredNorm() + 2.0 * g.dot(b)).epsilon(1e-14));

  const double expected = std::pow(8.0, 1.5) * 2.0 / 3.0;
  auto cube = [](double u) { return std::pow(std::abs(u), 3) / 3.0; };
  const double grid = oracle::grid_conjugate(cube, 8.0, -10.0, 10.0, 1e-4);
  CHECK(std::abs(grid - expected) < 1e-3);
  auto tab = cube_tabulated();
  CHECK(std::abs(tab.conjugate(v1(8.0)) - expected) < 1e-3);
  CHECK(std::abs(tab.conjugate(v1(8.0)) - grid) < 1e-9);
  CHECK(ConvexFunction::power_norm(3.0, 1).conjugate(v1(8.0)) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("tabulated conjugate: linear sweep, grid bound, and escape") {
  auto tab = cube_tabulated();
  std::vector<double> slopes = {-50.0, -3.0, 0.0, 0.5, 8.0, 99.0};
  auto batch = tab.conjugate_sorted(slopes);
  for (size_t i = 0; i < slopes.size(); ++i) {
    CHECK(batch[i] == doctest::Approx(tab.conjugate(v1(slopes[i]))).epsilon(1e-15));
    // Dominates every grid affine minorant.
    for (double u : {-10.0, -2.5, 0.0, 1.25, 7.0, 10.0}) {
      CHECK(batch[i] >= u * slopes[i] - std::pow(std::abs(u), 3) / 3.0 - 1e-9);
    }
  }
  // Linear growth at the boundary: the sup would leave the grid.
  auto lin = ConvexFunction::tabulated_1d({-1.0, 0.0, 1.0}, {1.0, 0.0, 1.0});
  CHECK_THROWS_AS(lin.conjugate(v1(1.5)), Error);
  try {
    lin.conjugate(v1(1.5));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unbounded_conjugate);
  }
  CHECK_THROWS_AS(ConvexFunction::tabulated_1d({0.0, 1.0, 2.0}, {0.0, 1.0, 1.5}), Error);
}

TEST_CASE("biconjugate of tabulated kinds recovers the function") {
  auto tab = cube_tabulated();
  // Slopes of the tabulated interpolant span [-100, 100]; conjugate once on a slope grid.
  std::vector<double> slopes;
  for (int i = 0; i <= 40000; ++i) slopes.push_back(-99.9 + 199.8 * i / 40000.0);
  auto conj = tab.conjugate_sorted(slopes);
  for (double x : {-3.0, -1.0, -0.2, 0.0, 0.7, 2.0, 4.0}) {
    double best = -1e300;
    for (size_t i = 0; i < slopes.size(); ++i) best = std::max(best, x * slopes[i] - conj[i]);
    const double fx = std::pow(std::abs(x), 3) / 3.0;
    CHECK(std::abs(best - fx) <= 1e-6 * (1.0 + fx));
  }
}

TEST_CASE("fenchel_young_gap examples and invariants") {
  auto half = ConvexFunction::shifted_quadratic(Vec::Zero(1));
  CHECK(fenchel_young_gap(half, v1(3.0), v1(3.0)) == doctest::Approx(0.0));
  CHECK(fenchel_young_gap(half, v1(3.0), v1(0.0)) == doctest::Approx(4.5));
  auto cube = ConvexFunction::power_norm(3.0, 1);
  CHECK(std::abs(fenchel_young_gap(cube, v1(2.0), v1(4.0))) < 1e-9);
  CHECK(std::isinf(fenchel_young_gap(ConvexFunction::l1_norm(Vec::Ones(1)), v1(0.0), v1(3.0))));

  SplitMix64 rng(11);
  for (int n : {1, 3}) {
    for (const auto& f : catalog(n)) {
      for (int s = 0; s < 20; ++s) {
        Vec x = random_vec(rng, n, 2.0), p = random_vec(rng, n, 2.0);
        CHECK(fenchel_young_gap(f, x, p) >= -1e-10);
        Vec g = f.subgradient(x);
        CHECK(std::abs(fenchel_young_gap(f, x, g)) <= 1e-8 * (1.0 + std::abs(f.value(x))));
      }
    }
  }
}

TEST_CASE("convexity of evaluation") {
  SplitMix64 rng(5);
  for (const auto& f : catalog(3)) {
    for (int s = 0; s < 30; ++s) {
      Vec x = random_vec(rng, 3, 3.0), y = random_vec(rng, 3, 3.0);
      const double t = rng.uniform();
      CHECK(f.value(t * x + (1 - t) * y) <= t * f.value(x) + (1 - t) * f.value(y) + 1e-10);
    }
  }
  auto tab = cube_tabulated();
  for (int s = 0; s < 30; ++s) {
    const double x = rng.uniform(-9, 9), y = rng.uniform(-9, 9), t = rng.uniform();
    CHECK(tab.value(v1(t * x + (1 - t) * y)) <= t * tab.value(v1(x)) + (1 - t) * tab.value(v1(y)) + 1e-10);
  }
}

TEST_CASE("prox examples") {
  auto half = ConvexFunction::shifted_quadratic(Vec::Zero(1));
  CHECK(half.prox(1.0, v1(4.0))[0] == doctest::Approx(2.0));
  Vec x = v2(0.3, -7.0);
  CHECK((ConvexFunction::zero(2).prox(0.7, x) - x).norm() == 0.0);
  auto abs1 = ConvexFunction::l1_norm(Vec::Ones(1));
  CHECK(abs1.prox(1.0, v1(0.5))[0] == 0.0);
  CHECK(abs1.prox(1.0, v1(2.5))[0] == doctest::Approx(1.5));
  CHECK_THROWS_AS(half.prox(0.0, v1(1.0)), Error);
}

TEST_CASE("prox optimality and firm non-expansiveness") {
  SplitMix64 rng(17);
  for (int n : {1, 4}) {
    for (const auto& f : catalog(n)) {
      for (int s = 0; s < 10; ++s) {
        const double step = rng.uniform(0.1, 3.0);
        Vec x = random_vec(rng, n, 3.0), y = random_vec(rng, n, 3.0);
        Vec px = f.prox(step, x), py = f.prox(step, y);
        CHECK(((x - px) / step - f.subgradient(px)).lpNorm<Eigen::Infinity>() <= 1e-8);
        CHECK((px - py).squaredNorm() <= (px - py).dot(x - y) + 1e-12);
        CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
      }
    }
  }
  auto tab = cube_tabulated();
  for (int s = 0; s < 20; ++s) {
    const double a = rng.uniform(-12, 12), b = rng.uniform(-12, 12), step = rng.uniform(0.01, 2.0);
    const double pa = tab.prox(step, v1(a))[0], pb = tab.prox(step, v1(b))[0];
    CHECK(std::abs(pa - pb) <= std::abs(a - b) + 1e-12);
    const double ref = oracle::golden_min(
        [&](double z) { return tab.value(v1(z)) + (z - a) * (z - a) / (2 * step); }, -10, 10);
    CHECK(std::abs(pa - ref) < 1e-6);
  }
}

TEST_CASE("Moreau decomposition in one dimension") {
  // prox_{s f}(x) + s prox_{f*/s}(x/s) = x, with the conjugate prox computed
  // by golden section on f* values.
  SplitMix64 rng(23);
  std::vector<ConvexFunction> fs = {ConvexFunction::power_norm(3.0, 1),
                                    ConvexFunction::power_norm(1.5, 1),
                                    ConvexFunction::shifted_quadratic(v1(0.4), 2.0),
                                    ConvexFunction::separable(arctan_flux_potential(), Vec::Ones(1)),
                                    ConvexFunction::l1_norm(Vec::Ones(1))};
  for (const auto& f : fs) {
    for (int s = 0; s < 8; ++s) {
      const double step = rng.uniform(0.2, 2.0), x = rng.uniform(-3, 3);
      const double y = x / step;
      auto obj = [&](double q) {
        const double c = f.conjugate(v1(q));
        if (!std::isfinite(c)) return 1e30 * (1 + std::abs(q));
        return c * step + 0.5 * step * step * (q - y) * (q - y);
      };
      const double q = oracle::golden_min(obj, -40, 40, 1e-13);
      CHECK(std::abs(f.prox(step, v1(x))[0] + step * q - x) <= 1e-8 * (1 + std::abs(x)) + 1e-9);
    }
  }
}

TEST_CASE("evaluate_lagrangian examples") {
  auto ell = SelfDualLagrangian::boundary(v1(1.0));
  CHECK(ell.value(v1(1.0), v1(0.0)) == doctest::Approx(-0.5));
  auto m0 = SelfDualLagrangian::noise(Vec::Zero(3));
  CHECK(m0.value(Vec::Zero(3), Vec::Zero(3)) == 0.0);
  SplitMix64 rng(31);
  for (int s = 0; s < 20; ++s) {
    Vec b = random_vec(rng, 5, 2.0), f = random_vec(rng, 5, 2.0);
    auto m = SelfDualLagrangian::noise(b);
    CHECK(m.value(f, -f) + f.squaredNorm() == doctest::Approx(2.0 * (f - b).squaredNorm()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ell.value(v2(1, 2), v1(0)), Error);
}

TEST_CASE("Fenchel-Young gap of Lagrangians is non-negative") {
  SplitMix64 rng(37);
  SpMat rot(2, 2);
  rot.insert(0, 1) = 1.0;
  rot.insert(1, 0) = -1.0;
  std::vector<SelfDualLagrangian> ls = {
      SelfDualLagrangian::basic(ConvexFunction::power_norm(3.0, 2)),
      SelfDualLagrangian::skew_shifted(ConvexFunction::shifted_quadratic(Vec::Zero(2)), rot),
      SelfDualLagrangian::noise(v2(0.3, -0.2)),
      moreau_regularize(SelfDualLagrangian::basic(ConvexFunction::power_norm(3.0, 2)), 0.5),
  };
  for (const auto& l : ls) {
    for (int s = 0; s < 50; ++s) {
      Vec u = random_vec(rng, 2, 2.0), p = random_vec(rng, 2, 2.0);
      CHECK(l.gap(u, p) >= -1e-10);
      Vec a = l.vector_field(u);
      CHECK(std::abs(l.gap(u, a)) <= 1e-9 * (1 + std::abs(l.value(u, a))));
    }
  }
}

TEST_CASE("moreau_regularize examples") {
  auto l = SelfDualLagrangian::basic(ConvexFunction::shifted_quadratic(Vec::Zero(1)));
  auto l1 = moreau_regularize(l, 1.0);
  SplitMix64 rng(41);
  for (int s = 0; s < 10; ++s) {
    const double u = rng.uniform(-2, 2), p = rng.uniform(-2, 2);
    CHECK(l1.value(v1(u), v1(p)) == doctest::Approx(u * u / 4 + p * p).epsilon(1e-12));
    // Numeric inf over a z-grid.
    double best = 1e300;
    for (int i = 0; i <= 400000; ++i) {
      const double z = -4.0 + 8.0 * i / 400000.0;
      best = std::min(best, 0.5 * z * z + 0.5 * p * p + (u - z) * (u - z) / 2 + 0.5 * p * p);
    }
    CHECK(std::abs(best - l1.value(v1(u), v1(p))) < 1e-6);
    CHECK(l1.moreau_point(v1(u))[0] == doctest::Approx(u / 2));
  }
  // lambda -> 0 on smooth kinds.
  auto lc = SelfDualLagrangian::basic(ConvexFunction::power_norm(3.0, 2));
  Vec u = v2(0.8, -1.1), p = v2(0.4, 0.9);
  double prev = 1e300;
  for (double lam : {1e-1, 1e-2, 1e-3}) {
    const double d = std::abs(moreau_regularize(lc, lam).value(u, p) - lc.value(u, p));
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 1e-2);
}

TEST_CASE("moreau_regularize preserves self-duality") {
  for (int n : {1, 2}) {
    auto l = SelfDualLagrangian::basic(ConvexFunction::power_norm(3.0, n));
    auto rep = check_self_duality(moreau_regularize(l, 0.3), 40, 1e-6, {});
    CHECK_MESSAGE(rep.pass, rep.max_abs_diff);
  }
  SpMat rot(2, 2);
  rot.insert(0, 1) = 1.0;
  rot.insert(1, 0) = -1.0;
  auto skew = SelfDualLagrangian::skew_shifted(ConvexFunction::shifted_quadratic(Vec::Zero(2)), rot);
  auto rep = check_self_duality(moreau_regularize(skew, 0.5), 10, 1e-5, {});
  CHECK_MESSAGE(rep.pass, rep.max_abs_diff);
}

TEST_CASE("fitzpatrick examples and invariants") {
  auto id = MonotoneMap::gradient(ConvexFunction::shifted_quadratic(Vec::Zero(1)));
  CHECK(fitzpatrick(id, 1.0, 1.0, 2001) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fitzpatrick(id, 1.0, 3.0, 2001) == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(fitzpatrick(id, 0.0, 0.0, 2001) == doctest::Approx(0.0));
  CHECK_THROWS_AS(fitzpatrick(id, 0.0, 0.0, 0), Error);

  auto beta = MonotoneMap::gradient(ConvexFunction::separable(arctan_flux_potential(), Vec::Ones(1)));
  SplitMix64 rng(43);
  for (int s = 0; s < 100; ++s) {
    const double u = rng.uniform(-3, 3), p = rng.uniform(-3, 3);
    // Off-graph points are resolved only up to the sampling of the graph.
    CHECK(fitzpatrick(beta, u, p, 501) >= u * p - 1e-3);
  }
  std::vector<double> gv, gq;
  beta.graph(501, 10.0, gv, gq);
  for (size_t i = 0; i < gv.size(); i += 25) {
    CHECK(std::abs(fitzpatrick(beta, gv[i], gq[i], 501) - gv[i] * gq[i]) < 1e-10);
  }
}

TEST_CASE("check_self_duality: basic, skew, Fitzpatrick") {
  for (const auto& f : catalog(2)) {
    auto rep = check_self_duality(SelfDualLagrangian::basic(f), 25, 1e-6, {});
    CHECK_MESSAGE(rep.pass, f.describe() << " " << rep.max_abs_diff);
  }
  SpMat rot(2, 2);
  rot.insert(0, 1) = 1.0;
  rot.insert(1, 0) = -1.0;
  auto skew = SelfDualLagrangian::skew_shifted(ConvexFunction::shifted_quadratic(Vec::Zero(2)), rot);
  CHECK(check_self_duality(skew, 50, 1e-6, {}).pass);

  auto id = MonotoneMap::gradient(ConvexFunction::shifted_quadratic(Vec::Zero(1)));
  auto fz = fitzpatrick_lagrangian(id, 2001);
  auto rep = check_self_duality(fz, 20, 1e-6, {});
  CHECK_FALSE(rep.pass);
  SelfDualityOptions strict;
  strict.throw_on_escape = true;
  CHECK_THROWS_AS(check_self_duality(fz, 20, 1e-6, strict), Error);
}

TEST_CASE("boundary identity l*(-a,b) = l(a,b)") {
  auto ell = SelfDualLagrangian::boundary(v2(0.7, -0.4));
  auto rep = check_self_duality(ell, 50, 1e-6, {});
  CHECK_MESSAGE(rep.pass, rep.max_abs_diff);
}

TEST_CASE("hamiltonian examples and properties") {
  auto l = SelfDualLagrangian::basic(ConvexFunction::shifted_quadratic(Vec::Zero(1)));
  CHECK(hamiltonian(l, v1(1.0), v1(2.0)) == doctest::Approx(1.5));
  // Grid sup oracle over p.
  double best = -1e300;
  for (int i = 0; i <= 200000; ++i) {
    const double p = -10 + 20.0 * i / 200000.0;
    best = std::max(best, 2.0 * p - 0.5 - 0.5 * p * p);
  }
  CHECK(std::abs(best - 1.5) < 1e-8);
  CHECK(hamiltonian(l, v1(0.3), v1(0.3)) == 0.0);

  SpMat rot(2, 2);
  rot.insert(0, 1) = 1.0;
  rot.insert(1, 0) = -1.0;
  auto skew = SelfDualLagrangian::skew_shifted(ConvexFunction::power_norm(3.0, 2), rot);
  auto basic2 = SelfDualLagrangian::basic(ConvexFunction::power_norm(3.0, 2));
  SplitMix64 rng(47);
  for (const auto& lag : {skew, basic2}) {
    for (int s = 0; s < 10; ++s) {
      Vec u = random_vec(rng, 2, 1.0), v = random_vec(rng, 2, 1.0), w = random_vec(rng, 2, 1.0);
      CHECK(hamiltonian(lag, v, u) <= -hamiltonian(lag, u, v) + 1e-7);
      // Concave in the first argument, convex in the second.
      const double hm1 = hamiltonian(lag, 0.5 * (u + w), v);
      CHECK(hm1 >= 0.5 * (hamiltonian(lag, u, v) + hamiltonian(lag, w, v)) - 1e-9 - 1e-7);
      const double hm2 = hamiltonian(lag, u, 0.5 * (v + w));
      CHECK(hm2 <= 0.5 * (hamiltonian(lag, u, v) + hamiltonian(lag, u, w)) + 1e-9 + 1e-7);
    }
  }
}

TEST_CASE("monotone maps: monotonicity and coercivity certificates") {
  Growth g;
  g.c1 = 1.0;
  g.alpha = 2.0;
  auto beta = MonotoneMap::gradient(ConvexFunction::separable(arctan_flux_potential(), Vec::Ones(3)), g);
  CHECK(check_monotone(beta, 200, 5.0, 1).pass);
  CHECK(coercivity_certificate(beta, 200, 5.0, 2).pass);
  Growth bad = g;
  bad.c1 = 3.0;
  CHECK_FALSE(coercivity_certificate(beta, 200, 5.0, 2).pass == coercivity_certificate(MonotoneMap::gradient(beta.potential(), bad), 200, 5.0, 2).pass);

  SpMat rot(3, 3);
  rot.insert(0, 1) = 1.0;
  rot.insert(1, 0) = -1.0;
  auto skew = MonotoneMap::gradient_plus_skew(ConvexFunction::power_norm(3.0, 3), rot);
  CHECK(check_monotone(skew, 200, 3.0, 3).pass);
  auto graph = MonotoneMap::scalar_graph({-1, 0, 2}, {-2, 0, 1});
  CHECK(check_monotone(graph, 200, 4.0, 4).pass);
  CHECK(graph.apply_scalar(1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(MonotoneMap::scalar_graph({0, 1}, {1, 0}), Error);
}

}  // TEST_SUITE
