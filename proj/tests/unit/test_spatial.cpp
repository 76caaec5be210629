#include <doctest.h>

#include "oracles.hpp"
#include "sdspde/convex/lagrangian.hpp"
#include "sdspde/error.hpp"
#include "sdspde/spatial/grid.hpp"
#include "sdspde/spatial/lifted.hpp"
#include "sdspde/spatial/operators.hpp"
#include "sdspde/util/splitmix.hpp"

#include <cmath>
#include <numbers>

using namespace sdspde;

namespace {

Vec random_field(SplitMix64& rng, int n, double r = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-r, r);
  return v;
}

Eigen::MatrixXd dense(const SpMat& a) { return Eigen::MatrixXd(a); }

// psi(x,y) = A b(x) b(y), b(t) = sin^2(pi (t - 0.2) / 0.6) on [0.2, 0.8].
double bump_stream(double x, double y) {
  auto b = [](double t) {
    if (t <= 0.2 || t >= 0.8) return 0.0;
    const double s = std::sin(std::numbers::pi * (t - 0.2) / 0.6);
    return s * s;
  };
  return 0.3 * b(x) * b(y);
}

}  // namespace

TEST_SUITE("spatial") {

TEST_CASE("build_grid: stencil and errors") {
  auto g = build_grid(1, 3);
  CHECK(g.h() == 0.25);
  CHECK(g.size() == 3);
  CHECK(g.edge_count() == 4);
  Eigen::MatrixXd expect(3, 3);
  expect << -2, 1, 0, 1, -2, 1, 0, 1, -2;
  expect /= 0.0625;
  CHECK((dense(g.laplacian()) - expect).norm() < 1e-12);

  auto g2 = build_grid(2, 4);
  CHECK(g2.size() == 16);
  CHECK(g2.edge_count() == 2 * 5 * 4);
  CHECK(g2.cell_volume() == doctest::Approx(0.04));
  CHECK(g2.laplacian().diagonal().cwiseAbs().maxCoeff() == doctest::Approx(4 / 0.04));

  CHECK_THROWS_AS(build_grid(1, 1), Error);
  CHECK_THROWS_AS(build_grid(3, 8), Error);
  try {
    build_grid(0, 8);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
  }
}

TEST_CASE("gradient and negative divergence are adjoint") {
  SplitMix64 rng(3);
  for (int d : {1, 2}) {
    for (int k : {2, 3, 7, 16}) {
      auto g = build_grid(d, k);
      for (int s = 0; s < 5; ++s) {
        const Vec u = random_field(rng, g.size());
        const Vec f = random_field(rng, g.edge_count());
        const double lhs = g.edge_inner(g.gradient() * u, f);
        const double rhs = g.l2_inner(u, -(g.divergence() * f));
        CHECK(std::abs(lhs - rhs) <= 1e-13 * (1 + std::abs(lhs)));
      }
    }
  }
}

TEST_CASE("Laplacian is symmetric negative definite with the right bottom eigenvalue") {
  for (int d : {1, 2}) {
    const int k = d == 1 ? 64 : 24;
    auto g = build_grid(d, k);
    const Eigen::MatrixXd l = dense(g.laplacian());
    CHECK((l - l.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l);
    CHECK(es.eigenvalues().maxCoeff() < 0.0);
    const double lam = -es.eigenvalues().maxCoeff();
    const double pi2 = std::numbers::pi * std::numbers::pi;
    CHECK(std::abs(lam - pi2 * d) <= 0.02 * pi2 * d);
    const double s = std::sin(std::numbers::pi * g.h() / 2);
    CHECK(lam == doctest::Approx(d * 4 * s * s / (g.h() * g.h())).epsilon(1e-10));
  }
  auto g = build_grid(1, 64);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(g.laplacian()));
  CHECK(-es.eigenvalues().maxCoeff() == doctest::Approx(9.8696).epsilon(0.005));
}

TEST_CASE("H^-1 inner product") {
  SplitMix64 rng(5);
  for (int d : {1, 2}) {
    auto g = build_grid(d, d == 1 ? 20 : 8);
    const Vec u = random_field(rng, g.size()), v = random_field(rng, g.size());
    CHECK(h_minus_one_inner(g, u, Vec::Zero(g.size())) == 0.0);
    const double a = h_minus_one_inner(g, u, v), b = h_minus_one_inner(g, v, u);
    CHECK(std::abs(a - b) <= 1e-10 * (1 + std::abs(a)));
    CHECK(g.v_star_norm_sq(u) > 0.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-dense(g.laplacian()));
    const Vec e1 = es.eigenvectors().col(0);
    const double lam1 = es.eigenvalues()[0];
    CHECK(h_minus_one_inner(g, e1, e1) == doctest::Approx(g.l2_inner(e1, e1) / lam1).epsilon(1e-10));

    Vec w(g.size());
    const Vec r = g.solve_negative_laplacian(v);
    w = -(g.laplacian() * r);
    CHECK((w - v).cwiseAbs().maxCoeff() < 1e-10);
  }
  auto g = build_grid(1, 5);
  CHECK_THROWS_AS(h_minus_one_inner(g, Vec::Zero(4), Vec::Zero(5)), Error);
}

TEST_CASE("metrics: L^2 and H^-1 Riesz maps") {
  SplitMix64 rng(8);
  auto g = build_grid(1, 12);
  const Vec u = random_field(rng, g.size()), v = random_field(rng, g.size());
  CHECK(g.l2_metric()->inner(u, v) == doctest::Approx(g.l2_inner(u, v)));
  CHECK(g.h_minus_one_metric()->inner(u, v) == doctest::Approx(h_minus_one_inner(g, u, v)));
  const Vec back = g.h_minus_one_metric()->solve(g.h_minus_one_metric()->apply(u));
  CHECK((back - u).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.v_norm_sq(u) == doctest::Approx(-g.l2_inner(u, g.laplacian() * u)));
}

TEST_CASE("SpatialOperator: examples") {
  SplitMix64 rng(9);
  auto g = build_grid(1, 16);
  auto lap = SpatialOperator::laplacian(g);
  CHECK(lap.apply(Vec::Zero(16)).norm() == 0.0);
  CHECK(lap.symmetry() == SpatialOperator::Symmetry::self_adjoint);

  auto p2 = SpatialOperator::p_laplacian(g, 2.0);
  for (int s = 0; s < 5; ++s) {
    const Vec u = random_field(rng, 16);
    const Vec a = lap.apply(u);
    CHECK((p2.apply(u) - a).cwiseAbs().maxCoeff() <= 1e-12 * a.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(lap.apply(Vec::Zero(15)), Error);
  CHECK_THROWS_AS(SpatialOperator::p_laplacian(g, 1.5), Error);
  CHECK_THROWS_AS(SpatialOperator::p_laplacian(build_grid(2, 4), 3.0), Error);

  // |u'|^{p-2} u' recomputed node by node.
  auto p3 = SpatialOperator::p_laplacian(g, 3.0);
  const Vec u = random_field(rng, 16);
  Vec ext = Vec::Zero(18);
  ext.segment(1, 16) = u;
  Vec expect(16);
  const double h = g.h();
  auto flux = [&](int e) {
    const double d = (ext[e + 1] - ext[e]) / h;
    return std::abs(d) * d;
  };
  for (int i = 0; i < 16; ++i) expect[i] = (flux(i + 1) - flux(i)) / h;
  CHECK((p3.apply(u) - expect).cwiseAbs().maxCoeff() <= 1e-10 * expect.cwiseAbs().maxCoeff());

  auto inv = SpatialOperator::inverse_laplacian(g);
  for (int i = 0; i < 16; ++i) {
    Vec e = Vec::Zero(16);
    e[i] = 1.0;
    CHECK((inv.apply(lap.apply(e)) + e).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK_THROWS_AS(inv.matrix(), Error);

  SpMat notskew = g.laplacian();
  CHECK_THROWS_AS(SpatialOperator::custom_linear(g, notskew, SpatialOperator::Symmetry::skew_adjoint), Error);
  auto c = SpatialOperator::custom_linear(g, notskew, SpatialOperator::Symmetry::self_adjoint);
  CHECK((c.apply(u) - lap.apply(u)).norm() == 0.0);
}

TEST_CASE("skew transport with constant a on compactly supported u") {
  for (int d : {1, 2}) {
    auto g = build_grid(d, d == 1 ? 40 : 20);
    auto gam = SpatialOperator::skew_transport(g, constant_field(g, 0.7, -1.3));
    const Vec u = g.sample([](double x, double y) {
      const double bx = (x > 0.25 && x < 0.75) ? std::pow(std::sin(2 * std::numbers::pi * (x - 0.25)), 2) : 0.0;
      const double by = (y > 0.25 && y < 0.75) ? std::pow(std::sin(2 * std::numbers::pi * (y - 0.25)), 2) : 1.0;
      return bx * by;
    });
    // Quadrature of u (a . grad u) with the central stencil telescopes to zero.
    const int k = g.points_per_axis();
    double q = 0.0;
    auto val = [&](int i, int j) {
      if (i < 0 || i >= k || j < 0 || j >= (d == 1 ? 1 : k)) return 0.0;
      return u[i + k * j];
    };
    for (int j = 0; j < (d == 1 ? 1 : k); ++j) {
      for (int i = 0; i < k; ++i) {
        double adu = 0.7 * (val(i + 1, j) - val(i - 1, j)) / (2 * g.h());
        if (d == 2) adu += -1.3 * (val(i, j + 1) - val(i, j - 1)) / (2 * g.h());
        q += val(i, j) * adu * g.cell_volume();
      }
    }
    CHECK(std::abs(q) < 1e-10);
    CHECK(std::abs(g.l2_inner(gam.apply(u), u)) < 1e-10);
  }
}

TEST_CASE("skew transport is skew for arbitrary fields and consistent to first order") {
  SplitMix64 rng(13);
  for (int d : {1, 2}) {
    auto g = build_grid(d, d == 1 ? 30 : 12);
    AField a{random_field(rng, g.size(), 3.0), d == 2 ? random_field(rng, g.size(), 3.0) : Vec()};
    CHECK(skew_defect(g, skew_transport_matrix(g, a), 10, 4) < 1e-10);
    auto op = SpatialOperator::skew_transport(g, a);
    const Vec u = random_field(rng, g.size());
    CHECK(std::abs(g.l2_inner(op.apply(u), u)) < 1e-10);
  }

  // Gamma u - (a . grad u + div(a) u / 2) on smooth data shrinks with h.
  double prev = 0.0;
  for (int k : {16, 32, 64}) {
    auto g = build_grid(1, k);
    auto a = field_from_function(g, [](double x, double) { return 1.0 + x; }, {});
    const Vec u = g.sample([](double x, double) { return std::sin(std::numbers::pi * x) * x; });
    const Vec du = g.sample([](double x, double) {
      return std::numbers::pi * std::cos(std::numbers::pi * x) * x + std::sin(std::numbers::pi * x);
    });
    const Vec expect = a.ax.cwiseProduct(du) + 0.5 * u;
    const Vec got = skew_transport_matrix(g, a) * u;
    // Interior nodes away from the truncated boundary row.
    const double err = (got - expect).segment(2, k - 4).cwiseAbs().maxCoeff();
    if (prev > 0.0) CHECK(err < 0.6 * prev);
    prev = err;
  }
}

TEST_CASE("stream-function fields are divergence-free and vanish near the boundary") {
  auto g = build_grid(2, 20);
  const AField a = stream_field(g, bump_stream);
  CHECK(a.ax.cwiseAbs().maxCoeff() > 0.1);
  CHECK(discrete_divergence(g, a).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(boundary_speed(g, a) == 0.0);
  CHECK(skew_defect(g, skew_transport_matrix(g, a), 8, 1) < 1e-10);
  CHECK_THROWS_AS(stream_field(build_grid(1, 8), bump_stream), Error);

  auto g1 = build_grid(1, 9);
  auto lin = field_from_function(g1, [](double x, double) { return x; }, {});
  const Vec div = discrete_divergence(g1, lin);
  CHECK(div.segment(0, 8).cwiseAbs().minCoeff() == doctest::Approx(1.0));
}

TEST_CASE("discrete p-Laplacian is monotone") {
  SplitMix64 rng(21);
  auto g = build_grid(1, 24);
  for (double p : {2.0, 2.5, 3.0, 4.0}) {
    auto op = SpatialOperator::p_laplacian(g, p);
    for (int s = 0; s < 20; ++s) {
      const Vec u = random_field(rng, g.size(), 2.0), v = random_field(rng, g.size(), 2.0);
      CHECK(g.l2_inner(op.apply(u) - op.apply(v), u - v) <= 1e-10);
    }
  }
}

TEST_CASE("lifted divergence Lagrangian: heat flux example") {
  auto g = build_grid(1, 20);
  const Vec u = g.sample([](double x, double) { return std::sin(std::numbers::pi * x) + x * (1 - x); });
  const Vec p = -(g.laplacian() * u);
  const Vec grad = g.gradient() * u;
  const double energy = grad.squaredNorm() * g.h();

  auto pointwise = SelfDualLagrangian::basic(ConvexFunction::power_norm(2.0, 1));
  auto ev = lifted_divergence_lagrangian(g, pointwise, u, p);
  CHECK(ev.value == doctest::Approx(energy).epsilon(1e-10));
  CHECK((ev.flux - grad).cwiseAbs().maxCoeff() < 1e-7);
  auto lifted = lifted_divergence(g, pointwise);
  CHECK(lifted.kind() == SelfDualLagrangian::Kind::divergence_lifted);
  CHECK(std::abs(lifted.gap(u, p)) < 1e-8);

  auto fast = lifted_divergence(g, quadratic_potential());
  CHECK(fast.value(u, p) == doctest::Approx(energy).epsilon(1e-10));
  CHECK(std::abs(fast.gap(u, p)) < 1e-8);
  CHECK(lifted_pointwise_gaps(fast, u, p).cwiseAbs().maxCoeff() < 1e-8);

  auto z = lifted_divergence_lagrangian(g, pointwise, Vec::Zero(20), Vec::Zero(20));
  CHECK(std::abs(z.value) < 1e-14);
  CHECK(z.flux.cwiseAbs().maxCoeff() < 1e-7);

  CHECK_THROWS_AS(lifted_divergence(build_grid(2, 4), quadratic_potential()), Error);
  CHECK_THROWS_AS(fast.value(Vec::Zero(19), p), Error);
  CHECK_THROWS_AS(lifted_evaluate(pointwise, Vec::Zero(1), Vec::Zero(1)), Error);
}

TEST_CASE("lifted Lagrangian dominates the pairing and has consistent derivatives") {
  SplitMix64 rng(31);
  auto g = build_grid(1, 8);
  auto l = lifted_divergence(g, arctan_flux_potential());
  auto generic = lifted_divergence(g, SelfDualLagrangian::basic(
                                          ConvexFunction::separable(arctan_flux_potential(), Vec::Ones(1))));
  for (int s = 0; s < 30; ++s) {
    const Vec u = random_field(rng, 8, 2.0), p = random_field(rng, 8, 20.0);
    const double v = l.value(u, p);
    CHECK(v >= l.pairing(u, p) - 1e-10);
    CHECK(generic.value(u, p) == doctest::Approx(v).epsilon(1e-9));
    if (s < 5) {
      const Vec gu = l.grad_u(u, p), gp = l.grad_p(u, p);
      for (int i = 0; i < 8; ++i) {
        Vec e = Vec::Zero(8);
        e[i] = 1e-6;
        CHECK((l.value(u + e, p) - l.value(u - e, p)) / 2e-6 == doctest::Approx(gu[i]).epsilon(1e-5));
        CHECK((l.value(u, p + e) - l.value(u, p - e)) / 2e-6 == doctest::Approx(gp[i]).epsilon(1e-5));
      }
      const auto r = l.remainder(u, p);
      CHECK(r.value + l.prox_part()->value(u) == doctest::Approx(v).epsilon(1e-12));
      CHECK((r.dp - gp).norm() < 1e-12);
    }
  }
}

TEST_CASE("lifted Lagrangian: vector field and resolvent") {
  SplitMix64 rng(41);
  auto g = build_grid(1, 10);
  auto l = lifted_divergence(g, arctan_flux_potential());
  for (int s = 0; s < 5; ++s) {
    const Vec u = random_field(rng, 10, 1.5);
    const Vec pv = l.vector_field(u);
    CHECK(std::abs(l.gap(u, pv)) < 1e-8 * (1 + std::abs(l.pairing(u, pv))));
    // Drift is div(beta(grad u)) with beta(y) = y + atan(y).
    Vec f = g.gradient() * u;
    for (int e = 0; e < f.size(); ++e) f[e] += std::atan(f[e]);
    CHECK((pv + g.divergence() * f).cwiseAbs().maxCoeff() < 1e-10);
    const double step = 0.01 * (s + 1);
    const Vec y = l.resolvent(step, u);
    CHECK((y + step * l.vector_field(y) - u).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("lifted Lagrangian is self-dual on a coarse grid") {
  // L*(p, u) = sup_{a,b} <a,p> + <b,u> - L(a,b) in the L^2 geometry, 6 variables.
  SplitMix64 rng(51);
  auto g = build_grid(1, 3);
  for (auto l : {lifted_divergence(g, quadratic_potential()), lifted_divergence(g, arctan_flux_potential())}) {
    for (int s = 0; s < 3; ++s) {
      const Vec u = random_field(rng, 3, 1.0), p = random_field(rng, 3, 8.0);
      auto obj = [&](const Eigen::VectorXd& z) {
        const Vec a = z.head(3), b = z.tail(3);
        return l.pairing(a, p) + l.pairing(b, u) - l.value(a, b);
      };
      Eigen::VectorXd z0(6);
      z0 << u, p;
      const double conj = oracle::maximize_concave(obj, z0);
      CHECK(std::abs(conj - l.value(u, p)) < 1e-4 * (1 + std::abs(conj)));
    }
  }
}

}  // TEST_SUITE
