#include <doctest.h>

#include "sdspde/error.hpp"
#include "sdspde/ito/process.hpp"
#include "sdspde/spatial/grid.hpp"
#include "sdspde/stochastic/brownian.hpp"
#include "sdspde/util/splitmix.hpp"

#include <cmath>

using namespace sdspde;

namespace {

ProcessTriple random_triple(SplitMix64& rng, int d, int mm, int nn) {
  ProcessTriple t = ProcessTriple::zeros(d, mm, nn);
  for (int m = 0; m < mm; ++m) {
    for (int i = 0; i < d; ++i) {
      t.x0(i, m) = rng.normal();
      for (int n = 0; n < nn; ++n) {
        t.drift[static_cast<size_t>(m)](i, n) = rng.normal();
        t.diffusion[static_cast<size_t>(m)](i, n) = rng.normal();
      }
    }
  }
  return t;
}

}  // namespace

TEST_SUITE("ito") {

TEST_CASE("reconstruct examples") {
  auto e = make_ensemble(20, 50, 2.0, 1);
  ProcessTriple z = ProcessTriple::zeros(3, 20, 50);
  z.x0.setConstant(0.25);
  ItoProcessEnsemble still(e, identity_metric(3), z);
  for (int m = 0; m < 20; ++m) {
    for (int n = 0; n <= 50; ++n) CHECK((still.state(m, n).array() == 0.25).all());
  }

  ProcessTriple c = z;
  for (auto& a : c.drift) a.setConstant(-1.5);
  ItoProcessEnsemble lin(e, identity_metric(3), c);
  for (int n = 0; n <= 50; ++n) {
    CHECK((lin.state(7, n).array() - (0.25 - 1.5 * n * e->dt())).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reconstruct with unit diffusion gives Brownian paths") {
  const int mm = 8000;
  auto e = make_ensemble(mm, 16, 1.5, 2);
  ProcessTriple d = ProcessTriple::zeros(1, mm, 16);
  d.x0.setConstant(1.0);
  for (auto& f : d.diffusion) f.setOnes();
  ItoProcessEnsemble u(e, identity_metric(1), d, Adaptedness::by_construction);
  Eigen::VectorXd term(mm);
  for (int m = 0; m < mm; ++m) {
    CHECK(std::abs(u.state(m, 9)[0] - (1.0 + e->w(m, 9))) < 1e-12);
    term[m] = u.terminal(m)[0];
  }
  const double mean = term.mean();
  const double var = (term.array() - mean).square().sum() / (mm - 1);
  CHECK(std::abs(var - 1.5) <= 4 * std::sqrt(2.0 / mm) * 1.5);
}

TEST_CASE("triple and trajectory determine each other") {
  SplitMix64 rng(3);
  auto e = make_ensemble(5, 12, 1.0, 3);
  const ProcessTriple t = random_triple(rng, 4, 5, 12);
  const auto traj = reconstruct(*e, t);
  const ProcessTriple back = triple_from_trajectories(*e, traj, t.diffusion);
  CHECK((back.x0 - t.x0).cwiseAbs().maxCoeff() == 0.0);
  for (int m = 0; m < 5; ++m) {
    CHECK((back.drift[static_cast<size_t>(m)] - t.drift[static_cast<size_t>(m)]).cwiseAbs().maxCoeff() < 1e-12);
  }
  ItoProcessEnsemble a(e, identity_metric(4), t), b(e, identity_metric(4), back);
  for (int m = 0; m < 5; ++m) CHECK((a.trajectory(m) - b.trajectory(m)).cwiseAbs().maxCoeff() < 1e-12);

  ProcessTriple bad = t;
  bad.drift[2].resize(4, 11);
  CHECK_THROWS_AS(ItoProcessEnsemble(e, identity_metric(4), bad), Error);
  CHECK_THROWS_AS(ItoProcessEnsemble(e, identity_metric(3), t), Error);
}

TEST_CASE("duality pairing") {
  SplitMix64 rng(4);
  auto e = make_ensemble(6, 10, 1.0, 4);
  auto g = std::make_shared<const SpatialDiscretization>(build_grid(1, 5));
  ItoProcessEnsemble u(e, g->l2_metric(), random_triple(rng, 5, 6, 10), Adaptedness::unverified, g);
  CHECK(duality_pairing(u, ProcessTriple::zeros(5, 6, 10)) == 0.0);

  ProcessTriple self = u.data();
  self.diffusion = (2.0 * u.data()).diffusion;
  CHECK(duality_pairing(u, self) == doctest::Approx(u.a2_norm_sq()).epsilon(1e-13));

  for (int s = 0; s < 5; ++s) {
    const ProcessTriple p = random_triple(rng, 5, 6, 10), q = random_triple(rng, 5, 6, 10);
    const double lhs = duality_pairing(u, p + q);
    const double rhs = duality_pairing(u, p) + duality_pairing(u, q);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1 + std::abs(lhs)));
    // Cauchy-Schwarz with the (p0, p1, P/2) norm.
    ProcessTriple ph = p;
    for (auto& f : ph.diffusion) f *= 0.5;
    ItoProcessEnsemble pn(e, g->l2_metric(), ph, Adaptedness::unverified, g);
    CHECK(std::abs(duality_pairing(u, p)) <= std::sqrt(u.a2_norm_sq() * pn.a2_norm_sq()) + 1e-12);
  }
  CHECK_THROWS_AS(duality_pairing(u, ProcessTriple::zeros(5, 5, 10)), Error);
}

TEST_CASE("check_adapted") {
  const int mm = 2000, nn = 40;
  auto e = make_ensemble(mm, nn, 1.0, 5);
  ProcessTriple det = ProcessTriple::zeros(2, mm, nn);
  for (auto& a : det.drift) a.setConstant(3.0);
  for (auto& f : det.diffusion) f.setConstant(0.5);
  ItoProcessEnsemble pd(e, identity_metric(2), det);
  auto r = check_adapted(pd, 8);
  CHECK(r.pass);
  CHECK(r.max_z == 0.0);

  ProcessTriple w = ProcessTriple::zeros(2, mm, nn), peek = w, ahead = w;
  for (int m = 0; m < mm; ++m) {
    for (int n = 0; n < nn; ++n) {
      w.drift[static_cast<size_t>(m)].col(n).setConstant(e->w(m, n));
      peek.drift[static_cast<size_t>(m)](0, n) = e->dw(m, n) / e->dt();
      ahead.diffusion[static_cast<size_t>(m)](1, n) = n + 1 < nn ? e->dw(m, n + 1) : 0.0;
    }
  }
  ItoProcessEnsemble pw(e, identity_metric(2), w);
  CHECK(check_adapted(pw, 8).pass);

  ItoProcessEnsemble pp(e, identity_metric(2), peek);
  auto rp = check_adapted(pp, 8);
  CHECK_FALSE(rp.pass);
  CHECK(rp.max_z > 20.0);
  CHECK(rp.worst_lag == 0);

  ItoProcessEnsemble pa(e, identity_metric(2), ahead);
  auto ra = check_adapted(pa, 8);
  CHECK_FALSE(ra.pass);
  CHECK(ra.worst_lag == 1);
  CHECK(audit_adaptedness(pa, 8).pass == false);
  CHECK(pa.adaptedness() == Adaptedness::failed);
  audit_adaptedness(pw, 8);
  CHECK(pw.adaptedness() == Adaptedness::passed);

  ItoProcessEnsemble cert(e, identity_metric(2), peek, Adaptedness::by_construction);
  CHECK(check_adapted(cert, 8).pass);
  CHECK_FALSE(check_adapted(cert, 8, 4.0, false).pass);

  auto single = make_ensemble(1, nn, 1.0, 5);
  ItoProcessEnsemble one(single, identity_metric(2), ProcessTriple::zeros(2, 1, nn));
  CHECK_FALSE(check_adapted(one, 8).pass);
}

TEST_CASE("y_norm") {
  SplitMix64 rng(6);
  auto e = make_ensemble(4, 20, 2.0, 6);
  auto g = std::make_shared<const SpatialDiscretization>(build_grid(1, 9));
  ItoProcessEnsemble zero(e, g->l2_metric(), ProcessTriple::zeros(9, 4, 20), Adaptedness::by_construction, g);
  CHECK(y_norm(zero, 2.0).total() == 0.0);

  ProcessTriple c = ProcessTriple::zeros(9, 4, 20);
  const Eigen::VectorXd field = g->sample([](double x, double) { return x * (1 - x); });
  for (int m = 0; m < 4; ++m) c.x0.col(m) = field;
  ItoProcessEnsemble flat(e, g->l2_metric(), c, Adaptedness::by_construction, g);
  for (double alpha : {2.0, 3.0, 1.5}) {
    auto y = y_norm(flat, alpha);
    CHECK(y.trajectory == doctest::Approx(std::pow(2.0, 1 / alpha) * std::sqrt(g->v_norm_sq(field))));
    CHECK(y.drift == 0.0);
    CHECK(y.diffusion == 0.0);
  }

  ItoProcessEnsemble p(e, g->l2_metric(), random_triple(rng, 9, 4, 20), Adaptedness::unverified, g);
  const double base = y_norm(p, 2.0).total();
  for (double lam : {-2.0, 0.5, 3.0}) {
    CHECK(std::abs(y_norm(p.scaled(lam), 2.0).total() - std::abs(lam) * base) <= 1e-12 * base * std::abs(lam) + 1e-12);
  }
  CHECK_THROWS_AS(y_norm(p, 1.0), Error);

  ItoProcessEnsemble scalar(e, identity_metric(1), ProcessTriple::zeros(1, 4, 20));
  CHECK(y_norm(scalar, 2.0).total() == 0.0);
}

TEST_CASE("A^2 norm is finite and scales quadratically") {
  SplitMix64 rng(7);
  auto e = make_ensemble(3, 8, 1.0, 7);
  ItoProcessEnsemble p(e, identity_metric(2), random_triple(rng, 2, 3, 8));
  CHECK(std::isfinite(p.a2_norm_sq()));
  CHECK(p.scaled(3.0).a2_norm_sq() == doctest::Approx(9.0 * p.a2_norm_sq()));
  CHECK(std::string(to_string(Adaptedness::by_construction)) == "by_construction");
}

}  // TEST_SUITE
