#include <doctest.h>

#include "sdspde/catalog/catalog.hpp"
#include "sdspde/error.hpp"

#include <cmath>

using namespace sdspde;
using Mat = Eigen::MatrixXd;

namespace {

ProblemSpec small(Family f, int k = 10, int paths = 8, int steps = 32) {
  ProblemSpec s = default_spec(f);
  if (f != Family::ou_scalar) s.k = k;
  s.paths = paths;
  s.steps = steps;
  return s;
}

double max_diff(const ItoProcessEnsemble& a, const ItoProcessEnsemble& b) {
  double d = 0.0;
  for (int m = 0; m < a.paths(); ++m) d = std::max(d, (a.trajectory(m) - b.trajectory(m)).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

TEST_SUITE("catalog") {

TEST_CASE("family names round trip") {
  for (Family f : {Family::ou_scalar, Family::heat_transport, Family::porous_media, Family::p_laplacian,
                   Family::divergence_form, Family::heat_multiplicative}) {
    CHECK(family_from_string(to_string(f)) == f);
  }
  CHECK_THROWS_WITH_AS(family_from_string("wave"), doctest::Contains("problem.family"), Error);
}

TEST_CASE("OU oracle mean and variance") {
  auto ens = make_ensemble(20000, 8, 1.0, 5);
  const auto ex = ou_exact(*ens, 1.0, 0.5);
  double mean = 0.0, sq = 0.0;
  for (const auto& e : ex) {
    mean += e(0, 8);
    sq += e(0, 8) * e(0, 8);
  }
  mean /= 20000;
  const double var = sq / 20000 - mean * mean;
  const double var_exact = 0.25 * 0.5 * (1.0 - std::exp(-2.0));
  CHECK(std::abs(mean - std::exp(-1.0)) <= 4.0 * std::sqrt(var_exact / 20000));
  CHECK(std::abs(var - var_exact) <= 4.0 * var_exact * std::sqrt(2.0 / 20000));
}

TEST_CASE("power noise map") {
  Vec u(4);
  u << 4.0, -9.0, 0.0, 1.0;
  const Vec b = power_noise_map(u, 0.5);
  CHECK(b[0] == doctest::Approx(2.0));
  CHECK(b[1] == doctest::Approx(-3.0));
  CHECK(b[2] == 0.0);
  CHECK(b[3] == doctest::Approx(1.0));
  CHECK((power_noise_map(u, 1.0) - u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("preconditions") {
  ProblemSpec q = small(Family::heat_multiplicative);
  q.q = 0.4;
  CHECK_THROWS_WITH_AS(build_heat_multiplicative(q), doctest::Contains("PRECONDITION_Q_RANGE"), Error);
  q.q = 1.2;
  CHECK_THROWS_WITH_AS(build_heat_multiplicative(q), doctest::Contains("PRECONDITION_Q_RANGE"), Error);

  ProblemSpec d = small(Family::divergence_form);
  d.beta = "cubic";
  CHECK_THROWS_WITH_AS(build_divergence_form(d), doctest::Contains("PRECONDITION_GROWTH"), Error);

  ProblemSpec h = small(Family::heat_transport);
  h.dim = 2;
  h.a_field = "radial";
  h.a_amplitude = -1.0;
  CHECK_THROWS_WITH_AS(build_heat_transport(h), doctest::Contains("PRECONDITION_DIV_A"), Error);
  h.a_amplitude = 1.0;
  CHECK_THROWS_WITH_AS(build_heat_transport(h), doctest::Contains("PRECONDITION_DIV_A"), Error);
  h.a_field = "bump";
  h.a_amplitude = 5.0;
  CHECK_NOTHROW(build_heat_transport(h));

  ProblemSpec pl = small(Family::p_laplacian);
  pl.p = 1.5;
  CHECK_THROWS_AS(build_p_laplacian(pl), Error);
  ProblemSpec bad = small(Family::heat_transport);
  bad.noise.shape = "spiky";
  CHECK_THROWS_WITH_AS(build_problem(bad), doctest::Contains("noise.shape"), Error);
}

TEST_CASE("shipped problems pass their audits") {
  std::vector<ProblemSpec> specs;
  for (Family f : {Family::ou_scalar, Family::heat_transport, Family::porous_media, Family::p_laplacian,
                   Family::divergence_form, Family::heat_multiplicative}) {
    specs.push_back(small(f));
  }
  ProblemSpec adv = small(Family::heat_transport);
  adv.dim = 2;
  adv.a_field = "bump";
  adv.a_amplitude = 5.0;
  specs.push_back(adv);
  ProblemSpec id = small(Family::divergence_form);
  id.beta = "identity";
  specs.push_back(id);
  for (const auto& s : specs) {
    CAPTURE(s.name);
    const auto audit = audit_problem(build_problem(s));
    for (const auto& i : audit.items) {
      CAPTURE(i.name);
      CAPTURE(i.value);
      CHECK(i.pass);
    }
    CHECK(audit.pass());
  }
}

TEST_CASE("porous media conjugate in the H^-1 pairing") {
  for (double p : {1.0, 2.0, 3.0}) {
    ProblemSpec s = small(Family::porous_media, 9);
    s.p = p;
    const auto cp = build_porous_media(s);
    const auto& g = *cp.problem.grid;
    const Mat neg_lap = -Mat(g.laplacian());
    Vec ustar = g.sample([](double x, double) { return std::cos(3.0 * x) - 0.4; });
    const Vec w = neg_lap.partialPivLu().solve(ustar);
    double oracle = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) oracle += std::pow(std::abs(w[i]), (p + 1.0) / p) * g.cell_volume();
    oracle *= p / (p + 1.0);
    const Vec zero = Vec::Zero(g.size());
    CHECK(cp.problem.lagrangian.value(zero, ustar) == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("porous media with p = 1 is the heat equation") {
  auto ens = make_ensemble(6, 32, 0.25, 3);
  ProblemSpec pm = small(Family::porous_media);
  pm.p = 1.0;
  pm.noise = {"smooth", 0.3};
  ProblemSpec ht = small(Family::heat_transport);
  ht.u0 = pm.u0;
  ht.noise = pm.noise;
  const auto a = build_porous_media(pm, ens);
  const auto b = build_heat_transport(ht, ens);
  CHECK(max_diff(reference_step(a.problem), reference_step(b.problem)) <= 1e-10);
  CHECK(max_diff(minimize(a.problem, SolverConfig{}).process, minimize(b.problem, SolverConfig{}).process) <= 1e-10);
}

TEST_CASE("identity flux reproduces the heat equation") {
  auto ens = make_ensemble(6, 32, 0.25, 3);
  ProblemSpec d = small(Family::divergence_form);
  d.beta = "identity";
  ProblemSpec h = small(Family::heat_transport);
  const auto a = build_divergence_form(d, ens);
  const auto b = build_heat_transport(h, ens);
  CHECK(max_diff(minimize(a.problem, SolverConfig{}).process, minimize(b.problem, SolverConfig{}).process) <= 1e-8);
}

TEST_CASE("divergence form: flux gap vanishes nodewise at the minimizer") {
  const auto cp = build_divergence_form(small(Family::divergence_form, 16, 10, 64));
  const auto r = minimize(cp.problem, SolverConfig{});
  const auto density = fenchel_gap_density(cp.problem, r.process);
  CHECK(fraction_below(density, 1e-6) >= 0.99);
  CHECK(density.minCoeff() >= -1e-10);
}

TEST_CASE("deterministic energy dissipation") {
  for (Family f : {Family::heat_transport, Family::porous_media, Family::p_laplacian}) {
    ProblemSpec s = small(f, 12, 1, 40);
    s.noise = {"none", 0.0};
    const auto cp = build_problem(s);
    const auto r = minimize(cp.problem, SolverConfig{});
    const auto& phi = cp.problem.lagrangian.potential();
    double prev = phi.value(r.process.state(0, 0));
    for (int n = 1; n <= 40; ++n) {
      const double e = phi.value(r.process.state(0, n));
      CHECK(e <= prev + 1e-14);
      prev = e;
    }
    CHECK(prev < phi.value(r.process.state(0, 0)));
  }
}

TEST_CASE("OU exact solution is built on the problem ensemble") {
  const auto cp = build_ou(small(Family::ou_scalar, 0, 50, 64));
  REQUIRE(cp.exact);
  const auto ex = cp.exact(*cp.problem.ensemble);
  REQUIRE(ex.size() == 50);
  CHECK(ex[0](0, 0) == 1.0);
  CHECK(path_l2_distance(ex, ex, *cp.problem.metric(), cp.problem.dt()) == 0.0);
}

}  // TEST_SUITE
