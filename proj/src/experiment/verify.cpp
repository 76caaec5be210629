#include "sdspde/experiment/verify.hpp"

#include "sdspde/catalog/catalog.hpp"
#include "sdspde/convex/duality.hpp"
#include "sdspde/error.hpp"
#include "sdspde/spatial/lifted.hpp"
#include "sdspde/stochastic/ito_calculus.hpp"
#include "sdspde/util/splitmix.hpp"

#include <cmath>
#include <cstdio>

namespace sdspde {

using Mat = Eigen::MatrixXd;

namespace {

class Suite {
 public:
  explicit Suite(std::string name) : name_(std::move(name)) {}
  void at_most(const std::string& check, double value, double limit) {
    lines_.push_back({name_, check, value, "<=", limit, value <= limit});
  }
  void at_least(const std::string& check, double value, double limit) {
    lines_.push_back({name_, check, value, ">=", limit, value >= limit});
  }
  std::vector<CheckLine> take() { return std::move(lines_); }

 private:
  std::string name_;
  std::vector<CheckLine> lines_;
};

Vec random_vec(SplitMix64& rng, int n, double r) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform(-r, r);
  return v;
}

std::vector<CheckLine> convex_suite(std::uint64_t seed) {
  Suite s("convex");
  SelfDualityOptions opt;
  opt.seed = seed;
  SpMat rot(2, 2);
  rot.insert(0, 1) = 1.0;
  rot.insert(1, 0) = -1.0;
  const auto grid = build_grid(1, 3);
  struct Case {
    const char* name;
    SelfDualLagrangian l;
    double tol;
    double box = 10.0;
  };
  const std::vector<Case> cases{
      {"basic", SelfDualLagrangian::basic(ConvexFunction::power_norm(3.0, 2)), 1e-6},
      {"skew_shifted", SelfDualLagrangian::skew_shifted(ConvexFunction::shifted_quadratic(Vec::Zero(2)), rot), 1e-6},
      {"noise", SelfDualLagrangian::noise(Vec::Constant(2, 0.3)), 1e-6},
      {"boundary", SelfDualLagrangian::boundary(Vec::Constant(2, -0.4)), 1e-6},
      {"moreau", moreau_regularize(SelfDualLagrangian::basic(ConvexFunction::power_norm(3.0, 2)), 0.5), 1e-6},
      {"divergence_lifted", lifted_divergence(grid, arctan_flux_potential()), 1e-5, 100.0},
  };
  for (const auto& c : cases) {
    opt.box_scale = c.box;
    const auto r = check_self_duality(c.l, 25, c.tol, opt);
    s.at_most(std::string("self_duality.") + c.name, r.max_abs_diff, c.tol);
  }

  // Fitzpatrick: above the pairing, equal to it on the graph.
  const auto beta = MonotoneMap::gradient(ConvexFunction::separable(arctan_flux_potential(), Vec::Ones(1)));
  SplitMix64 rng(seed);
  double below = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double u = rng.uniform(-3, 3), p = rng.uniform(-3, 3);
    below = std::max(below, u * p - fitzpatrick(beta, u, p, 501));
  }
  s.at_most("fitzpatrick.above_pairing", below, 1e-3);
  std::vector<double> gv, gq;
  beta.graph(501, 10.0, gv, gq);
  double on_graph = 0.0;
  for (size_t i = 0; i < gv.size(); i += 25) {
    on_graph = std::max(on_graph, std::abs(fitzpatrick(beta, gv[i], gq[i], 501) - gv[i] * gq[i]));
  }
  s.at_most("fitzpatrick.graph_equality", on_graph, 1e-10);

  // Fenchel-Young: non-negative everywhere, zero at p in the subdifferential.
  const std::vector<ConvexFunction> fs{ConvexFunction::power_norm(3.0, 2), ConvexFunction::shifted_quadratic(Vec::Ones(2)),
                                       ConvexFunction::separable(arctan_flux_potential(), Vec::Ones(2))};
  double worst_neg = 0.0, worst_eq = 0.0;
  for (const auto& f : fs) {
    for (int i = 0; i < 40; ++i) {
      const Vec x = random_vec(rng, 2, 2.0), p = random_vec(rng, 2, 2.0);
      worst_neg = std::max(worst_neg, -fenchel_young_gap(f, x, p));
      worst_eq = std::max(worst_eq, std::abs(fenchel_young_gap(f, x, f.subgradient(x))) / (1.0 + std::abs(f.value(x))));
    }
  }
  s.at_most("fenchel_young.negativity", worst_neg, 1e-10);
  s.at_most("fenchel_young.equality", worst_eq, 1e-8);

  // Moreau envelope: value at the prox point, and 1/lambda-Lipschitz smoothing below f.
  const auto g = ConvexFunction::power_norm(3.0, 2);
  const double lambda = 0.3;
  const auto env = ConvexFunction::moreau_envelope(g, lambda, identity_metric(2));
  double env_err = 0.0, above = 0.0;
  for (int i = 0; i < 40; ++i) {
    const Vec x = random_vec(rng, 2, 2.0);
    const Vec z = g.prox(lambda, x);
    env_err = std::max(env_err, std::abs(env.value(x) - g.value(z) - (x - z).squaredNorm() / (2 * lambda)));
    above = std::max(above, env.value(x) - g.value(x));
  }
  s.at_most("moreau.envelope_at_prox", env_err, 1e-9);
  s.at_most("moreau.below_function", above, 1e-12);
  return s.take();
}

ItoProcessEnsemble forward(const EnsemblePtr& e, double u0, double b, bool cubic) {
  const int mm = e->paths(), nn = e->steps();
  ProcessTriple d = ProcessTriple::zeros(1, mm, nn);
  for (int m = 0; m < mm; ++m) {
    d.x0(0, m) = u0;
    double u = u0;
    for (int n = 0; n < nn; ++n) {
      const double a = cubic ? -u * u * u - u : -u;
      d.drift[static_cast<size_t>(m)](0, n) = a;
      d.diffusion[static_cast<size_t>(m)](0, n) = b;
      u += a * e->dt() + b * e->dw(m, n);
    }
  }
  return ItoProcessEnsemble(e, identity_metric(1), std::move(d), Adaptedness::by_construction);
}

std::vector<CheckLine> ito_suite(std::uint64_t seed) {
  Suite s("ito");
  const auto fine = make_ensemble(4000, 64, 1.0, seed);
  const auto coarse = std::make_shared<const BrownianEnsemble>(coarsen(*fine, 2));
  const int mm = fine->paths(), nn = fine->steps();
  RowMatrix w(mm, nn);
  for (int m = 0; m < mm; ++m) {
    double acc = 0.0;
    for (int n = 0; n < nn; ++n) {
      w(m, n) = acc;
      acc += fine->dw(m, n);
    }
  }
  const auto iso = ito_isometry(*fine, w);
  s.at_most("isometry.z", std::abs(iso.lhs - iso.rhs) / iso.std_error, 4.0);
  s.at_most("martingale.z", std::abs(estimate_mean(ito_integral(*fine, w)).z()), 4.0);

  for (bool cubic : {false, true}) {
    const auto r = ito_formula_richardson(forward(fine, 1.0, 0.7, cubic), forward(coarse, 1.0, 0.7, cubic));
    s.at_most(cubic ? "ito_formula.cubic.z" : "ito_formula.linear.z", std::abs(r.z), 4.0);
  }
  const auto u = forward(fine, 1.0, 0.5, true), v = forward(fine, -0.5, 0.3, false);
  const auto ibp = check_integration_by_parts(u, v);
  s.at_most("integration_by_parts.residual", std::abs(ibp.residual), ibp.budget);

  auto peek = [](const EnsemblePtr& e) {
    ProcessTriple d = ProcessTriple::zeros(1, e->paths(), e->steps());
    for (int m = 0; m < e->paths(); ++m) {
      for (int n = 0; n < e->steps(); ++n) d.drift[static_cast<size_t>(m)](0, n) = e->dw(m, n) / e->dt();
    }
    return ItoProcessEnsemble(e, identity_metric(1), std::move(d));
  };
  const auto ctrl = ito_formula_richardson(peek(fine), peek(coarse));
  s.at_least("non_adapted_control.z", std::abs(ctrl.z), 10.0);
  const auto adapt = check_adapted(peek(fine), 8);
  s.at_least("non_adapted_control.adaptedness_z", adapt.max_z, 10.0);
  return s.take();
}

std::vector<CheckLine> solver_suite(std::uint64_t seed) {
  Suite s("solver");
  ProblemSpec hs = default_spec(Family::heat_transport);
  hs.k = 8;
  hs.paths = 20;
  hs.steps = 32;
  hs.seed = seed;
  const auto heat = build_heat_transport(hs);
  const auto& p = heat.problem;

  // Random adapted process: drift and F built from the past only.
  SplitMix64 rng(seed);
  ProcessTriple t = ProcessTriple::zeros(p.dim(), p.paths(), p.steps());
  for (int m = 0; m < p.paths(); ++m) {
    t.x0.col(m) = p.u0 + 0.1 * random_vec(rng, p.dim(), 1.0);
    double past = 0.0;
    for (int n = 0; n < p.steps(); ++n) {
      t.drift[static_cast<size_t>(m)].col(n) = random_vec(rng, p.dim(), 1.0) * (1.0 + past);
      t.diffusion[static_cast<size_t>(m)].col(n) = p.noise_for(m).col(n) + 0.2 * random_vec(rng, p.dim(), 1.0);
      past = std::tanh(past + p.ensemble->dw(m, n));
    }
  }
  const ItoProcessEnsemble proc(p.ensemble, p.metric(), t, Adaptedness::by_construction, p.grid);
  const auto rep = assemble_I(p, proc);
  s.at_most("decomposition_identity", std::abs(rep.decomposition_defect()), 1e-10);
  s.at_least("gaps.min", std::min({rep.fenchel_gap, rep.boundary_gap, rep.noise_gap}), 0.0);

  const auto sol = minimize(p, SolverConfig{});
  s.at_most("minimizer.noise_gap", sol.report.noise_gap, 0.0);
  s.at_most("minimizer.boundary_gap", sol.report.boundary_gap, 0.0);
  s.at_least("minimizer.certificate_fraction",
             fraction_below(fenchel_gap_density(p, sol.process), 1e-6), 0.99);
  const auto mine = residual_check(p, sol.process), ref = residual_check(p, reference_step(p));
  s.at_most("minimizer.residual_over_reference", mine.defect / ref.defect, 3.0);

  ProblemSpec os = default_spec(Family::ou_scalar);
  os.paths = 100;
  os.steps = 128;
  os.seed = seed;
  const auto ou = build_ou(os);
  const auto exact = ou.exact(*ou.problem.ensemble);
  const auto ov = minimize(ou.problem, SolverConfig{});
  const double ev = path_l2_distance(trajectories(ov.process), exact, *ou.problem.metric(), ou.problem.dt());
  const double er =
      path_l2_distance(trajectories(reference_step(ou.problem)), exact, *ou.problem.metric(), ou.problem.dt());
  s.at_most("ou.error_over_reference", ev / er, 2.0);
  return s.take();
}

std::vector<CheckLine> catalog_suite(std::uint64_t seed) {
  Suite s("catalog");
  std::vector<ProblemSpec> specs;
  for (Family f : {Family::ou_scalar, Family::heat_transport, Family::porous_media, Family::p_laplacian,
                   Family::divergence_form, Family::heat_multiplicative}) {
    specs.push_back(default_spec(f));
  }
  ProblemSpec adv = default_spec(Family::heat_transport);
  adv.name = "heat_transport_advective";
  adv.dim = 2;
  adv.k = 10;
  adv.a_field = "bump";
  adv.a_amplitude = 5.0;
  specs.push_back(adv);
  for (auto& sp : specs) {
    if (sp.family != Family::ou_scalar && sp.dim == 1) sp.k = 10;
    sp.paths = 4;
    sp.steps = 8;
    sp.seed = seed;
    const auto audit = audit_problem(build_problem(sp));
    for (const auto& i : audit.items) {
      if (i.name == "coercivity") {
        s.at_least(sp.name + "." + i.name, i.value, i.tol);
      } else if (i.name == "div_a_min") {
        s.at_least(sp.name + "." + i.name, i.value, -1e-12);
      } else if (i.name == "flux_linear_growth" || i.name == "q_range") {
        s.at_least(sp.name + "." + i.name, i.pass ? 1.0 : 0.0, 1.0);
      } else {
        s.at_most(sp.name + "." + i.name, i.value, i.tol);
      }
    }
  }
  const auto raises = [](auto&& build, ErrorCode code) {
    try {
      build();
    } catch (const Error& e) {
      return e.code() == code ? 1.0 : 0.0;
    }
    return 0.0;
  };
  ProblemSpec q = default_spec(Family::heat_multiplicative);
  q.q = 0.25;
  s.at_least("precondition.q_range", raises([&] { build_heat_multiplicative(q); }, ErrorCode::precondition_q_range), 1.0);
  ProblemSpec cub = default_spec(Family::divergence_form);
  cub.beta = "cubic";
  s.at_least("precondition.growth", raises([&] { build_divergence_form(cub); }, ErrorCode::precondition_growth), 1.0);
  ProblemSpec rad = default_spec(Family::heat_transport);
  rad.dim = 2;
  rad.a_field = "radial";
  rad.a_amplitude = -1.0;
  s.at_least("precondition.div_a", raises([&] { build_heat_transport(rad); }, ErrorCode::precondition_div_a), 1.0);
  return s.take();
}

}  // namespace

std::vector<CheckLine> run_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "convex") return convex_suite(seed);
  if (suite == "ito") return ito_suite(seed);
  if (suite == "solver") return solver_suite(seed);
  if (suite == "catalog") return catalog_suite(seed);
  if (suite == "all") {
    std::vector<CheckLine> out;
    for (const char* name : {"convex", "ito", "solver", "catalog"}) {
      auto part = run_suite(name, seed);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }
  throw Error(ErrorCode::config_error, "suite: expected convex, ito, solver, catalog or all, got '" + suite + "'");
}

std::string format_check(const CheckLine& c) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s %s.%s value=%.9g %s %.9g", c.pass ? "PASS" : "FAIL", c.suite.c_str(),
                c.name.c_str(), c.value, c.relation.c_str(), c.threshold);
  return buf;
}

}  // namespace sdspde
