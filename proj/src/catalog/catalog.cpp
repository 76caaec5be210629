#include "sdspde/catalog/catalog.hpp"

#include "sdspde/error.hpp"
#include "sdspde/spatial/lifted.hpp"
#include "sdspde/spatial/operators.hpp"
#include "sdspde/util/parallel.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace sdspde {

using Mat = Eigen::MatrixXd;

namespace {

constexpr double kPi = std::numbers::pi;

SpMat identity(int n) {
  SpMat e(n, n);
  e.setIdentity();
  return e;
}

double bump(double s) {
  const double r = (s - 0.5) / 0.25;
  return std::abs(r) < 1.0 ? (1.0 - r * r) * (1.0 - r * r) : 0.0;
}

// sin^2 bump supported on [0.2, 0.8].
double stream_bump(double s) {
  if (s <= 0.2 || s >= 0.8) return 0.0;
  const double v = std::sin(kPi * (s - 0.2) / 0.6);
  return v * v;
}

Vec field_from_shape(const SpatialDiscretization& grid, const FieldShape& f, const char* what) {
  const bool two = grid.dimension() == 2;
  if (f.shape == "none") return Vec::Zero(grid.size());
  if (f.shape == "constant") return Vec::Constant(grid.size(), f.amplitude);
  if (f.shape == "sine" || f.shape == "smooth") {
    return f.amplitude * grid.sample([two](double x, double y) { return std::sin(kPi * x) * (two ? std::sin(kPi * y) : 1.0); });
  }
  if (f.shape == "bump") {
    return f.amplitude * grid.sample([two](double x, double y) { return bump(x) * (two ? bump(y) : 1.0); });
  }
  if (f.shape == "pulse") {
    Vec v = Vec::Zero(grid.size());
    int best = 0;
    double dist = HUGE_VAL;
    for (int i = 0; i < grid.size(); ++i) {
      const auto c = grid.coordinate(i);
      const double d = std::abs(c[0] - 0.5) + (two ? std::abs(c[1] - 0.5) : 0.0);
      if (d < dist - 1e-14) {
        dist = d;
        best = i;
      }
    }
    v[best] = f.amplitude / std::sqrt(grid.cell_volume());
    return v;
  }
  throw Error(ErrorCode::config_error, std::string(what) + ".shape: unknown shape '" + f.shape + "'");
}

EnsemblePtr ensemble_for(const ProblemSpec& s, EnsemblePtr ens) {
  if (ens) return ens;
  return make_ensemble(s.paths, s.steps, s.horizon, s.seed);
}

std::shared_ptr<const SpatialDiscretization> grid_for(const ProblemSpec& s) {
  return std::make_shared<const SpatialDiscretization>(build_grid(s.dim, s.k));
}

CatalogProblem finish(const ProblemSpec& s, std::shared_ptr<const SpatialDiscretization> grid, SelfDualLagrangian l,
                      const Vec& noise, EnsemblePtr ens) {
  const Vec u0 = grid ? field_from_shape(*grid, s.u0, "u0") : Vec::Constant(1, s.u0.amplitude);
  auto prob = make_additive_problem(s.name, grid, std::move(l), u0, {constant_noise(noise, ens->steps())}, ens);
  return CatalogProblem{s, std::move(prob), std::nullopt, nullptr, std::nullopt, 0.0, std::nullopt, 0.0};
}

// Smallest and largest eigenvalues of the Dirichlet Laplacian stencil.
double lap_min(const SpatialDiscretization& g) {
  const double s = std::sin(kPi * g.h() / 2);
  return g.dimension() * 4.0 / (g.h() * g.h()) * s * s;
}
double lap_max(const SpatialDiscretization& g) {
  const double c = std::cos(kPi * g.h() / 2);
  return g.dimension() * 4.0 / (g.h() * g.h()) * c * c;
}

ScalarPotential flux_potential(const std::string& name) {
  if (name == "identity") return quadratic_potential();
  if (name == "arctan") return arctan_flux_potential();
  if (name == "cubic") {
    ScalarPotential p;
    p.name = "x^3";
    p.value = [](double y) { return y * y * y * y / 4.0; };
    p.derivative = [](double y) { return y * y * y; };
    p.second = [](double y) { return 3.0 * y * y; };
    return p;
  }
  throw Error(ErrorCode::config_error, "beta: unknown flux '" + name + "'");
}

void require_family(const ProblemSpec& s, Family f) {
  if (s.family != f) {
    throw Error(ErrorCode::invalid_argument, std::string("spec family is ") + to_string(s.family) + ", builder expects " +
                                                 to_string(f));
  }
}

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::ou_scalar: return "ou_scalar";
    case Family::heat_transport: return "heat_transport";
    case Family::porous_media: return "porous_media";
    case Family::p_laplacian: return "p_laplacian";
    case Family::divergence_form: return "divergence_form";
    case Family::heat_multiplicative: return "heat_multiplicative";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  for (Family f : {Family::ou_scalar, Family::heat_transport, Family::porous_media, Family::p_laplacian,
                   Family::divergence_form, Family::heat_multiplicative}) {
    if (s == to_string(f)) return f;
  }
  throw Error(ErrorCode::config_error, "problem.family: unknown family '" + s + "'");
}

ProblemSpec default_spec(Family f) {
  ProblemSpec s;
  s.family = f;
  s.name = to_string(f);
  switch (f) {
    case Family::ou_scalar:
      s.u0 = {"constant", 1.0};
      s.noise = {"constant", 0.5};
      s.dim = 0;
      s.k = 0;
      s.paths = 200;
      s.horizon = 1.0;
      break;
    case Family::heat_transport:
      break;
    case Family::porous_media:
      s.p = 2.0;
      s.u0 = {"bump", 1.0};
      s.noise = {"smooth", 0.1};
      break;
    case Family::p_laplacian:
      s.p = 3.0;
      break;
    case Family::divergence_form:
      s.beta = "arctan";
      break;
    case Family::heat_multiplicative:
      s.q = 0.5;
      s.u0 = {"sine", 4.0};
      s.noise = {"none", 0.0};
      s.steps = 128;
      break;
  }
  return s;
}

CatalogProblem build_ou(const ProblemSpec& s, EnsemblePtr ens) {
  require_family(s, Family::ou_scalar);
  ens = ensemble_for(s, ens);
  const auto phi = ConvexFunction::quadratic_form(identity(1));
  if (s.noise.shape != "constant" && s.noise.shape != "none") {
    throw Error(ErrorCode::config_error, "noise.shape: the scalar OU problem takes constant noise");
  }
  const double b = s.noise.shape == "none" ? 0.0 : s.noise.amplitude;
  auto cp = finish(s, nullptr, SelfDualLagrangian::basic(phi, identity_metric(1)), Vec::Constant(1, b), ens);
  const double u0 = s.u0.amplitude;
  cp.exact = [u0, b](const BrownianEnsemble& e) { return ou_exact(e, u0, b); };
  cp.drift_map = MonotoneMap::gradient(phi, Growth{1.0, 1.0, 0.0, 0.0, 2.0});
  return cp;
}

CatalogProblem build_heat_transport(const ProblemSpec& s, EnsemblePtr ens) {
  require_family(s, Family::heat_transport);
  ens = ensemble_for(s, ens);
  auto grid = grid_for(s);
  const double w = grid->cell_volume();
  const int n = grid->size();
  SpMat q = SpMat(-grid->laplacian()) * w;
  double div_min = 0.0;
  std::optional<SpMat> gamma;
  if (s.a_field == "bump" || s.a_field == "radial") {
    if (grid->dimension() != 2) {
      throw Error(ErrorCode::config_error, "a_field: '" + s.a_field + "' needs a 2-D grid");
    }
    const double amp = s.a_amplitude;
    const AField a =
        s.a_field == "bump"
            ? stream_field(*grid, [amp](double x, double y) { return amp * stream_bump(x) * stream_bump(y); })
            : field_from_function(
                  *grid, [amp](double x, double) { return amp * (x - 0.5); },
                  [amp](double, double y) { return amp * (y - 0.5); });
    const Vec div = discrete_divergence(*grid, a);
    div_min = div.minCoeff();
    if (div_min < -1e-12) {
      throw Error(ErrorCode::precondition_div_a, "div a = " + std::to_string(div_min) + " < 0 on the grid");
    }
    if (boundary_speed(*grid, a) > 0.0) {
      throw Error(ErrorCode::precondition_div_a, "a is not compactly supported (nonzero next to the boundary)");
    }
    SpMat d(n, n);
    for (int i = 0; i < n; ++i) d.insert(i, i) = 0.5 * w * div[i];
    q += d;
    gamma = skew_transport_matrix(*grid, a);
  } else if (s.a_field != "none") {
    throw Error(ErrorCode::config_error, "a_field: unknown field '" + s.a_field + "'");
  }
  const auto phi = ConvexFunction::quadratic_form(q);
  const Vec noise = field_from_shape(*grid, s.noise, "noise");
  auto l = gamma ? SelfDualLagrangian::skew_shifted(phi, *gamma, grid->l2_metric())
                 : SelfDualLagrangian::basic(phi, grid->l2_metric());
  auto cp = finish(s, grid, l, noise, ens);
  cp.div_a_min = div_min;
  cp.transport = gamma;
  const Growth gr{0.99 * w * lap_min(*grid), gamma ? 0.0 : 0.99 / (w * lap_max(*grid)), 0.0, 0.0, 2.0};
  cp.drift_map = gamma ? MonotoneMap::gradient_plus_skew(phi, SpMat(-w * *gamma), gr) : MonotoneMap::gradient(phi, gr);
  return cp;
}

CatalogProblem build_porous_media(const ProblemSpec& s, EnsemblePtr ens) {
  require_family(s, Family::porous_media);
  if (!(s.p >= 1.0)) throw Error(ErrorCode::invalid_argument, "porous_media needs p >= 1");
  ens = ensemble_for(s, ens);
  auto grid = grid_for(s);
  const double w = grid->cell_volume();
  const auto phi = ConvexFunction::power_norm(s.p + 1.0, grid->size(), w);
  auto cp = finish(s, grid, SelfDualLagrangian::basic(phi, grid->h_minus_one_metric()),
                   field_from_shape(*grid, s.noise, "noise"), ens);
  const double alpha = s.p + 1.0;
  cp.drift_map =
      MonotoneMap::gradient(phi, Growth{0.99 * w * std::pow(grid->size(), 1.0 - alpha / 2.0), 0.0, 0.0, 0.0, alpha});
  return cp;
}

CatalogProblem build_p_laplacian(const ProblemSpec& s, EnsemblePtr ens) {
  require_family(s, Family::p_laplacian);
  if (!(s.p >= 2.0)) throw Error(ErrorCode::invalid_argument, "p_laplacian needs p >= 2");
  ens = ensemble_for(s, ens);
  auto grid = grid_for(s);
  const double w = grid->cell_volume();
  const auto phi = ConvexFunction::sum(
      ConvexFunction::precomposed(ConvexFunction::power_norm(s.p, grid->edge_count(), w), grid->gradient()),
      ConvexFunction::power_norm(s.p, grid->size(), w));
  auto cp = finish(s, grid, SelfDualLagrangian::basic(phi, grid->l2_metric()), field_from_shape(*grid, s.noise, "noise"),
                   ens);
  cp.drift_map =
      MonotoneMap::gradient(phi, Growth{0.99 * w * std::pow(grid->size(), 1.0 - s.p / 2.0), 0.0, 0.0, 0.0, s.p});
  return cp;
}

CatalogProblem build_divergence_form(const ProblemSpec& s, EnsemblePtr ens) {
  require_family(s, Family::divergence_form);
  if (s.dim != 1) throw Error(ErrorCode::invalid_argument, "divergence_form is implemented on 1-D grids");
  const ScalarPotential psi = flux_potential(s.beta);
  // Linear growth audit: sup |beta(x)| / (1 + |x|) must not grow with the range.
  auto ratio = [&](double range) {
    double r = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double x = -range + 2.0 * range * i / 2000.0;
      r = std::max(r, std::abs(psi.derivative(x)) / (1.0 + std::abs(x)));
    }
    return r;
  };
  const double near = ratio(10.0), far = ratio(1000.0);
  if (far > 1.5 * near) {
    throw Error(ErrorCode::precondition_growth, "flux '" + s.beta + "' grows faster than linearly: sup |beta|/(1+|x|) is " +
                                                    std::to_string(near) + " on [-10,10] and " + std::to_string(far) +
                                                    " on [-1000,1000]");
  }
  ens = ensemble_for(s, ens);
  auto grid = grid_for(s);
  auto cp = finish(s, grid, lifted_divergence(*grid, psi), field_from_shape(*grid, s.noise, "noise"), ens);
  cp.flux_growth = far;
  const auto ones = Vec::Ones(1);
  const Growth gr = s.beta == "identity" ? Growth{1.0, 1.0, 0.0, 0.0, 2.0}
                                         : Growth{1.0, 0.5, 0.0, kPi * kPi / 4.0, 2.0};
  cp.drift_map = MonotoneMap::gradient(ConvexFunction::separable(psi, ones), gr);
  return cp;
}

Vec power_noise_map(const Vec& u, double q) {
  Vec b(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    b[i] = a == 0.0 ? 0.0 : std::pow(a, q - 1.0) * u[i];
  }
  return b;
}

CatalogProblem build_heat_multiplicative(const ProblemSpec& s, EnsemblePtr ens) {
  require_family(s, Family::heat_multiplicative);
  if (!(s.q >= 0.5 && s.q <= 1.0)) {
    throw Error(ErrorCode::precondition_q_range, "q = " + std::to_string(s.q) + " is outside [1/2, 1]");
  }
  ProblemSpec h = s;
  h.family = Family::heat_transport;
  h.a_field = "none";
  h.noise = {"none", 0.0};
  auto cp = build_heat_transport(h, ens);
  cp.spec = s;
  const double q = s.q;
  cp.multiplicative = MultiplicativeProblem{cp.problem,
                                            [q](const Vec& u) { return power_noise_map(u, q); },
                                            "|u|^(q-1) u",
                                            q,
                                            s.theta,
                                            s.max_outer,
                                            s.fp_tol,
                                            2};
  return cp;
}

CatalogProblem build_problem(const ProblemSpec& s, EnsemblePtr ens) {
  switch (s.family) {
    case Family::ou_scalar: return build_ou(s, ens);
    case Family::heat_transport: return build_heat_transport(s, ens);
    case Family::porous_media: return build_porous_media(s, ens);
    case Family::p_laplacian: return build_p_laplacian(s, ens);
    case Family::divergence_form: return build_divergence_form(s, ens);
    case Family::heat_multiplicative: return build_heat_multiplicative(s, ens);
  }
  throw Error(ErrorCode::invalid_argument, "unknown family");
}

std::vector<Mat> ou_exact(const BrownianEnsemble& ens, double u0, double b) {
  const int mm = ens.paths(), nn = ens.steps();
  const double dt = ens.dt();
  const double decay = std::exp(-dt);
  const double cov = -std::expm1(-dt);            // E[I dW]
  const double var = -0.5 * std::expm1(-2.0 * dt);  // E[I^2]
  const double resid = std::sqrt(std::max(0.0, var - cov * cov / dt));
  std::vector<Mat> out(static_cast<size_t>(mm), Mat(1, nn + 1));
  parallel_for(mm, [&](int m) {
    auto& u = out[static_cast<size_t>(m)];
    u(0, 0) = u0;
    for (int n = 0; n < nn; ++n) {
      const double integral = cov / dt * ens.dw(m, n) + resid * ens.auxiliary_normal(m, n);
      u(0, n + 1) = decay * u(0, n) + b * integral;
    }
  });
  return out;
}

bool CatalogAudit::pass() const {
  for (const auto& i : items) {
    if (!i.pass) return false;
  }
  return true;
}

CatalogAudit audit_problem(const CatalogProblem& cp) {
  CatalogAudit a;
  // Self-duality by brute-force conjugation on a small rebuild of the same family.
  ProblemSpec small = cp.spec;
  if (small.family != Family::ou_scalar) small.k = 3;
  small.paths = 1;
  small.steps = 2;
  // The transport field does not fit a 3-point grid; keep the potential and
  // restrict Gamma to a principal block (still skew for the uniform L2 metric).
  if (cp.transport) {
    small.a_field = "none";
    small.dim = 1;
  }
  const CatalogProblem tiny = build_problem(small, make_ensemble(1, 2, small.horizon, small.seed));
  SelfDualLagrangian tiny_l = tiny.problem.lagrangian;
  double box = 100.0;
  if (cp.transport) {
    const auto& gfull = *cp.problem.grid;
    const int c = gfull.node_index(gfull.points_per_axis() / 2, gfull.points_per_axis() / 2);
    const std::array<int, 3> idx{c - 1, c, c + gfull.points_per_axis()};
    const Eigen::MatrixXd dense(*cp.transport);
    SpMat block(3, 3);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double v = dense(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
        if (v != 0.0) block.insert(i, j) = v;
      }
    }
    box *= 1.0 + Eigen::MatrixXd(block).cwiseAbs().maxCoeff();
    tiny_l = SelfDualLagrangian::skew_shifted(tiny_l.potential(), block, tiny.problem.metric());
    const Eigen::MatrixXd t = dense + dense.transpose();
    a.items.push_back({"transport_skew", t.cwiseAbs().maxCoeff(), 1e-12, t.cwiseAbs().maxCoeff() <= 1e-12});
  }
  SelfDualityOptions opt;
  opt.seed = 11;
  opt.box_scale = box;
  const bool numeric = tiny_l.kind() == SelfDualLagrangian::Kind::divergence_lifted ||
                       cp.spec.family == Family::p_laplacian;
  const double tol = numeric ? 1e-5 : 1e-6;
  const auto sd = check_self_duality(tiny_l, 6, tol, opt);
  a.items.push_back({"self_duality", sd.max_abs_diff, tol, sd.pass});
  const auto bd = check_self_duality(tiny.problem.boundary, 6, 1e-6, opt);
  a.items.push_back({"boundary_identity", bd.max_abs_diff, 1e-6, bd.pass});
  if (cp.drift_map) {
    const auto c = coercivity_certificate(*cp.drift_map, 200, 2.0, 5);
    a.items.push_back({"coercivity", c.worst_margin, 0.0, c.pass});
  }
  if (cp.spec.family == Family::heat_transport && cp.spec.a_field != "none") {
    a.items.push_back({"div_a_min", cp.div_a_min, 0.0, cp.div_a_min >= -1e-12});
  }
  if (cp.spec.family == Family::divergence_form) {
    a.items.push_back({"flux_linear_growth", cp.flux_growth, 0.0, std::isfinite(cp.flux_growth)});
  }
  if (cp.spec.family == Family::heat_multiplicative) {
    a.items.push_back({"q_range", cp.spec.q, 0.0, cp.spec.q >= 0.5 && cp.spec.q <= 1.0});
  }
  return a;
}

double path_l2_distance(const std::vector<Mat>& a, const std::vector<Mat>& b, const Metric& metric, double dt) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorCode::dimension_mismatch, "trajectory sets differ in size");
  double s = 0.0;
  for (size_t m = 0; m < a.size(); ++m) {
    if (a[m].rows() != b[m].rows() || a[m].cols() != b[m].cols()) {
      throw Error(ErrorCode::dimension_mismatch, "trajectories differ in shape");
    }
    for (Eigen::Index n = 1; n < a[m].cols(); ++n) s += metric.norm_sq(a[m].col(n) - b[m].col(n)) * dt;
  }
  return std::sqrt(s / static_cast<double>(a.size()));
}

std::vector<Mat> trajectories(const ItoProcessEnsemble& proc) {
  std::vector<Mat> out;
  out.reserve(static_cast<size_t>(proc.paths()));
  for (int m = 0; m < proc.paths(); ++m) out.push_back(proc.trajectory(m));
  return out;
}

}  // namespace sdspde
