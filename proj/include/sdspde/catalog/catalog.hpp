#pragma once

#include "sdspde/convex/duality.hpp"
#include "sdspde/convex/monotone_map.hpp"
#include "sdspde/solver/solver.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sdspde {

enum class Family { ou_scalar, heat_transport, porous_media, p_laplacian, divergence_form, heat_multiplicative };

const char* to_string(Family f);
/// Throws config_error for unknown names.
Family family_from_string(const std::string& s);

struct FieldShape {
  std::string shape;  // u0: sine | bump | constant; noise: none | constant | smooth | pulse
  double amplitude = 0.0;
};

struct ProblemSpec {
  std::string name;
  Family family = Family::ou_scalar;
  double p = 2.0;               // porous_media, p_laplacian
  double q = 0.5;               // heat_multiplicative
  std::string a_field = "none"; // heat_transport: none | bump (2-D stream function) | radial (amp (x - 1/2))
  double a_amplitude = 0.0;
  std::string beta = "arctan";  // divergence_form: identity | arctan | cubic
  FieldShape u0{"sine", 1.0};
  FieldShape noise{"smooth", 0.5};
  int dim = 1;
  int k = 16;
  int paths = 100;
  int steps = 256;
  double horizon = 0.25;
  std::uint64_t seed = 1;
  double theta = 0.5;  // Picard damping
  int max_outer = 30;
  double fp_tol = 1e-4;
  std::map<std::string, double> pinned;
};

/// Catalog defaults for a family (these are the shipped problems).
ProblemSpec default_spec(Family f);

struct CatalogProblem {
  ProblemSpec spec;
  AdditiveProblem problem;
  std::optional<MultiplicativeProblem> multiplicative;
  /// Exact trajectories on a directly sampled ensemble (OU only): M blocks of d x (N+1).
  std::function<std::vector<Eigen::MatrixXd>(const BrownianEnsemble&)> exact;
  /// Declared coercivity of the drift as a Euclidean monotone map.
  std::optional<MonotoneMap> drift_map;
  double div_a_min = 0.0;
  /// Skew transport matrix Gamma when a != 0.
  std::optional<SpMat> transport;
  double flux_growth = 0.0;  // sup |beta(x)| / (1 + |x|) on the widest sampled range
};

/// Build on the ProblemSpec's own ensemble or on a given one (its M and N need not match
/// the ProblemSpec; the noise is sampled on the ensemble's time grid).
CatalogProblem build_problem(const ProblemSpec& spec, EnsemblePtr ens = nullptr);

CatalogProblem build_ou(const ProblemSpec& spec = default_spec(Family::ou_scalar), EnsemblePtr ens = nullptr);
/// Throws precondition_div_a when div a < 0 somewhere or a reaches the boundary.
CatalogProblem build_heat_transport(const ProblemSpec& spec = default_spec(Family::heat_transport),
                                    EnsemblePtr ens = nullptr);
CatalogProblem build_porous_media(const ProblemSpec& spec = default_spec(Family::porous_media),
                                  EnsemblePtr ens = nullptr);
CatalogProblem build_p_laplacian(const ProblemSpec& spec = default_spec(Family::p_laplacian),
                                 EnsemblePtr ens = nullptr);
/// Throws precondition_growth when beta fails the linear growth audit.
CatalogProblem build_divergence_form(const ProblemSpec& spec = default_spec(Family::divergence_form),
                                     EnsemblePtr ens = nullptr);
/// Throws precondition_q_range unless 1/2 <= q <= 1.
CatalogProblem build_heat_multiplicative(const ProblemSpec& spec = default_spec(Family::heat_multiplicative),
                                         EnsemblePtr ens = nullptr);

/// |u|^{q-1} u nodewise (0 at 0).
Vec power_noise_map(const Vec& u, double q);

/// Exact OU solution u' = -u dt + b dW on the ensemble's increments and
/// auxiliary normals; needs a directly sampled ensemble.
std::vector<Eigen::MatrixXd> ou_exact(const BrownianEnsemble& ens, double u0, double b);

struct AuditItem {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct CatalogAudit {
  std::vector<AuditItem> items;
  bool pass() const;
};

/// Lagrangian self-duality (by brute-force conjugation on the same family
/// rebuilt at K = 3), boundary identity l*(-a,b) = l(a,b) at full size,
/// coercivity certificate and skew audit where they apply.
CatalogAudit audit_problem(const CatalogProblem& cp);

/// Path-mean L2_H distance sqrt(E sum_n |a_n - b_n|^2 dt) between trajectory sets.
double path_l2_distance(const std::vector<Eigen::MatrixXd>& a, const std::vector<Eigen::MatrixXd>& b,
                        const Metric& metric, double dt);
std::vector<Eigen::MatrixXd> trajectories(const ItoProcessEnsemble& proc);

}  // namespace sdspde
