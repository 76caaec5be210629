#include "sdspde/ito/process.hpp"

#include "sdspde/error.hpp"
#include "sdspde/util/parallel.hpp"
#include "sdspde/util/splitmix.hpp"

#include <cmath>
#include <sstream>

namespace sdspde {

namespace {

void check_triple(const BrownianEnsemble& ens, const ProcessTriple& d, int dim, const char* what) {
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + ": " + msg);
  };
  if (d.x0.rows() != dim) fail("x0 has " + std::to_string(d.x0.rows()) + " rows, space has dim " + std::to_string(dim));
  if (d.x0.cols() != ens.paths()) fail("x0 has " + std::to_string(d.x0.cols()) + " paths, ensemble has " + std::to_string(ens.paths()));
  if (static_cast<int>(d.drift.size()) != ens.paths() || static_cast<int>(d.diffusion.size()) != ens.paths()) {
    fail("per-path drift/diffusion count differs from the ensemble");
  }
  for (int m = 0; m < ens.paths(); ++m) {
    const auto& a = d.drift[static_cast<size_t>(m)];
    const auto& b = d.diffusion[static_cast<size_t>(m)];
    if (a.rows() != dim || b.rows() != dim || a.cols() != ens.steps() || b.cols() != ens.steps()) {
      fail("path " + std::to_string(m) + " is not " + std::to_string(dim) + " x " + std::to_string(ens.steps()));
    }
  }
}

// Sample correlation times sqrt(M); 0 when x is constant across paths.
double correlation_z(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double mx = x.mean(), my = y.mean();
  const Eigen::VectorXd dx = x.array() - mx, dy = y.array() - my;
  const double sxx = dx.squaredNorm(), syy = dy.squaredNorm();
  if (sxx <= 1e-26 * (1.0 + mx * mx) * x.size() || syy == 0.0) return 0.0;
  return dx.dot(dy) / std::sqrt(sxx * syy) * std::sqrt(static_cast<double>(x.size()));
}

}  // namespace

ProcessTriple ProcessTriple::zeros(int dim, int paths, int steps) {
  ProcessTriple t;
  t.x0 = Eigen::MatrixXd::Zero(dim, paths);
  t.drift.assign(static_cast<size_t>(paths), Eigen::MatrixXd::Zero(dim, steps));
  t.diffusion.assign(static_cast<size_t>(paths), Eigen::MatrixXd::Zero(dim, steps));
  return t;
}

ProcessTriple operator+(const ProcessTriple& a, const ProcessTriple& b) {
  if (a.dim() != b.dim() || a.paths() != b.paths() || a.steps() != b.steps()) {
    throw Error(ErrorCode::dimension_mismatch, "process triples differ in shape");
  }
  ProcessTriple c = a;
  c.x0 += b.x0;
  for (size_t m = 0; m < c.drift.size(); ++m) {
    c.drift[m] += b.drift[m];
    c.diffusion[m] += b.diffusion[m];
  }
  return c;
}

ProcessTriple operator*(double s, const ProcessTriple& a) {
  ProcessTriple c = a;
  c.x0 *= s;
  for (size_t m = 0; m < c.drift.size(); ++m) {
    c.drift[m] *= s;
    c.diffusion[m] *= s;
  }
  return c;
}

const char* to_string(Adaptedness a) {
  switch (a) {
    case Adaptedness::unverified: return "unverified";
    case Adaptedness::by_construction: return "by_construction";
    case Adaptedness::passed: return "passed";
    case Adaptedness::failed: return "failed";
  }
  return "?";
}

std::vector<Eigen::MatrixXd> reconstruct(const BrownianEnsemble& ens, const ProcessTriple& d) {
  check_triple(ens, d, d.dim(), "reconstruct");
  const int n = ens.steps();
  const double dt = ens.dt();
  std::vector<Eigen::MatrixXd> traj(static_cast<size_t>(ens.paths()));
  parallel_for(ens.paths(), [&](int m) {
    auto& u = traj[static_cast<size_t>(m)];
    u.resize(d.dim(), n + 1);
    u.col(0) = d.x0.col(m);
    const auto& a = d.drift[static_cast<size_t>(m)];
    const auto& f = d.diffusion[static_cast<size_t>(m)];
    for (int k = 0; k < n; ++k) u.col(k + 1) = u.col(k) + a.col(k) * dt + f.col(k) * ens.dw(m, k);
  });
  return traj;
}

ProcessTriple triple_from_trajectories(const BrownianEnsemble& ens, const std::vector<Eigen::MatrixXd>& traj,
                                       const std::vector<Eigen::MatrixXd>& diffusion) {
  if (static_cast<int>(traj.size()) != ens.paths() || traj.size() != diffusion.size()) {
    throw Error(ErrorCode::dimension_mismatch, "triple_from_trajectories: path count");
  }
  const int dim = traj.empty() ? 0 : static_cast<int>(traj[0].rows());
  const int n = ens.steps();
  const double dt = ens.dt();
  ProcessTriple d = ProcessTriple::zeros(dim, ens.paths(), n);
  for (int m = 0; m < ens.paths(); ++m) {
    const auto& u = traj[static_cast<size_t>(m)];
    if (u.rows() != dim || u.cols() != n + 1) {
      throw Error(ErrorCode::dimension_mismatch, "triple_from_trajectories: trajectory shape");
    }
    d.x0.col(m) = u.col(0);
    d.diffusion[static_cast<size_t>(m)] = diffusion[static_cast<size_t>(m)];
    for (int k = 0; k < n; ++k) {
      d.drift[static_cast<size_t>(m)].col(k) =
          (u.col(k + 1) - u.col(k) - diffusion[static_cast<size_t>(m)].col(k) * ens.dw(m, k)) / dt;
    }
  }
  check_triple(ens, d, dim, "triple_from_trajectories");
  return d;
}

ItoProcessEnsemble::ItoProcessEnsemble(EnsemblePtr ens, MetricPtr h_metric, ProcessTriple data,
                                       Adaptedness adapted, std::shared_ptr<const SpatialDiscretization> grid)
    : ens_(std::move(ens)), metric_(std::move(h_metric)), grid_(std::move(grid)), data_(std::move(data)),
      adapted_(adapted) {
  if (!ens_ || !metric_) throw Error(ErrorCode::invalid_argument, "process needs an ensemble and a metric");
  check_triple(*ens_, data_, metric_->dim(), "ItoProcessEnsemble");
  if (grid_ && grid_->size() != metric_->dim()) {
    throw Error(ErrorCode::dimension_mismatch, "ItoProcessEnsemble: grid and metric sizes differ");
  }
  traj_ = reconstruct(*ens_, data_);
}

double ItoProcessEnsemble::a2_norm_sq() const {
  std::vector<double> part(static_cast<size_t>(paths()));
  const double dt = ens_->dt();
  parallel_for(paths(), [&](int m) {
    double s = metric_->norm_sq(data_.x0.col(m));
    for (int n = 0; n < steps(); ++n) {
      s += dt * metric_->norm_sq(data_.drift[static_cast<size_t>(m)].col(n));
      s += dt * metric_->norm_sq(data_.diffusion[static_cast<size_t>(m)].col(n));
    }
    part[static_cast<size_t>(m)] = s;
  });
  double total = 0.0;
  for (double v : part) total += v;
  return total / paths();
}

ItoProcessEnsemble ItoProcessEnsemble::scaled(double s) const {
  return ItoProcessEnsemble(ens_, metric_, s * data_, adapted_, grid_);
}

double duality_pairing(const ItoProcessEnsemble& u, const ProcessTriple& p) {
  if (p.paths() != u.paths() || p.steps() != u.steps() || p.dim() != u.dim() ||
      static_cast<int>(p.drift.size()) != u.paths() || static_cast<int>(p.diffusion.size()) != u.paths()) {
    throw Error(ErrorCode::ensemble_mismatch, "duality_pairing: dual triple does not live on the process ensemble");
  }
  const auto& g = *u.metric();
  const auto& d = u.data();
  const double dt = u.dt();
  std::vector<double> part(static_cast<size_t>(u.paths()));
  parallel_for(u.paths(), [&](int m) {
    const size_t i = static_cast<size_t>(m);
    double s = g.inner(p.x0.col(m), d.x0.col(m));
    for (int n = 0; n < u.steps(); ++n) {
      s += dt * g.inner(p.drift[i].col(n), d.drift[i].col(n));
      s += 0.5 * dt * g.inner(p.diffusion[i].col(n), d.diffusion[i].col(n));
    }
    part[i] = s;
  });
  double total = 0.0;
  for (double v : part) total += v;
  return total / u.paths();
}

std::string AdaptednessReport::summary() const {
  std::ostringstream os;
  os << (pass ? "adapted" : "not adapted") << ": max |z| = " << max_z << " over " << tests << " tests at "
     << probes << " probed steps";
  if (worst_step >= 0) os << " (worst at n=" << worst_step << ", lag " << worst_lag << ")";
  return os.str();
}

AdaptednessReport check_adapted(const ItoProcessEnsemble& proc, int probe_count, double threshold,
                                bool trust_certificate) {
  AdaptednessReport r;
  if (trust_certificate && proc.adaptedness() == Adaptedness::by_construction) {
    r.pass = true;
    return r;
  }
  const int mm = proc.paths(), nn = proc.steps(), d = proc.dim();
  if (mm < 2 || probe_count < 1) return r;
  const int probes = std::min(probe_count, nn);
  const auto& ens = proc.ensemble();
  const auto& data = proc.data();
  for (int i = 0; i < probes; ++i) {
    const int n = static_cast<int>((i + 0.5) * nn / probes);
    SplitMix64 rng(0x5eedull + static_cast<std::uint64_t>(n));
    Eigen::VectorXd sign(d);
    for (int j = 0; j < d; ++j) sign[j] = (rng.next() & 1u) ? 1.0 : -1.0;
    for (int part = 0; part < 2; ++part) {
      const auto& field = part == 0 ? data.drift : data.diffusion;
      for (int proj = 0; proj < 2; ++proj) {
        Eigen::VectorXd x(mm);
        for (int m = 0; m < mm; ++m) {
          const auto col = field[static_cast<size_t>(m)].col(n);
          x[m] = proj == 0 ? col.sum() : col.dot(sign);
        }
        for (int lag = 0; lag < 3 && n + lag < nn; ++lag) {
          Eigen::VectorXd y(mm);
          for (int m = 0; m < mm; ++m) y[m] = ens.dw(m, n + lag);
          const double z = std::abs(correlation_z(x, y));
          ++r.tests;
          if (z > r.max_z) {
            r.max_z = z;
            r.worst_step = n;
            r.worst_lag = lag;
          }
        }
      }
    }
  }
  r.probes = probes;
  r.pass = r.max_z <= threshold;
  return r;
}

AdaptednessReport audit_adaptedness(ItoProcessEnsemble& proc, int probe_count, double threshold) {
  auto r = check_adapted(proc, probe_count, threshold, true);
  if (proc.adaptedness() != Adaptedness::by_construction) {
    proc.set_adaptedness(r.pass ? Adaptedness::passed : Adaptedness::failed);
  }
  return r;
}

VNorms default_v_norms(const ItoProcessEnsemble& proc) {
  VNorms v;
  if (auto g = proc.grid()) {
    v.v_norm = [g](const Eigen::VectorXd& x) { return std::sqrt(g->v_norm_sq(x)); };
    v.v_star_norm = [g](const Eigen::VectorXd& x) { return std::sqrt(std::max(0.0, g->v_star_norm_sq(x))); };
  } else {
    auto h = proc.metric();
    v.v_norm = [h](const Eigen::VectorXd& x) { return std::sqrt(h->norm_sq(x)); };
    v.v_star_norm = v.v_norm;
  }
  return v;
}

YNorm y_norm(const ItoProcessEnsemble& proc, double alpha, const VNorms& norms) {
  if (!(alpha > 1.0)) throw Error(ErrorCode::invalid_argument, "y_norm needs alpha > 1");
  const double beta = alpha / (alpha - 1.0);
  const double dt = proc.dt();
  const int mm = proc.paths();
  std::vector<Eigen::Vector3d> part(static_cast<size_t>(mm));
  parallel_for(mm, [&](int m) {
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    const auto& u = proc.trajectory(m);
    const auto& d = proc.data();
    for (int n = 0; n < proc.steps(); ++n) {
      s[0] += dt * std::pow(norms.v_norm(u.col(n)), alpha);
      s[1] += dt * std::pow(norms.v_star_norm(d.drift[static_cast<size_t>(m)].col(n)), beta);
      s[2] += dt * proc.metric()->norm_sq(d.diffusion[static_cast<size_t>(m)].col(n));
    }
    part[static_cast<size_t>(m)] = s;
  });
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  for (const auto& v : part) total += v;
  total /= mm;
  return {std::pow(total[0], 1.0 / alpha), std::pow(total[1], 1.0 / beta), std::sqrt(total[2])};
}

YNorm y_norm(const ItoProcessEnsemble& proc, double alpha) { return y_norm(proc, alpha, default_v_norms(proc)); }

}  // namespace sdspde
