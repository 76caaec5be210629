#include "sdspde/error.hpp"
#include "sdspde/solver/solver.hpp"
#include "sdspde/util/parallel.hpp"

#include <cmath>
#include <optional>
#include <sstream>

namespace sdspde {

using Mat = Eigen::MatrixXd;

double growth_exponent(const std::function<Vec(const Vec&)>& b_map, const Metric& metric,
                       const std::vector<Vec>& states) {
  std::vector<double> xs, ys;
  for (const auto& u : states) {
    const double nu = metric.norm_sq(u);
    if (!(nu > 1e-300)) continue;
    const double nb = metric.norm_sq(b_map(u));
    if (!(nb > 1e-300)) continue;
    xs.push_back(0.5 * std::log(nu));
    ys.push_back(0.5 * std::log(nb));
  }
  const size_t k = xs.size();
  if (k < 2) return std::nan("");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < k; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < k; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 1e-12 * k)) return std::nan("");
  return sxy / sxx;
}

PicardResult picard_multiplicative(const MultiplicativeProblem& mp, const SolverConfig& cfg) {
  if (!mp.b_map) throw Error(ErrorCode::invalid_argument, "picard_multiplicative needs a B map");
  if (!(mp.theta > 0.0 && mp.theta <= 1.0)) throw Error(ErrorCode::invalid_argument, "damping theta must lie in (0,1]");
  if (mp.max_outer < 1) throw Error(ErrorCode::invalid_argument, "max_outer must be at least 1");
  if (!(mp.fp_tol > 0.0)) throw Error(ErrorCode::invalid_argument, "fp_tol must be positive");
  const AdditiveProblem& base = mp.base;
  const int mm = base.paths(), nn = base.steps(), d = base.dim();
  const double dt = base.dt();
  const auto& g = *base.metric();

  const Vec b0 = mp.b_map(base.u0);
  if (b0.size() != d) throw Error(ErrorCode::dimension_mismatch, "B map changes the dimension");
  std::vector<Mat> frozen(static_cast<size_t>(mm), constant_noise(b0, nn));

  std::optional<SolveResult> last;
  std::vector<Mat> last_noise;
  std::vector<double> history;
  bool converged = false;
  int rises = 0;
  for (int k = 0; k < mp.max_outer; ++k) {
    SolveResult sol = minimize(with_noise(base, frozen), cfg);
    std::vector<Mat> mapped(static_cast<size_t>(mm), Mat(d, nn));
    std::vector<double> res(static_cast<size_t>(mm));
    parallel_for(mm, [&](int m) {
      const auto& u = sol.process.trajectory(m);
      auto& bm = mapped[static_cast<size_t>(m)];
      double s = 0.0;
      for (int n = 0; n < nn; ++n) {
        bm.col(n) = mp.b_map(u.col(n));
        s += g.norm_sq(frozen[static_cast<size_t>(m)].col(n) - bm.col(n)) * dt;
      }
      res[static_cast<size_t>(m)] = s;
    });
    double r = 0.0;
    for (double v : res) r += v;
    r /= mm;
    history.push_back(r);
    if (k > mp.burn_in && r > history[static_cast<size_t>(k - 1)]) {
      ++rises;
    } else {
      rises = 0;
    }
    last = std::move(sol);
    last_noise = frozen;
    if (r <= mp.fp_tol) {
      converged = true;
      break;
    }
    if (rises >= 3) {
      std::ostringstream s;
      s << "Picard residual increased for 3 consecutive outer iterations (last " << r << ")";
      throw Error(ErrorCode::diverged, s.str());
    }
    for (int m = 0; m < mm; ++m) {
      frozen[static_cast<size_t>(m)] = (1.0 - mp.theta) * frozen[static_cast<size_t>(m)] + mp.theta * mapped[static_cast<size_t>(m)];
    }
  }
  if (!converged) {
    std::ostringstream s;
    s << "Picard residual " << history.back() << " > fp_tol " << mp.fp_tol << " after " << mp.max_outer
      << " outer iterations";
    throw Error(ErrorCode::no_convergence, s.str());
  }
  PicardResult out{std::move(*last), std::move(last_noise), std::move(history)};
  out.converged = true;
  out.monotone_after_burn_in = true;
  for (size_t k = static_cast<size_t>(mp.burn_in) + 1; k < out.residuals.size(); ++k) {
    out.monotone_after_burn_in = out.monotone_after_burn_in && out.residuals[k] <= out.residuals[k - 1];
  }

  std::vector<Vec> states;
  const int stride = std::max(1, nn / 16);
  for (int m = 0; m < mm; ++m) {
    for (int n = 0; n <= nn; n += stride) states.push_back(out.solution.process.state(m, n));
  }
  out.growth_exponent = growth_exponent(mp.b_map, g, states);
  if (std::isfinite(out.growth_exponent) && out.growth_exponent > mp.declared_growth + 0.1) {
    std::ostringstream s;
    s << "empirical growth exponent " << out.growth_exponent << " exceeds the declared " << mp.declared_growth
      << " + 0.1";
    throw Error(ErrorCode::precondition_growth, s.str());
  }
  return out;
}

}  // namespace sdspde
