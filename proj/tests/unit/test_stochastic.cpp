#include <doctest.h>

#include "sdspde/error.hpp"
#include "sdspde/ito/process.hpp"
#include "sdspde/stochastic/brownian.hpp"
#include "sdspde/stochastic/bundle.hpp"
#include "sdspde/stochastic/ito_calculus.hpp"
#include "sdspde/stochastic/philox.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

using namespace sdspde;

namespace {

// u_{n+1} = u_n + a(u_n) dt + b dW_n, packaged with drift a(u_n) and F = b.
ItoProcessEnsemble forward_process(EnsemblePtr ens, double u0, double (*a)(double), double b) {
  const int mm = ens->paths(), nn = ens->steps();
  ProcessTriple d = ProcessTriple::zeros(1, mm, nn);
  for (int m = 0; m < mm; ++m) {
    d.x0(0, m) = u0;
    double u = u0;
    for (int n = 0; n < nn; ++n) {
      d.drift[static_cast<size_t>(m)](0, n) = a(u);
      d.diffusion[static_cast<size_t>(m)](0, n) = b;
      u += a(u) * ens->dt() + b * ens->dw(m, n);
    }
  }
  return ItoProcessEnsemble(ens, identity_metric(1), std::move(d), Adaptedness::by_construction);
}

double minus_u(double u) { return -u; }
double cubic(double u) { return -u * u * u - u; }

EnsemblePtr share(BrownianEnsemble e) { return std::make_shared<const BrownianEnsemble>(std::move(e)); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_SUITE("stochastic") {

TEST_CASE("Philox4x32-10 known-answer vectors") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("sample_ensemble: shape, determinism, extension") {
  auto one = sample_ensemble(1, 1, 1.0, 99);
  CHECK(one.paths() == 1);
  CHECK(one.steps() == 1);
  CHECK(one.dw(0, 0) == philox_normal(99, 0, 0, 0));
  CHECK(std::isfinite(one.dw(0, 0)));

  auto a = sample_ensemble(6, 33, 2.0, 12345);
  auto b = sample_ensemble(6, 33, 2.0, 12345);
  CHECK(a.increments() == b.increments());
  CHECK(a.same_as(b));
  auto c = sample_ensemble(6, 33, 2.0, 12346);
  CHECK_FALSE(a.increments() == c.increments());
  auto big = sample_ensemble(11, 33, 2.0, 12345);
  CHECK(big.increments().topRows(6) == a.increments());
  for (int m = 0; m < 6; ++m) CHECK(regenerate_path(12345, m, 33, 2.0) == a.increments().row(m).transpose());
  CHECK(a.dt() == doctest::Approx(2.0 / 33));
  CHECK(a.w(3, 33) == doctest::Approx(a.terminal()[3]));
  CHECK(a.path(2)[0] == 0.0);

  CHECK_THROWS_AS(sample_ensemble(0, 4, 1.0, 1), Error);
  CHECK_THROWS_AS(sample_ensemble(4, 0, 1.0, 1), Error);
  CHECK_THROWS_AS(sample_ensemble(4, 4, 0.0, 1), Error);
}

TEST_CASE("increment moments") {
  auto e = sample_ensemble(400, 256, 1.0, 7);
  auto st = increment_stats(e);
  CHECK(std::abs(st.mean) <= 4 * std::sqrt(e.dt() / (400.0 * 256)));
  CHECK(std::abs(st.variance_ratio - 1.0) <= 0.05);
}

TEST_CASE("normals pass a Kolmogorov-Smirnov test") {
  std::vector<double> z;
  for (int m = 0; m < 50; ++m) {
    for (int n = 0; n < 2000; ++n) z.push_back(philox_normal(2024, m, n, 0));
  }
  std::sort(z.begin(), z.end());
  double d = 0.0;
  const double count = static_cast<double>(z.size());
  for (size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max({d, std::abs(f - i / count), std::abs(f - (i + 1) / count)});
  }
  CHECK(d < 1.63 / std::sqrt(count));
}

TEST_CASE("terminal variance matches T within a chi-square band") {
  const int mm = 10000;
  auto e = sample_ensemble(mm, 8, 1.7, 31);
  const Eigen::VectorXd w = e.terminal();
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (mm - 1);
  CHECK(std::abs(var - 1.7) <= 3 * std::sqrt(2.0 / mm) * 1.7);
}

TEST_CASE("coarsening sums increments") {
  auto f = sample_ensemble(5, 64, 1.0, 3);
  auto c = coarsen(f, 4);
  CHECK(c.steps() == 16);
  CHECK(c.coarsening() == 4);
  CHECK(c.dt() == doctest::Approx(1.0 / 16));
  for (int m = 0; m < 5; ++m) {
    CHECK(c.w(m, 16) == doctest::Approx(f.w(m, 64)).epsilon(1e-14));
    CHECK(c.dw(m, 3) == f.dw(m, 12) + f.dw(m, 13) + f.dw(m, 14) + f.dw(m, 15));
  }
  CHECK(coarsen(coarsen(f, 2), 2).increments().isApprox(c.increments(), 1e-15));
  CHECK(coarsen(coarsen(f, 2), 2).coarsening() == 4);
  CHECK_THROWS_AS(coarsen(f, 3), Error);
  CHECK_THROWS_AS(c.auxiliary_normal(0, 0), Error);
}

TEST_CASE("auxiliary stream is uncorrelated with the increments") {
  auto e = sample_ensemble(4000, 4, 1.0, 77);
  double sxy = 0, sxx = 0, syy = 0;
  for (int m = 0; m < 4000; ++m) {
    const double x = e.auxiliary_normal(m, 1), y = e.dw(m, 1);
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) * std::sqrt(4000.0) < 4.0);
}

TEST_CASE("ito_integral examples and isometry") {
  auto e = sample_ensemble(10000, 256, 1.0, 5);
  const int mm = e.paths(), nn = e.steps();
  RowMatrix one = RowMatrix::Ones(mm, nn);
  CHECK((ito_integral(e, one) - e.terminal()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ito_integral(e, RowMatrix::Zero(mm, nn)).cwiseAbs().maxCoeff() == 0.0);

  RowMatrix w(mm, nn);
  for (int m = 0; m < mm; ++m) {
    double s = 0.0;
    for (int n = 0; n < nn; ++n) {
      w(m, n) = s;
      s += e.dw(m, n);
    }
  }
  auto iso = ito_isometry(e, w);
  CHECK(iso.relative_gap < 0.05);
  CHECK(iso.rhs == doctest::Approx(0.5).epsilon(0.05));

  // Martingale property of adapted integrands.
  const auto mart = estimate_mean(ito_integral(e, w));
  CHECK(std::abs(mart.z()) < 4.0);

  std::vector<Eigen::MatrixXd> field(static_cast<size_t>(mm));
  for (int m = 0; m < mm; ++m) {
    field[static_cast<size_t>(m)] = Eigen::MatrixXd(2, nn);
    field[static_cast<size_t>(m)].row(0) = w.row(m);
    field[static_cast<size_t>(m)].row(1) = one.row(m);
  }
  const Eigen::MatrixXd fi = ito_integral(e, field);
  CHECK((fi.row(0).transpose() - ito_integral(e, w)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fi.row(1).transpose() - e.terminal()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(ito_integral(e, RowMatrix::Zero(mm, nn - 1)), Error);
}

TEST_CASE("Ito formula holds after removing the first-order defect") {
  auto fine = make_ensemble(4000, 128, 1.0, 17);
  auto coarse = share(coarsen(*fine, 2));
  for (auto a : {minus_u, cubic}) {
    auto pf = forward_process(fine, 1.0, a, 0.7);
    auto pc = forward_process(coarse, 1.0, a, 0.7);
    auto r = ito_formula_richardson(pf, pc);
    CHECK(r.consistent());
    CHECK(std::abs(r.residual) < 0.1);
  }
}

TEST_CASE("non-adapted drift breaks the Ito formula") {
  auto fine = make_ensemble(2000, 128, 1.0, 19);
  auto coarse = share(coarsen(*fine, 2));
  auto peek = [](const EnsemblePtr& e) {
    ProcessTriple d = ProcessTriple::zeros(1, e->paths(), e->steps());
    for (int m = 0; m < e->paths(); ++m) {
      for (int n = 0; n < e->steps(); ++n) d.drift[static_cast<size_t>(m)](0, n) = e->dw(m, n) / e->dt();
    }
    return ItoProcessEnsemble(e, identity_metric(1), std::move(d));
  };
  auto r = ito_formula_richardson(peek(fine), peek(coarse));
  CHECK(std::abs(r.z) > 10.0);
  CHECK(r.extrapolated == doctest::Approx(1.0).epsilon(0.15));
  CHECK_THROWS_AS(ito_formula_richardson(peek(fine), peek(fine)), Error);
}

TEST_CASE("integration by parts") {
  auto e = make_ensemble(3000, 64, 1.0, 23);
  const int mm = e->paths(), nn = e->steps();

  ProcessTriple c = ProcessTriple::zeros(1, mm, nn);
  c.x0.setConstant(2.0);
  ItoProcessEnsemble cst(e, identity_metric(1), c);
  auto r0 = check_integration_by_parts(cst, cst);
  CHECK(r0.lhs == 0.0);
  CHECK(std::abs(r0.rhs) < 1e-12);
  CHECK(r0.within_budget());

  auto u = forward_process(e, 1.0, cubic, 0.5);
  auto r1 = check_integration_by_parts(u, u);
  CHECK(r1.within_budget());

  ProcessTriple a = ProcessTriple::zeros(1, mm, nn), b = ProcessTriple::zeros(1, mm, nn);
  for (int m = 0; m < mm; ++m) {
    a.drift[static_cast<size_t>(m)].setOnes();
    b.diffusion[static_cast<size_t>(m)].setOnes();
  }
  ItoProcessEnsemble ut(e, identity_metric(1), a), vw(e, identity_metric(1), b);
  auto r2 = check_integration_by_parts(ut, vw);
  CHECK(r2.lhs == 0.0);
  CHECK(std::abs(r2.rhs) <= 3 * r2.std_error + 1e-12);
  CHECK(r2.within_budget());

  auto other = make_ensemble(3000, 64, 1.0, 24);
  ItoProcessEnsemble elsewhere(other, identity_metric(1), ProcessTriple::zeros(1, mm, nn));
  try {
    check_integration_by_parts(cst, elsewhere);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::ensemble_mismatch);
  }
}

TEST_CASE("bundle round trip and layout") {
  auto e = sample_ensemble(3, 5, 0.75, 0xABCDEF0123ull);
  ProcessTriple d = ProcessTriple::zeros(2, 3, 5);
  for (int m = 0; m < 3; ++m) {
    d.x0.col(m) << m, -m;
    d.drift[static_cast<size_t>(m)].setRandom();
    d.diffusion[static_cast<size_t>(m)].setConstant(0.1 * m);
  }
  const auto bytes = encode_bundle(e, {{"state", d}});
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "SDSPDEB1");
  CHECK(bytes[8] == 1);             // version
  CHECK(bytes[12] == kPhiloxBoxMuller);
  CHECK(bytes[16] == 3);            // M
  CHECK(bytes[24] == 5);            // N
  CHECK(bytes.size() == 8 + 4 + 4 + 8 + 8 + 8 + 8 + 4 + 4 + 8 * 15 + (4 + 4 + 5 + 8) + 8 * (6 + 2 * 30));

  auto b = decode_bundle(bytes);
  CHECK(b.ensemble->same_as(e));
  REQUIRE(b.sections.size() == 1);
  CHECK(b.sections[0].name == "state");
  CHECK(b.sections[0].data.x0 == d.x0);
  for (int m = 0; m < 3; ++m) {
    CHECK(b.sections[0].data.drift[static_cast<size_t>(m)] == d.drift[static_cast<size_t>(m)]);
    CHECK(b.sections[0].data.diffusion[static_cast<size_t>(m)] == d.diffusion[static_cast<size_t>(m)]);
  }

  const auto path = (std::filesystem::temp_directory_path() / "sdspde_bundle_test.bin").string();
  write_bundle(path, e, {});
  auto fb = read_bundle(path);
  CHECK(fb.ensemble->increments() == e.increments());
  CHECK(fb.ensemble->seed() == e.seed());
  std::remove(path.c_str());

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_bundle(bad), Error);
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  try {
    decode_bundle(cut);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::io_error);
  }
  CHECK_THROWS_AS(read_bundle("/nonexistent/bundle.bin"), Error);
}

}  // TEST_SUITE
