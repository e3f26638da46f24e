#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tumor/diagnostics.hpp"
#include "tumor/solver_core.hpp"

using namespace tumor;

namespace {

SolverConfig pme_config(double dt) {
  SolverConfig cfg;
  cfg.dt = dt;
  cfg.params.G0 = 0.0;
  cfg.solve_nutrient = false;
  return cfg;
}

SimState barenblatt_state(const Grid2D& g, double cB = 0.1) {
  return {barenblatt_ic(2.0, g), Field2D(g, cB), 0.0};
}

double max_error_vs_barenblatt(const Field2D& f, const Grid2D& g, double t, double a) {
  double e = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      e = std::max(e, std::abs(f(i, j) - barenblatt_profile(2.0, std::hypot(g.x(i), g.y(j)), t, a)));
  return e;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

TEST(Grid, CenteredSquare) {
  const auto g = Grid2D::centered_square(101, 20.0);
  EXPECT_DOUBLE_EQ(g.dx, 0.2);
  EXPECT_DOUBLE_EQ(g.x(0), -10.0);
  EXPECT_NEAR(g.x(100), 10.0, 1e-12);
  EXPECT_NEAR(g.y(50), 0.0, 1e-12);
  EXPECT_THROW(Grid2D::centered_square(2, 1.0), DomainError);
}

TEST(InitialCondition, BarenblattShape) {
  EXPECT_EQ(barenblatt_profile(2.0, 0.0, 0.0), 1.0);
  EXPECT_EQ(barenblatt_profile(2.0, barenblatt_edge(2.0), 0.0), 0.0);
  EXPECT_EQ(barenblatt_profile(2.0, 5.0, 0.0), 0.0);
  const auto g = Grid2D::centered_square(101, 20.0);
  const auto f = barenblatt_ic(2.0, g);
  EXPECT_EQ(*std::max_element(f.data.begin(), f.data.end()), 1.0);
  EXPECT_THROW(barenblatt_ic(0.0, g), DomainError);
}

TEST(InitialCondition, BarenblattMassMatchesLaterTime) {
  const auto g = Grid2D::centered_square(201, 20.0);
  Field2D later(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) later(i, j) = barenblatt_profile(2.0, std::hypot(g.x(i), g.y(j)), 1.0);
  const double m0 = total_mass(barenblatt_ic(2.0, g), g);
  EXPECT_NEAR(total_mass(later, g), m0, 1e-3 * m0);
}

TEST(InitialCondition, PerturbationOffIsIdentity) {
  const auto g = Grid2D::centered_square(41, 20.0);
  const auto base = [](double r) { return barenblatt_profile(2.0, r, 0.0); };
  const auto p = perturbed_ic(base, barenblatt_edge(2.0), 8, 0.0, g);
  EXPECT_EQ(p.field.data, barenblatt_ic(2.0, g).data);
  EXPECT_FALSE(p.linear_theory_warning);
  EXPECT_TRUE(perturbed_ic(base, 1.0, 8, 0.3, g).linear_theory_warning);
  EXPECT_THROW(perturbed_ic(base, 1.0, 0, 0.1, g), DomainError);
}

TEST(ModelTerms, SmoothedIndicator) {
  EXPECT_EQ(smoothed_indicator(0.0, 5.0).H, 0.0);
  EXPECT_EQ(smoothed_indicator(-1.0, 5.0).dH, 0.0);
  EXPECT_NEAR(smoothed_indicator(0.2, 5.0).H, 0.76159, 1e-5);
  EXPECT_NEAR(smoothed_indicator(50.0, 5.0).H, 1.0, 1e-15);
  EXPECT_NEAR(smoothed_indicator(1e-12, 5.0).H, 0.0, 1e-10);
  for (double r = 0.01; r < 3.0; r += 0.07) {
    const auto h = smoothed_indicator(r, 5.0);
    EXPECT_GE(h.dH, 0.0);
    EXPECT_NEAR(h.dH, (smoothed_indicator(r + 1e-6, 5.0).H - smoothed_indicator(r - 1e-6, 5.0).H) / 2e-6, 1e-6);
  }
}

TEST(ModelTerms, Psi) {
  ModelParams p;
  EXPECT_DOUBLE_EQ(psi(0.0, 0.04, p), -(p.cB - 0.04));
  EXPECT_NEAR(psi(0.2, 0.05, p), -0.008113, 1e-6);
  EXPECT_NEAR(psi(20.0, p.cB, p), p.lambda * 20.0 * p.cB, 1e-12);
}

TEST(Tridiagonal, MatchesDenseOracle) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + trial % 40;
    std::vector<double> sub(n - 1), diag(n), sup(n - 1), rhs(n);
    std::vector<std::vector<double>> A(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      if (i + 1 < n) {
        sub[i] = u(rng);
        sup[i] = u(rng);
        A[i + 1][i] = sub[i];
        A[i][i + 1] = sup[i];
      }
      diag[i] = 2.5 + u(rng);
      A[i][i] = diag[i];
      rhs[i] = u(rng);
    }
    const auto x = tridiag_solve(sub, diag, sup, rhs);
    const auto y = oracle::dense_solve(A, rhs);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(x[i], y[i], 1e-12);
  }
}

TEST(Tridiagonal, TrivialSystemsAndZeroPivot) {
  EXPECT_DOUBLE_EQ(tridiag_solve({}, {4.0}, {}, {2.0})[0], 0.5);
  const std::vector<double> rhs{1.0, -2.0, 3.0, 4.0};
  EXPECT_EQ(tridiag_solve({0, 0, 0}, {1, 1, 1, 1}, {0, 0, 0}, rhs), rhs);
  EXPECT_THROW(tridiag_solve({1.0}, {0.0, 1.0}, {1.0}, {1.0, 1.0}), ZeroPivotError);
  EXPECT_THROW(tridiag_solve({1.0}, {1.0, 1.0}, {1.0}, {1.0, 1.0}), ZeroPivotError);
  EXPECT_THROW(tridiag_solve({}, {1.0, 1.0}, {}, {1.0, 1.0}), DomainError);
}

TEST(StepAdi, PureMassIsConserved) {
  const auto g = Grid2D::centered_square(51, 20.0);
  auto cfg = pme_config(0.05);
  SimState s = barenblatt_state(g);
  const double m0 = total_mass(s.rho, g);
  const auto c0 = centroid(s.rho, g);
  s = step_adi(s, g, cfg);
  EXPECT_NEAR(total_mass(s.rho, g), m0, 1e-10 * m0);
  for (int n = 1; n < 100; ++n) s = step_adi(s, g, cfg);
  EXPECT_NEAR(total_mass(s.rho, g), m0, 1e-8 * m0);
  const auto c1 = centroid(s.rho, g);
  EXPECT_NEAR(c1.first, c0.first, 1e-8 * g.L);
  EXPECT_NEAR(c1.second, c0.second, 1e-8 * g.L);
  EXPECT_NEAR(s.t, 5.0, 1e-12);
}

TEST(StepAdi, UniformStateIsFixedPoint) {
  const auto g = Grid2D::centered_square(21, 10.0);
  SolverConfig cfg;
  cfg.params.G0 = 0.0;
  SimState s{Field2D(g, 0.7), Field2D(g, cfg.params.cB), 0.0};
  auto cfg_pme = cfg;
  cfg_pme.solve_nutrient = false;
  for (const auto& c : {cfg_pme, cfg}) {
    const auto next = step_adi(s, g, c);
    for (std::size_t n = 0; n < g.size(); ++n) EXPECT_NEAR(next.rho.data[n], 0.7, 1e-12);
  }
  SimState empty{Field2D(g, 0.0), Field2D(g, cfg.params.cB), 0.0};
  const auto next = step_adi(empty, g, cfg);
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_EQ(next.rho.data[n], 0.0);
    EXPECT_NEAR(next.c.data[n], cfg.params.cB, 1e-12);
  }
}

TEST(StepAdi, OneStepApproachesSimilaritySolution) {
  const auto g = Grid2D::centered_square(81, 20.0);
  std::vector<double> errs;
  for (double dt : {0.04, 0.02, 0.01}) {
    auto cfg = pme_config(dt);
    const auto s = step_adi(barenblatt_state(g), g, cfg);
    errs.push_back(max_error_vs_barenblatt(s.rho, g, dt, cfg.pme_coefficient()));
  }
  EXPECT_LT(errs[1], errs[0]);
  EXPECT_LT(errs[2], errs[1]);
  EXPECT_LT(errs[0], 0.1);
}

TEST(StepAdi, SymmetryAndNutrientBounds) {
  const auto g = Grid2D::centered_square(41, 20.0);
  SolverConfig cfg;
  SimState s = barenblatt_state(g, cfg.params.cB);
  for (int n = 0; n < 10; ++n) {
    StepReport rep;
    s = step_adi(s, g, cfg, &rep);
    EXPECT_LE(axis_asymmetry(s.rho), 1e-9);
    EXPECT_TRUE(strictly_decreasing(rep.rho_residuals));
    EXPECT_LE(rep.rho_residuals.back(), cfg.newton_tol);
    EXPECT_LE(rep.c_residuals.back(), cfg.newton_tol);
    for (double c : s.c.data) {
      EXPECT_GE(c, -1e-6);
      EXPECT_LE(c, cfg.params.cB + 1e-6);
    }
    EXPECT_GE(*std::min_element(s.rho.data.begin(), s.rho.data.end()), -1e-6);
  }
}

TEST(StepAdi, CouplingOrdersAgreeToFirstOrder) {
  const auto g = Grid2D::centered_square(31, 20.0);
  SolverConfig a, b, c;
  a.dt = b.dt = c.dt = 0.01;
  b.coupling = {CouplingOrder::RhoThenC, 1};
  c.coupling = {CouplingOrder::IteratePair, 3};
  const auto s0 = barenblatt_state(g);
  const auto sa = step_adi(s0, g, a), sb = step_adi(s0, g, b), sc = step_adi(s0, g, c);
  double dab = 0.0, dac = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    dab = std::max(dab, std::abs(sa.rho.data[n] - sb.rho.data[n]));
    dac = std::max(dac, std::abs(sa.rho.data[n] - sc.rho.data[n]));
  }
  EXPECT_LT(dab, 1e-3);
  EXPECT_LT(dac, 1e-3);
}

TEST(StepAdi, RejectsBadInput) {
  const auto g = Grid2D::centered_square(11, 10.0);
  SolverConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(step_adi(barenblatt_state(g), g, cfg), DomainError);
  cfg.dt = 0.1;
  const auto g2 = Grid2D::centered_square(13, 10.0);
  EXPECT_THROW(step_adi(barenblatt_state(g), g2, cfg), DomainError);
}

TEST(StepAdi, ConvergenceFailureReportsResidual) {
  const auto g = Grid2D::centered_square(21, 20.0);
  auto cfg = pme_config(0.5);
  cfg.newton_max_iter = 1;
  try {
    step_adi(barenblatt_state(g), g, cfg);
    FAIL() << "expected a convergence error";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.last_residual(), cfg.newton_tol);
  }
}

// One factorised Newton update vs the exact (dense) one: the gap is the
// dropped dt^2 Lx G D0^{-1} Ly G term.
TEST(Factorization, DiffersFromDenseUpdateAtSecondOrder) {
  const auto g = Grid2D::centered_square(11, 4.0);
  const std::size_t n = g.size();
  Field2D d0(g, 1.0), gg(g), F(g);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t q = 0; q < n; ++q) {
    gg.data[q] = 0.5 + u(rng);
    F.data[q] = u(rng) - 0.5;
  }
  std::vector<std::vector<double>> lap(n, std::vector<double>(n));
  for (std::size_t q = 0; q < n; ++q) {
    Field2D e(g);
    e.data[q] = 1.0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) lap[static_cast<std::size_t>(j) * g.nx + i][q] = detail::laplacian_at(e, g, i, j);
  }
  auto gap = [&](double coef) {
    std::vector<std::vector<double>> J(n, std::vector<double>(n));
    std::vector<double> rhs(n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t q = 0; q < n; ++q) J[r][q] = (r == q ? 1.0 : 0.0) - coef * lap[r][q] * gg.data[q];
      rhs[r] = -F.data[r];
    }
    const auto exact = oracle::dense_solve(J, rhs);
    Field2D delta;
    detail::factorized_update(g, d0, gg, coef, F, delta);
    double m = 0.0;
    for (std::size_t q = 0; q < n; ++q) m = std::max(m, std::abs(delta.data[q] - exact[q]));
    return m;
  };
  const double e1 = gap(1e-3), e2 = gap(5e-4);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(Factorization, KrylovUpdateSolvesExactJacobian) {
  const auto g = Grid2D::centered_square(21, 4.0);
  Field2D d0(g, 1.0), gg(g), F(g), delta;
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t q = 0; q < g.size(); ++q) {
    gg.data[q] = u(rng);
    F.data[q] = u(rng) - 0.5;
  }
  const double coef = 0.05;
  double fnorm = 0.0;
  for (double v : F.data) fnorm += v * v;
  detail::krylov_update(g, d0, gg, coef, F, delta, 1e-12);
  Field2D gd(g);
  for (std::size_t q = 0; q < g.size(); ++q) gd.data[q] = gg.data[q] * delta.data[q];
  double r = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t q = static_cast<std::size_t>(j) * g.nx + i;
      r = std::max(r, std::abs(delta.data[q] - coef * detail::laplacian_at(gd, g, i, j) + F.data[q]));
    }
  // GMRES stops at the inexact-Newton target
  EXPECT_LT(r, 1e-4 * std::sqrt(fnorm));
}

TEST(StepAxisym, VolumesSumToDiskArea) {
  const auto s = make_axisym_state(10.0, 100, [](double) { return 1.0; }, 0.1);
  const auto v = axisym_volumes(s.r);
  double sum = 0.0;
  for (double x : v) sum += x;
  EXPECT_NEAR(sum, 50.0, 1e-12);
  EXPECT_NEAR(axisym_mass(s), std::numbers::pi * 100.0, 1e-10);
}

TEST(StepAxisym, PureMassIsConservedAndUniformIsFixed) {
  auto cfg = pme_config(0.05);
  auto s = make_axisym_state(10.0, 100, [](double r) { return barenblatt_profile(2.0, r, 0.0); }, 0.1);
  const double m0 = axisym_mass(s);
  for (int n = 0; n < 100; ++n) s = step_axisym(s, cfg);
  EXPECT_NEAR(axisym_mass(s), m0, 1e-8 * m0);

  auto u = make_axisym_state(5.0, 20, [](double) { return 0.4; }, 0.1);
  const auto next = step_axisym(u, cfg);
  for (double v : next.rho) EXPECT_NEAR(v, 0.4, 1e-12);
}

TEST(StepAxisym, ConvergesToSimilaritySolution) {
  std::vector<double> errs;
  for (int M : {50, 100}) {
    auto cfg = pme_config(2.5 / M);
    cfg.diffusion_coefficient = 1.0;
    auto s = make_axisym_state(10.0, M, [](double r) { return barenblatt_profile(2.0, r, 0.0); }, 0.1);
    for (int n = 0; n < M / 2.5; ++n) s = step_axisym(s, cfg);
    double e = 0.0;
    for (std::size_t i = 0; i < s.r.size(); ++i) e = std::max(e, std::abs(s.rho[i] - barenblatt_profile(2.0, s.r[i], s.t)));
    errs.push_back(e);
  }
  EXPECT_LT(errs[1], errs[0]);
  EXPECT_LT(errs[1], 0.02);
}

TEST(StepAxisym, NewtonResidualsDecrease) {
  SolverConfig cfg;
  auto s = make_axisym_state(10.0, 100, [](double r) { return barenblatt_profile(2.0, r, 0.0); }, 0.1);
  StepReport rep;
  s = step_axisym(s, cfg, &rep);
  EXPECT_TRUE(strictly_decreasing(rep.rho_residuals));
  EXPECT_LE(rep.rho_residuals.back(), cfg.newton_tol);
  EXPECT_LE(rep.c_residuals.back(), cfg.newton_tol);
}

TEST(RunSimulation, SnapshotCounts) {
  const auto g = Grid2D::centered_square(21, 20.0);
  SolverConfig cfg;
  cfg.dt = 0.1;
  const auto ic = barenblatt_state(g);
  const auto zero = run_simulation(cfg, g, ic, 0.0, 5);
  ASSERT_EQ(zero.snapshots.size(), 1u);
  EXPECT_EQ(zero.snapshots[0].rho.data, ic.rho.data);
  const auto tr = run_simulation(cfg, g, ic, 1.0, 3);
  EXPECT_EQ(tr.snapshots.size(), 10u / 3u + 1u);
  EXPECT_EQ(tr.records.size(), 10u);
  EXPECT_NEAR(tr.records.back().t, 1.0, 1e-12);
  EXPECT_THROW(run_simulation(cfg, g, ic, 1.0, 0), DomainError);
}

TEST(RunSimulation, ObserverStopsAndRunsAreDeterministic) {
  const auto g = Grid2D::centered_square(21, 20.0);
  SolverConfig cfg;
  cfg.dt = 0.1;
  int calls = 0;
  const auto tr = run_simulation(cfg, g, barenblatt_state(g), 1.0, 2, [&](const SimState&) { return ++calls < 3; });
  EXPECT_TRUE(tr.stopped_early);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(tr.records.size(), 4u);
  const auto a = run_simulation(cfg, g, barenblatt_state(g), 0.5, 5);
  const auto b = run_simulation(cfg, g, barenblatt_state(g), 0.5, 5);
  EXPECT_EQ(a.snapshots.back().rho.data, b.snapshots.back().rho.data);
}

TEST(RunSimulation, FailureCarriesStepIndex) {
  const auto g = Grid2D::centered_square(21, 20.0);
  auto cfg = pme_config(0.5);
  cfg.newton_max_iter = 1;
  try {
    run_simulation(cfg, g, barenblatt_state(g), 1.0, 1);
    FAIL() << "expected a convergence error";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.step(), 1);
    EXPECT_NE(std::string(e.what()).find("at step 1"), std::string::npos);
  }
}

TEST(Interpolation, RadialToPlane) {
  const auto s = make_axisym_state(4.0, 4, [](double r) { return 2.0 * r; }, 0.1);
  EXPECT_DOUBLE_EQ(interpolate_radial(s, 1.5), 3.0);
  EXPECT_DOUBLE_EQ(interpolate_radial(s, 9.0), 8.0);
  EXPECT_DOUBLE_EQ(interpolate_radial(s, -1.0), 0.0);
}
