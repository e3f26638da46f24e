#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "tumor/stability.hpp"

using namespace tumor;

namespace {

constexpr ProblemSelector kVitro2{Dimension::D2, Regime::InVitro};
constexpr ProblemSelector kVivo2{Dimension::D2, Regime::InVivo};
constexpr ProblemSelector kVitro3{Dimension::D3, Regime::InVitro};
constexpr ProblemSelector kVivo3{Dimension::D3, Regime::InVivo};

ModelParams with_lambda(double lam, double cB = 0.1) {
  ModelParams p;
  p.lambda = lam;
  p.cB = cB;
  return p;
}

/// Size of the terms that cancel in the rate, for relative nullity checks.
double internal_scale(ProblemSelector sel, const ModelParams& p, double R) {
  if (sel == kVivo3) {
    const auto r = evolution_rate_3d_vivo(p, 1, R);
    return r.components.at("T1_scale") / std::abs(r.components.at("T2"));
  }
  if (sel == kVitro3) {
    const auto r = evolution_rate_3d_vitro(p, 1, R);
    const double u = r.components.at("dc0/cB");
    return p.G0 * p.cB / p.lambda *
           std::max({std::abs(r.components.at("d2c0/cB")), std::abs(u * std::sqrt(p.lambda) * r.components.at("I_l-1/2/I_l+1/2")),
                     std::abs(u * 2.0 / R)});
  }
  return p.G0 * p.cB * std::max(1.0, 1.0 / R);
}

}  // namespace

TEST(EvolutionRate, TranslationModeIsNeutral) {
  for (auto sel : {kVitro2, kVivo2, kVitro3, kVivo3}) {
    for (int i = 0; i < 20; ++i) {
      const double lam = 0.1 * std::pow(1000.0, i / 19.0);
      for (int j = 0; j < 20; ++j) {
        const double R = 0.05 * std::pow(600.0, j / 19.0);
        const auto p = with_lambda(lam);
        if (std::sqrt(lam) * R > kMaxScaledRadius) continue;
        const double rate = evolution_rate(sel, p, 1, R).rate;
        EXPECT_LE(std::abs(rate), 1e-8 * internal_scale(sel, p, R)) << to_string(sel) << " lambda=" << lam << " R=" << R;
      }
    }
  }
}

TEST(EvolutionRate, InVitroAlwaysStable) {
  for (double lam : {0.5, 0.8, 1.0, 5.0, 100.0}) {
    const auto p = with_lambda(lam);
    for (int w = 2; w <= 20; ++w)
      for (double R : log_grid(0.05, 30.0, 200)) {
        EXPECT_LT(evolution_rate_2d_vitro(p, w, R).rate, 0.0) << "lambda=" << lam << " m=" << w << " R=" << R;
        EXPECT_LT(evolution_rate_3d_vitro(p, w, R).rate, 0.0) << "lambda=" << lam << " l=" << w << " R=" << R;
      }
  }
}

TEST(EvolutionRate, DiskInVitroMatchesStandardLibrary) {
  for (double lam : {0.5, 4.0})
    for (int m : {2, 5})
      for (double R : {0.3, 2.0, 9.0}) {
        const double s = std::sqrt(lam), x = s * R;
        auto I = [](double n, double z) { return std::cyl_bessel_i(n, z); };
        auto dI = [&](double n, double z) { return 0.5 * (I(n - 1, z) + I(n + 1, z)); };
        const double want = 0.1 * I(1, x) / I(0, x) * (dI(1, x) / I(1, x) - dI(m, x) / I(m, x));
        EXPECT_NEAR(evolution_rate_2d_vitro(with_lambda(lam), m, R).rate, want, 1e-12 + 1e-10 * std::abs(want));
      }
}

TEST(EvolutionRate, DiskInVivoRegimes) {
  for (double lam : {0.8, 1.0}) {
    const auto p = with_lambda(lam, 100.0);
    for (int m = 2; m <= 8; ++m)
      for (double R : log_grid(0.05, 50.0, 200)) EXPECT_LT(evolution_rate_2d_vivo(p, m, R).rate, 0.0);
  }
  const auto p = with_lambda(100.0, 100.0);
  double prev = 0.0;
  for (int m = 2; m <= 8; ++m) {
    const double Rs = threshold_radius({kVivo2, m, {0.05, 50.0}, 1e-8}, p);
    EXPECT_GE(Rs, prev);
    prev = Rs;
  }
  EXPECT_GT(evolution_rate_2d_vivo(with_lambda(40.0), 8, 3.0).rate, 0.0);
  EXPECT_LT(evolution_rate_2d_vivo(with_lambda(40.0), 8, 2.0).rate, 0.0);
}

TEST(EvolutionRate, SphereInVivoThresholds) {
  const auto p = with_lambda(100.0, 100.0);
  EXPECT_LT(evolution_rate_3d_vivo(p, 8, 0.5).rate, 0.0);
  EXPECT_GT(evolution_rate_3d_vivo(p, 8, 10.0).rate, 0.0);
  const double R8 = threshold_radius({kVivo3, 8, {0.5, 10.0}, 1e-7}, p);
  EXPECT_NEAR(R8, 1.3246, 1e-4);
  EXPECT_LT(std::abs(evolution_rate_3d_vivo(p, 8, R8).rate), 1e-4);
  EXPECT_NEAR(threshold_radius({kVivo3, 10, {0.5, 10.0}, 1e-7}, p), 1.6059, 1e-4);
  EXPECT_NEAR(threshold_radius({kVivo3, 12, {0.5, 10.0}, 1e-7}, p), 1.8876, 1e-4);
}

TEST(EvolutionRate, SphereInVivoBelowCriticalConsumption) {
  for (double lam : {0.8, 1.0})
    for (int l = 2; l <= 14; ++l) EXPECT_LT(max_rate_3d_vivo(with_lambda(lam, 100.0), l, {}), 0.0) << l;
  EXPECT_GT(max_rate_3d_vivo(with_lambda(1.1, 100.0), 2, {}), 0.0);
  const double ls = lambda_star(2, with_lambda(1.0, 100.0), {}, {0.5, 2.0}, 1e-6);
  EXPECT_GT(ls, 1.0);
  EXPECT_LT(ls, 1.1);
}

TEST(EvolutionRate, LinearInGrowthAndBackground) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 40; ++n) {
    const ProblemSelector sel = std::array{kVitro2, kVivo2, kVitro3, kVivo3}[n % 4];
    ModelParams p;
    p.lambda = 0.3 + 20.0 * u(rng);
    const double R = 0.1 + 10.0 * u(rng);
    const int w = 2 + n % 9;
    const double base = evolution_rate(sel, p, w, R).rate;
    ModelParams q = p;
    const double a = 0.1 + 50.0 * u(rng), b = 0.1 + 50.0 * u(rng);
    q.G0 *= a;
    q.cB *= b;
    EXPECT_NEAR(evolution_rate(sel, q, w, R).rate, a * b * base, 1e-12 * std::abs(a * b * base)) << to_string(sel);
  }
}

TEST(EvolutionRate, InputChecks) {
  ModelParams p;
  EXPECT_THROW(evolution_rate(kVivo3, p, 0, 1.0), DomainError);
  EXPECT_THROW(evolution_rate(kVivo3, p, 2, 0.0), DomainError);
  EXPECT_THROW(evolution_rate(kVitro2, p, 2, 1e4), OverflowError);
}

TEST(Asymptotes, SphereInVitroSmallRadius) {
  for (double lam : {0.5, 2.0})
    for (int l : {2, 4, 7}) {
      ModelParams p = with_lambda(lam);
      const double want = m1_asymptote(l, lam, AsymptoticRegime::NearZero, 0.0) * p.G0 * p.cB / 10.0;
      const double got = evolution_rate_3d_vitro(p, l, 1e-3).rate;
      EXPECT_NEAR(got, want, 0.02 * std::abs(want)) << "l=" << l;
    }
}

TEST(Asymptotes, Values) {
  EXPECT_DOUBLE_EQ(m1_asymptote(4, 1.0, AsymptoticRegime::NearZero, 0.1), -10.0);
  EXPECT_NEAR(m1_asymptote(2, 1.0, AsymptoticRegime::NearInfinity, 3.0), 20.0 * 3.0 / (3.0 * -1.0 * 2.0), 1e-14);
  EXPECT_THROW(m1_asymptote(1, 1.0, AsymptoticRegime::NearInfinity, 3.0), DomainError);
}

TEST(PerturbationCoefficients, InVitroBoundaryValue) {
  const auto c = perturbation_coefficients_3d(Regime::InVitro, with_lambda(2.0), 3, 1.5);
  EXPECT_NEAR(c.at("c1(R)"), -c.at("c0'(R)"), 1e-15);
  EXPECT_NEAR(c.at("H1"), 0.0, 1e-15);
  const double s = std::sqrt(2.0), x = s * 1.5;
  EXPECT_NEAR(c.at("a1") * std::cyl_bessel_i(3.5, x) / std::sqrt(x), c.at("c1(R)"), 1e-12);
}

TEST(PerturbationCoefficients, InVivoInterfaceConditions) {
  for (double lam : {0.5, 3.0, 40.0})
    for (int l : {2, 6})
      for (double R : {0.4, 2.0, 7.0}) {
        const auto c = perturbation_coefficients_3d(Regime::InVivo, with_lambda(lam), l, R);
        const double s = std::sqrt(lam);
        const double nu = l + 0.5;
        auto ci = [&](double r) { return c.at("a1") * std::cyl_bessel_i(nu, s * r) / std::sqrt(s * r); };
        auto co = [&](double r) { return c.at("b1") * std::cyl_bessel_k(nu, r) / std::sqrt(r); };
        const double tol = 1e-10 * std::max(1.0, std::abs(c.at("c1(R)")));
        EXPECT_NEAR(ci(R), c.at("c1(R)"), tol);
        EXPECT_NEAR(co(R), c.at("c1(R)"), tol);
        const double h = 1e-5;
        const double jump = (ci(R + h) - ci(R - h) - co(R + h) + co(R - h)) / (2 * h);
        EXPECT_NEAR(jump, c.at("jump"), 1e-6 * std::max(1.0, std::abs(jump)));
        EXPECT_NEAR((ci(R + h) - ci(R - h)) / (2 * h), c.at("c1'(R)"), 1e-6 * std::max(1.0, std::abs(c.at("c1'(R)"))));
      }
}

TEST(PerturbationCoefficients, AssembledRateMatchesReducedQuotient) {
  for (double lam : {0.5, 1.1, 100.0})
    for (int l : {2, 8})
      for (double R : {0.3, 1.3, 6.0}) {
        const auto p = with_lambda(lam);
        const double want = evolution_rate_3d_vivo(p, l, R).rate;
        const double got = perturbation_coefficients_3d(Regime::InVivo, p, l, R).at("rate_assembled");
        EXPECT_NEAR(got, want, 1e-9 * std::max(1e-3, std::abs(want))) << lam << " " << l << " " << R;
      }
}

TEST(PerturbationCoefficients, AssemblyFromPressureProfiles) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 50; ++n) {
    const auto p = with_lambda(std::exp(std::log(0.3) + u(rng) * std::log(300.0)));
    const int l = 2 + static_cast<int>(u(rng) * 12);
    const double R = 0.2 + 9.8 * u(rng);
    const auto pp = pressure_profiles_3d(Regime::InVivo, p, l, R);
    const double h = 1e-3 * R;
    const double d2p0 = (-pp.p0(R + 2 * h) + 16 * pp.p0(R + h) - 30 * pp.p0(R) + 16 * pp.p0(R - h) - pp.p0(R - 2 * h)) /
                        (12 * h * h);
    const double dp1 = (pp.p1(R - 2 * h) - 8 * pp.p1(R - h) + 8 * pp.p1(R + h) - pp.p1(R + 2 * h)) / (12 * h);
    const double fd = -(d2p0 + dp1);
    const double rate = evolution_rate_3d_vivo(p, l, R).rate;
    const double scale = std::max({std::abs(rate), std::abs(d2p0), std::abs(dp1)});
    EXPECT_NEAR(fd, rate, 1e-4 * scale) << "lambda=" << p.lambda << " l=" << l << " R=" << R;
  }
}

TEST(Threshold, RootAndErrors) {
  const auto p = with_lambda(100.0, 100.0);
  const double Rs = threshold_radius({kVivo2, 8, {0.1, 50.0}, 1e-10}, p);
  EXPECT_LT(evolution_rate_2d_vivo(p, 8, Rs - 1e-6).rate * evolution_rate_2d_vivo(p, 8, Rs + 1e-6).rate, 0.0);
  EXPECT_THROW(threshold_radius({kVivo3, 8, {0.1, 50.0}, 1e-8}, with_lambda(0.8)), NoSignChangeError);
  EXPECT_THROW(threshold_radius({kVivo3, 8, {5.0, 1.0}, 1e-8}, p), DomainError);
  EXPECT_THROW(threshold_radius({kVivo3, 8, {0.0, 1.0}, 1e-8}, p), DomainError);
}

TEST(Threshold, BisectionHelpers) {
  EXPECT_NEAR(bisect_sign_change([](double x) { return x * x - 2.0; }, 0.0, 3.0, 1e-12), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(bisect_predicate([](double x) { return x > 0.7; }, 0.0, 1.0, 1e-10), 0.7, 1e-10);
  EXPECT_THROW(bisect_predicate([](double) { return true; }, 0.0, 1.0, 1e-3), NoSignChangeError);
  EXPECT_THROW(lambda_star(2, with_lambda(1.0), {}, {1.2, 2.0}, 1e-6), NoSignChangeError);
}

TEST(StabilityCurve, RowsAndRecordedFailures) {
  const auto rows = stability_curve(kVitro2, ModelParams{}, {2, 3}, {1.0, 2.0, 5000.0});
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].wavenumber, 2);
  EXPECT_EQ(rows[3].wavenumber, 3);
  EXPECT_TRUE(rows[0].error.empty());
  EXPECT_EQ(rows[1].rate, evolution_rate_2d_vitro(ModelParams{}, 2, 2.0).rate);
  EXPECT_TRUE(std::isnan(rows[2].rate));
  EXPECT_FALSE(rows[2].error.empty());
}

TEST(LogGrid, EndpointsAndSpacing) {
  const auto g = log_grid(0.05, 30.0, 200);
  ASSERT_EQ(g.size(), 200u);
  EXPECT_EQ(g.front(), 0.05);
  EXPECT_EQ(g.back(), 30.0);
  EXPECT_NEAR(g[2] / g[1], g[1] / g[0], 1e-12);
  EXPECT_THROW(log_grid(0.0, 1.0, 5), DomainError);
}
