#pragma once

/// Linear stability of the radially symmetric front: evolution functions
/// (leading-order d(log delta)/dt) in 2D and 3D, perturbation coefficients,
/// and threshold finders.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tumor/closed_form.hpp"
#include "tumor/errors.hpp"
#include "tumor/model.hpp"
#include "tumor/special_functions.hpp"

namespace tumor {

struct StabilityResult {
  double rate = 0.0;
  std::map<std::string, double> components;
};

struct Bracket {
  double lo = 0.0;
  double hi = 0.0;
};

struct ThresholdQuery {
  ProblemSelector selector;
  int wavenumber = 2;
  Bracket bracket;
  double tolerance = 1e-8;
};

/// Log-spaced radius scan used by the lambda* predicate.
struct RadiusScan {
  double lo = 0.1;
  double hi = 150.0;
  int n = 500;
};

enum class AsymptoticRegime { NearZero, NearInfinity };

namespace detail {

inline void check_wavenumber(int w) {
  if (w < 1) throw DomainError("wavenumber must be >= 1");
}

inline void check_rate_inputs(const ModelParams& p, int w, double R) {
  check_wavenumber(w);
  check_radius(R);
  check_overflow_guard(p, R);
}

/// sech^2 and tanh of x without forming cosh.
inline std::pair<double, double> tanh_sech2(double x) {
  const double e2 = std::exp(-2.0 * x);
  const double sech = 2.0 * std::exp(-x) / (1.0 + e2);
  return {std::tanh(x), sech * sech};
}

/// Interior/exterior radial parts of the 3D perturbation with nu = l + 1/2:
/// i(r) = I_nu(s r)/sqrt(s r), k(r) = K_nu(r)/sqrt(r). Log-derivatives at R.
struct SphericalParts {
  double ip, im;   // e^{-x} I_{l+1/2}(x), e^{-x} I_{l-1/2}(x)
  double kp, km;   // e^{R} K_{l+1/2}(R), e^{R} K_{l-1/2}(R)
  double di_over_i;  // i'(R)/i(R)
  double dk_over_k;  // k'(R)/k(R)
};

inline SphericalParts spherical_parts(double s, int l, double R) {
  const double x = s * R;
  const auto it = i_scaled_triplet(2 * l + 1, x);  // orders l-1/2, l+1/2, l+3/2
  const auto kt = k_scaled_triplet(2 * l + 1, R);
  SphericalParts out{};
  out.im = it[0];
  out.ip = it[1];
  out.km = kt[0];
  out.kp = kt[1];
  const double nu = l + 0.5;
  // I_nu' = I_{nu-1} - (nu/x) I_nu, K_nu' = -K_{nu-1} - (nu/R) K_nu
  out.di_over_i = s * (out.im / out.ip - nu / x) - 0.5 / R;
  out.dk_over_k = -out.km / out.kp - nu / R - 0.5 / R;
  return out;
}

}  // namespace detail

/// 2D, nutrient fixed at cB outside the tumor.
inline StabilityResult evolution_rate_2d_vitro(const ModelParams& p, int m, double R) {
  detail::check_rate_inputs(p, m, R);
  const double s = std::sqrt(p.lambda);
  const double x = s * R;
  const auto i1 = bessel_i_scaled(BesselOrder::integer(1), x);
  const auto i0 = bessel_i_scaled(BesselOrder::integer(0), x);
  const auto im = bessel_i_scaled(BesselOrder::integer(m), x);
  const double ratio1 = i1.derivative / i1.value;
  const double ratiom = im.derivative / im.value;
  StabilityResult out;
  out.rate = p.G0 * p.cB * i1.value / i0.value * (ratio1 - ratiom);
  out.components = {{"I1'/I1", ratio1}, {"Im'/Im", ratiom}, {"I1/I0", i1.value / i0.value}};
  return out;
}

/// 2D, nutrient relaxing to cB outside the tumor. C(R), C_j(R) are reported
/// with the common factor e^{sqrt(lambda)R - R} removed.
inline StabilityResult evolution_rate_2d_vivo(const ModelParams& p, int m, double R) {
  detail::check_rate_inputs(p, m, R);
  const double s = std::sqrt(p.lambda);
  const double x = s * R;
  const auto I0 = bessel_i_scaled(BesselOrder::integer(0), x);
  const auto I1 = bessel_i_scaled(BesselOrder::integer(1), x);
  const auto Im = bessel_i_scaled(BesselOrder::integer(m), x);
  const auto K0 = bessel_k_scaled(BesselOrder::integer(0), R);
  const auto K1 = bessel_k_scaled(BesselOrder::integer(1), R);
  const auto Km = bessel_k_scaled(BesselOrder::integer(m), R);
  // scaled K' is e^R K', matching the scaled K
  const double C = s * K0.value * I1.value + K1.value * I0.value;
  auto Cj = [&](const BesselValue& K, const BesselValue& I) {
    return K.derivative * I.value - s * I.derivative * K.value;
  };
  const double C1 = Cj(K1, I1);
  const double Cm = Cj(Km, Im);
  const double q = C1 / Cm;
  const double g = p.G0 * p.cB;
  const double first = g * m / (s * R * C) * (q * Km.value * Im.value - K1.value * I1.value);
  const double second = g / C * (q * Km.value * Im.derivative - K1.value * I1.derivative);
  StabilityResult out;
  out.rate = first - second;
  out.components = {{"C", C}, {"C_1", C1}, {"C_m", Cm}};
  return out;
}

/// 3D, nutrient fixed at cB outside the tumor.
inline StabilityResult evolution_rate_3d_vitro(const ModelParams& p, int l, double R) {
  detail::check_rate_inputs(p, l, R);
  const double s = std::sqrt(p.lambda);
  const double x = s * R;
  const auto it = detail::i_scaled_triplet(2 * l + 1, x);
  const double rho = it[0] / it[1];  // I_{l-1/2} / I_{l+1/2}
  const double u = s * detail::coth_minus_inv(x);  // c0'(R)/cB = s coth(x) - 1/R
  const double curvature = p.lambda - 2.0 * u / R;  // c0''(R)/cB
  const double g = p.G0 * p.cB;
  StabilityResult out;
  out.rate = g / p.lambda * (curvature - u * (s * rho - (l + 1.0) / R));
  out.components = {{"dc0/cB", u}, {"d2c0/cB", curvature}, {"I_l-1/2/I_l+1/2", rho}};
  return out;
}

/// 3D, nutrient relaxing to cB outside the tumor: M2 = T1/T2.
///
/// T1 and T2 share the factor cosh^3(sqrt(lambda)R) e^{sqrt(lambda)R - R},
/// which is divided out of both before evaluation; the reported T1, T2 are
/// these reduced values. C(R) is the interface determinant
/// sqrt(lambda) K_{l+1/2}(R) I_{l-1/2}(sR) + K_{l-1/2}(R) I_{l+1/2}(sR), also
/// reported without its e^{sR - R} factor. T1_scale is the largest summand
/// magnitude of the reduced T1.
inline StabilityResult evolution_rate_3d_vivo(const ModelParams& p, int l_int, double R) {
  detail::check_rate_inputs(p, l_int, R);
  const double L = p.lambda;
  const double s = std::sqrt(L);
  const double x = s * R;
  const double L15 = L * s;
  const double l = l_int;
  constexpr double h = 0.5;
  const auto sp = detail::spherical_parts(s, l_int, R);
  const double Kp = sp.kp, Km = sp.km, Ip = sp.ip, Im = sp.im;
  const auto [t, sech2] = detail::tanh_sech2(x);
  const double g = p.G0 * p.cB;

  double scale = 0.0;
  auto track = [&](double v) {
    scale = std::max(scale, std::abs(v));
    return v;
  };
  // coefficients of cosh^3, sinh cosh^2, cosh, sinh inside the I_{l+1/2} bracket
  const double A3 = track(-2.0 * R * ((3.0 * R + 2.0) * L15 + s * (R - 2.0)) * (l + h) * Kp) +
                    track(-2.0 * (R * (R - l / 2.0 - 1.0) * L15 - s * (l + 2.0) * (R - 2.0) / 2.0) * (R + 1.0) * Km);
  const double A2 = track(-2.0 * R * (l + h) * ((L * L + 3.0 * L) * R + L * L - 1.0) * Kp) +
                    track(-2.0 * ((L * L + L) * R * R - 2.0 * L * (l + 2.0) * R + (L + 1.0) * (l + 2.0)) * (R + 1.0) * Km / 2.0);
  const double A1 = track(2.0 * R * ((2.0 * R + 2.0) * L15 + s * (R - 2.0)) * (l + h) * Kp) +
                    track(2.0 * (R * R * L15 - s * (l + 2.0) * (R - 2.0) / 2.0) * (R + 1.0) * Km);
  const double A0 = track(2.0 * R * (l + h) * (L * R + L - 1.0) * Kp) +
                    track(2.0 * Km * (R + 1.0) * (R * R * L + l + 2.0) / 2.0);
  const double bracket_p = A3 + A2 * t + A1 * sech2 + A0 * t * sech2;

  const double poly = R * R + (l + 2.0) * R + l + 2.0;
  const double B = track(L * (-2.0 + (L + 1.0) * R)) + track(2.0 * t * ((R - h) * L15 - s / 2.0)) +
                   track(-L * (R - 2.0) * sech2) + track(t * sech2 * s);
  const double T1 = -g * (bracket_p * Ip + Im * poly * B * Kp);
  scale *= g * std::max({Ip, Im * poly * Kp, 1e-300});

  const double C = s * Kp * Im + Ip * Km;
  const double T2 = s * R * R * R * (Kp * (L + s * t) * Im + Ip * Km * (s + t)) * (L + s * t) * (s + t);
  if (std::abs(T2) < 1e-300) throw DomainError("T2 vanishes");

  StabilityResult out;
  out.rate = T1 / T2;
  out.components = {{"T1", T1}, {"T2", T2}, {"C", C}, {"T1_scale", scale}};
  return out;
}

/// Dispatch on the selector.
inline StabilityResult evolution_rate(ProblemSelector sel, const ModelParams& p, int wavenumber, double R) {
  if (sel.dim == Dimension::D2)
    return sel.regime == Regime::InVitro ? evolution_rate_2d_vitro(p, wavenumber, R)
                                         : evolution_rate_2d_vivo(p, wavenumber, R);
  return sel.regime == Regime::InVitro ? evolution_rate_3d_vitro(p, wavenumber, R)
                                       : evolution_rate_3d_vivo(p, wavenumber, R);
}

/// Coefficients of the first-order 3D perturbation c1 = c1(r) Y_lm.
///
/// In vitro: c1 = cB a1 I_{l+1/2}(sr)/sqrt(sr) with c1(R) = -c0'(R); H1 is the
/// coefficient of r^l in p1 and vanishes for this boundary condition.
/// In vivo: c1_in = cB a1 I_{l+1/2}(sr)/sqrt(sr), c1_out = cB b1 K_{l+1/2}(r)/sqrt(r),
/// continuous at R with the jump c1_in' - c1_out' = -((lambda-1) c0(R) + cB);
/// D1 is the coefficient of r^l in p1.
/// Also reported: c1(R), c1'(R), c0'(R), c0''(R) (all divided by cB),
/// D1 R^l, and rate_assembled = (G0/lambda)[c0'' + c1' - (l/R)(c0' + c1)] at R.
inline std::map<std::string, double> perturbation_coefficients_3d(Regime regime, const ModelParams& p, int l,
                                                                  double R) {
  detail::check_rate_inputs(p, l, R);
  const double s = std::sqrt(p.lambda);
  const double x = s * R;
  const auto sp = detail::spherical_parts(s, l, R);
  const double G = p.G0 / p.lambda;
  std::map<std::string, double> out;

  double A;  // c0(R)/cB
  double u;  // (c0'(R)/cB) / A for vivo, c0'(R)/cB for vitro
  if (regime == Regime::InVitro) {
    A = 1.0;
    u = s * detail::coth_minus_inv(x);
  } else {
    const double t = std::tanh(x);
    A = (R + 1.0) * t / (R * (s + t));
    u = s * detail::coth_minus_inv(x);
  }
  const double dc0 = A * u;
  const double d2c0 = A * (p.lambda - 2.0 * u / R);

  double c1R, dc1R;
  if (regime == Regime::InVitro) {
    c1R = -dc0;
    dc1R = c1R * sp.di_over_i;
    // i(R) = e^{x} ip / sqrt(x)
    const double a1 = c1R * std::sqrt(x) * std::exp(-x) / sp.ip;
    out["a1"] = a1;
    out["H1"] = G * p.cB * (dc0 + c1R) / std::pow(R, l);
  } else {
    const double jump = -((p.lambda - 1.0) * A + 1.0);
    const double denom = sp.di_over_i - sp.dk_over_k;
    c1R = jump / denom;
    dc1R = jump * sp.di_over_i / denom;
    const double C = s * sp.kp * sp.im + sp.ip * sp.km;
    out["a1"] = jump * sp.kp * std::sqrt(x) * std::exp(-x) / C;
    out["b1"] = jump * sp.ip * std::sqrt(R) * std::exp(R) / C;
    out["C"] = C * std::exp(x - R);
    out["C_scaled"] = C;
    out["jump"] = jump;
    out["D1"] = G * p.cB * (dc0 + c1R) / std::pow(R, l);
  }
  out["c1(R)"] = c1R;
  out["c1'(R)"] = dc1R;
  out["c0'(R)"] = dc0;
  out["c0''(R)"] = d2c0;
  out["c0(R)"] = A;
  out["D1_R^l"] = G * p.cB * (dc0 + c1R);
  out["rate_assembled"] = G * p.cB * (d2c0 + dc1R - (l / R) * (dc0 + c1R));
  return out;
}

/// Interior pressure profiles p0(r) and p1(r) of the 3D problem, continued
/// analytically past r = R so that one-sided stencils are not needed.
struct PressureProfiles3D {
  ModelParams params;
  Regime regime;
  int l;
  double R;
  double c1R;   // c1(R)/cB
  double DRl;   // D1 R^l

  double p0(double r) const {
    const ProblemSelector sel{Dimension::D3, regime};
    return params.G0 / params.lambda * (params.cB - detail::concentration_inside(sel, params, R, r));
  }

  double p1(double r) const {
    const double s = std::sqrt(params.lambda);
    const double x = s * R;
    const double y = s * r;
    const BesselOrder nu = BesselOrder::half_integer(l);
    const double ratio = bessel_i_scaled(nu, y).value / bessel_i_scaled(nu, x).value * std::exp(y - x) *
                         std::sqrt(x / y);
    return DRl * std::pow(r / R, l) - params.G0 / params.lambda * params.cB * c1R * ratio;
  }
};

inline PressureProfiles3D pressure_profiles_3d(Regime regime, const ModelParams& p, int l, double R) {
  const auto c = perturbation_coefficients_3d(regime, p, l, R);
  return {p, regime, l, R, c.at("c1(R)"), c.at("D1_R^l")};
}

/// Small- and large-R asymptotes of the 3D in-vitro evolution function as
/// printed; the near-zero constant omits the positive factor G0 cB / 10.
inline double m1_asymptote(int l, double lambda, AsymptoticRegime regime, double R) {
  detail::check_wavenumber(l);
  if (regime == AsymptoticRegime::NearZero) return -10.0 * (l - 1.0) / 3.0;
  const double lf = l;
  const double factor = -lf * lf / 4.0 - lf / 4.0 + 0.5;
  if (l == 1 || factor == 0.0) throw DomainError("large-R asymptote is degenerate at l = 1");
  return 20.0 * std::sqrt(lambda) * R / ((lf + 1.0) * factor * lf);
}

/// Bisection for a sign change of f on [lo, hi]; returns the final midpoint.
template <class F>
double bisect_sign_change(F&& f, double lo, double hi, double tol) {
  if (!(lo < hi) || !(tol > 0.0)) throw DomainError("bracket must satisfy lo < hi and tol > 0");
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) throw NoSignChangeError("no sign change on the bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Bisection on a boolean predicate that is false at lo and true at hi.
template <class P>
double bisect_predicate(P&& pred, double lo, double hi, double tol) {
  if (!(lo < hi) || !(tol > 0.0)) throw DomainError("bracket must satisfy lo < hi and tol > 0");
  if (pred(lo) || !pred(hi)) throw NoSignChangeError("predicate is not false at lo and true at hi");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (pred(mid)) hi = mid; else lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Threshold radius R* where the evolution function changes sign.
inline double threshold_radius(const ThresholdQuery& q, const ModelParams& p) {
  detail::check_wavenumber(q.wavenumber);
  if (!(q.bracket.lo > 0.0)) throw DomainError("bracket must be positive");
  return bisect_sign_change([&](double R) { return evolution_rate(q.selector, p, q.wavenumber, R).rate; },
                            q.bracket.lo, q.bracket.hi, q.tolerance);
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw DomainError("log grid needs 0 < lo < hi and n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

/// Largest M2 over the scan; points beyond the overflow guard are skipped.
inline double max_rate_3d_vivo(const ModelParams& p, int l, const RadiusScan& scan) {
  double best = -std::numeric_limits<double>::infinity();
  for (double R : log_grid(scan.lo, scan.hi, scan.n)) {
    if (std::sqrt(p.lambda) * R > kMaxScaledRadius) continue;
    best = std::max(best, evolution_rate_3d_vivo(p, l, R).rate);
  }
  return best;
}

/// lambda*(l): smallest consumption rate for which M2 turns positive somewhere on the scan.
inline double lambda_star(int l, const ModelParams& p, const RadiusScan& scan, Bracket lambda_bracket, double tol) {
  detail::check_wavenumber(l);
  auto unstable = [&](double lam) {
    ModelParams q = p;
    q.lambda = lam;
    return max_rate_3d_vivo(q, l, scan) > 0.0;
  };
  return bisect_predicate(unstable, lambda_bracket.lo, lambda_bracket.hi, tol);
}

struct StabilityRow {
  double R;
  int wavenumber;
  double rate;          // NaN when evaluation failed
  std::string error;    // empty on success
};

/// Rate table over wavenumbers x radii; failures are recorded per row.
inline std::vector<StabilityRow> stability_curve(ProblemSelector sel, const ModelParams& p,
                                                 const std::vector<int>& wavenumbers,
                                                 const std::vector<double>& R_grid) {
  std::vector<StabilityRow> rows;
  rows.reserve(wavenumbers.size() * R_grid.size());
  for (int w : wavenumbers) {
    for (double R : R_grid) {
      StabilityRow row{R, w, std::numeric_limits<double>::quiet_NaN(), {}};
      try {
        row.rate = evolution_rate(sel, p, w, R).rate;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace tumor
