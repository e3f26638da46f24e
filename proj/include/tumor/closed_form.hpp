#pragma once

/// Unperturbed radially symmetric solutions: nutrient and pressure profiles,
/// front speed dR/dt = -p'(R), and RK4 integration of R(t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tumor/errors.hpp"
#include "tumor/model.hpp"
#include "tumor/special_functions.hpp"

namespace tumor {

/// Largest sqrt(lambda) R accepted before callers must switch to the large-R limit.
inline constexpr double kMaxScaledRadius = 700.0;

struct RadialProfile {
  std::vector<double> radii;
  std::vector<double> values;
  double tumor_radius = 0.0;
};

struct RadiusSample {
  double t;
  double R;
};

namespace detail {

/// log(sinh(y)/y) for y >= 0.
inline double log_sinhc(double y) {
  if (y < 1e-4) {
    const double y2 = y * y;
    return std::log1p(y2 / 6.0 + y2 * y2 / 120.0 + y2 * y2 * y2 / 5040.0);
  }
  if (y < 20.0) return std::log(std::sinh(y) / y);
  return y - std::log(2.0 * y) + std::log1p(-std::exp(-2.0 * y));
}

/// coth(x) - 1/x
inline double coth_minus_inv(double x) {
  if (x < 0.1) {
    const double x2 = x * x;
    return x * (1.0 / 3.0 + x2 * (-1.0 / 45.0 + x2 * (2.0 / 945.0 + x2 * (-1.0 / 4725.0 + x2 * (2.0 / 93555.0)))));
  }
  return 1.0 / std::tanh(x) - 1.0 / x;
}

/// x - tanh(x)
inline double x_minus_tanh(double x) {
  if (x < 0.1) {
    const double x2 = x * x;
    return x * x2 * (1.0 / 3.0 + x2 * (-2.0 / 15.0 + x2 * (17.0 / 315.0 + x2 * (-62.0 / 2835.0 + x2 * (1382.0 / 155925.0)))));
  }
  return x - std::tanh(x);
}

/// e^{-z} I_0(z), including z = 0.
inline double i0_scaled_at(double z) {
  if (z == 0.0) return 1.0;
  return bessel_i_scaled(BesselOrder::integer(0), z).value;
}

inline void check_radius(double R) {
  if (!std::isfinite(R) || R <= 0.0) throw DomainError("tumor radius must be positive and finite");
}

inline void check_overflow_guard(const ModelParams& p, double R) {
  if (std::sqrt(p.lambda) * R > kMaxScaledRadius)
    throw OverflowError("sqrt(lambda) R exceeds 700; use the large-R limit");
}

/// Interior nutrient (r <= R) for each selector, written in ratio form.
inline double concentration_inside(ProblemSelector sel, const ModelParams& p, double R, double r) {
  const double s = std::sqrt(p.lambda);
  const double x = s * R;
  if (sel.dim == Dimension::D2) {
    const auto i0R = bessel_i_scaled(BesselOrder::integer(0), x).value;
    const double grow = std::exp(s * (r - R));
    if (sel.regime == Regime::InVitro) return p.cB * i0_scaled_at(s * r) / i0R * grow;
    const auto i1R = bessel_i_scaled(BesselOrder::integer(1), x).value;
    const auto k0R = bessel_k_scaled(BesselOrder::integer(0), R).value;
    const auto k1R = bessel_k_scaled(BesselOrder::integer(1), R).value;
    const double Cs = s * k0R * i1R + k1R * i0R;
    return p.cB * k1R * i0_scaled_at(s * r) * grow / Cs;
  }
  if (sel.regime == Regime::InVitro) return p.cB * std::exp(log_sinhc(s * r) - log_sinhc(x));
  // a0 sinh(s r)/r with a0 = (R+1)/(s cosh x + sinh x)
  const double e2 = std::exp(-2.0 * x);
  const double denom = 0.5 * (s * (1.0 + e2) + (1.0 - e2));
  return p.cB * (R + 1.0) * s * std::exp(log_sinhc(s * r) - x) / denom;
}

/// Exterior nutrient (r >= R), in-vivo regime only.
inline double concentration_outside(ProblemSelector sel, const ModelParams& p, double R, double r) {
  const double s = std::sqrt(p.lambda);
  const double x = s * R;
  if (sel.dim == Dimension::D2) {
    const auto i0R = bessel_i_scaled(BesselOrder::integer(0), x).value;
    const auto i1R = bessel_i_scaled(BesselOrder::integer(1), x).value;
    const auto k0R = bessel_k_scaled(BesselOrder::integer(0), R).value;
    const auto k1R = bessel_k_scaled(BesselOrder::integer(1), R).value;
    const double Cs = s * k0R * i1R + k1R * i0R;
    const double k0r = bessel_k_scaled(BesselOrder::integer(0), r).value;
    return p.cB * (1.0 - s * i1R * k0r * std::exp(R - r) / Cs);
  }
  const double th = std::tanh(x);
  const double a0_sinh = (R + 1.0) * th / (s + th);
  return p.cB * (1.0 + (a0_sinh - R) * std::exp(R - r) / r);
}

}  // namespace detail

/// dR/dt for the unperturbed disk or sphere.
inline double boundary_speed(ProblemSelector sel, const ModelParams& p, double R) {
  detail::check_radius(R);
  detail::check_overflow_guard(p, R);
  const double s = std::sqrt(p.lambda);
  const double x = s * R;
  const double g = p.G0 * p.cB;
  if (sel.dim == Dimension::D2) {
    const auto i0 = bessel_i_scaled(BesselOrder::integer(0), x).value;
    const auto i1 = bessel_i_scaled(BesselOrder::integer(1), x).value;
    if (sel.regime == Regime::InVitro) return g * i1 / (s * i0);
    const auto k0 = bessel_k_scaled(BesselOrder::integer(0), R).value;
    const auto k1 = bessel_k_scaled(BesselOrder::integer(1), R).value;
    return g * k1 * i1 / (s * (s * k0 * i1 + k1 * i0));
  }
  if (sel.regime == Regime::InVitro) return g / s * detail::coth_minus_inv(x);
  const double th = std::tanh(x);
  return g / p.lambda * (R + 1.0) / (R * R) * detail::x_minus_tanh(x) / (s + th);
}

/// R -> infinity limit of boundary_speed.
inline double boundary_speed_limit(ProblemSelector sel, const ModelParams& p) {
  const double s = std::sqrt(p.lambda);
  const double g = p.G0 * p.cB;
  if (sel.regime == Regime::InVitro) return g / s;
  return g / (s * (s + 1.0));
}

/// Unperturbed nutrient concentration c0(r) for a front at radius R.
/// In vitro, c equals cB outside the tumor.
inline double radial_concentration(ProblemSelector sel, const ModelParams& p, double R, double r) {
  detail::check_radius(R);
  if (!std::isfinite(r) || r < 0.0) throw DomainError("radius r must be nonnegative and finite");
  if (r <= R) return detail::concentration_inside(sel, p, R, r);
  if (sel.regime == Regime::InVitro) return p.cB;
  return detail::concentration_outside(sel, p, R, r);
}

/// Unperturbed pressure p0(r) = (G0/lambda)(cB - c0(r)) inside the tumor.
inline double radial_pressure(ProblemSelector sel, const ModelParams& p, double R, double r) {
  detail::check_radius(R);
  if (!std::isfinite(r) || r < 0.0 || r > R) throw DomainError("pressure is defined for 0 <= r <= R");
  if (r == R) return 0.0;
  return p.G0 / p.lambda * (p.cB - detail::concentration_inside(sel, p, R, r));
}

inline RadialProfile concentration_profile(ProblemSelector sel, const ModelParams& p, double R,
                                           const std::vector<double>& radii) {
  RadialProfile out{radii, {}, R};
  out.values.reserve(radii.size());
  for (double r : radii) out.values.push_back(radial_concentration(sel, p, R, r));
  return out;
}

inline RadialProfile pressure_profile(ProblemSelector sel, const ModelParams& p, double R,
                                      const std::vector<double>& radii) {
  RadialProfile out{radii, {}, R};
  out.values.reserve(radii.size());
  for (double r : radii) out.values.push_back(radial_pressure(sel, p, R, r));
  return out;
}

/// Classical RK4 for dR/dt = speed(R) with a fixed step that lands on t_end.
template <class Speed>
std::vector<RadiusSample> integrate_radius(Speed&& speed, double R0, double t_end, double dt) {
  if (!(R0 > 0.0)) throw DomainError("R0 must be positive");
  if (!(dt > 0.0) || !(t_end > 0.0)) throw DomainError("dt and t_end must be positive");
  if (dt > t_end) throw DomainError("step size exceeds the integration interval");
  const auto n = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  const double h = t_end / static_cast<double>(n);
  std::vector<RadiusSample> out;
  out.reserve(n + 1);
  double R = R0;
  out.push_back({0.0, R});
  for (std::size_t i = 1; i <= n; ++i) {
    const double k1 = speed(R);
    const double k2 = speed(R + 0.5 * h * k1);
    const double k3 = speed(R + 0.5 * h * k2);
    const double k4 = speed(R + h * k3);
    R += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.push_back({h * static_cast<double>(i), R});
  }
  return out;
}

inline std::vector<RadiusSample> integrate_radius(ProblemSelector sel, const ModelParams& p, double R0,
                                                  double t_end, double dt) {
  return integrate_radius([&](double R) { return boundary_speed(sel, p, R); }, R0, t_end, dt);
}

/// R at each of the ascending sample times, starting from R0 at times[0];
/// every interval is covered with RK4 steps no longer than dt_max.
template <class Speed>
std::vector<double> integrate_radius_at(Speed&& speed, double R0, const std::vector<double>& times, double dt_max) {
  std::vector<double> out;
  if (times.empty()) return out;
  out.reserve(times.size());
  double R = R0;
  out.push_back(R);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double span = times[i] - times[i - 1];
    if (span < 0.0) throw DomainError("sample times must be ascending");
    if (span > 0.0) {
      const double step = std::min(dt_max, span);
      R = integrate_radius(speed, R, span, step).back().R;
    }
    out.push_back(R);
  }
  return out;
}

}  // namespace tumor
