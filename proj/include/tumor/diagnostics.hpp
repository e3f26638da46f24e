#pragma once

/// Measurements on simulation output: mass, centroid, front position, Fourier
/// amplitudes of the front, decay fits and comparison with the analytic R(t).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "tumor/closed_form.hpp"
#include "tumor/errors.hpp"
#include "tumor/model.hpp"
#include "tumor/solver_core.hpp"

namespace tumor {

namespace detail {

/// Trapezoid weight of node i out of n.
inline double trap_weight(int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; }

inline void check_shape(const Field2D& f, const Grid2D& g) {
  if (f.nx != g.nx || f.ny != g.ny || f.size() != g.size()) throw DomainError("field does not match the grid");
}

}  // namespace detail

/// Trapezoidal integral of the field over the grid.
inline double total_mass(const Field2D& f, const Grid2D& g) {
  detail::check_shape(f, g);
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    double row = 0.0;
    for (int i = 0; i < g.nx; ++i) row += detail::trap_weight(i, g.nx) * f(i, j);
    m += detail::trap_weight(j, g.ny) * row;
  }
  return m * g.dx * g.dy;
}

/// First moments over mass, same quadrature as total_mass.
inline std::pair<double, double> centroid(const Field2D& f, const Grid2D& g) {
  detail::check_shape(f, g);
  double m = 0.0, mx = 0.0, my = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double w = detail::trap_weight(i, g.nx) * detail::trap_weight(j, g.ny) * f(i, j);
      m += w;
      mx += w * g.x(i);
      my += w * g.y(j);
    }
  }
  if (!(std::abs(m) > 0.0)) throw DomainError("centroid of a field with zero mass");
  return {mx / m, my / m};
}

namespace detail {

/// Bilinear sample; false when (x, y) is outside the grid.
inline bool bilinear(const Field2D& f, const Grid2D& g, double x, double y, double& out) {
  const double u = (x - g.x0) / g.dx;
  const double v = (y - g.y0) / g.dy;
  if (u < 0.0 || v < 0.0 || u > g.nx - 1 || v > g.ny - 1) return false;
  const int i = std::min(static_cast<int>(u), g.nx - 2);
  const int j = std::min(static_cast<int>(v), g.ny - 2);
  const double a = u - i;
  const double b = v - j;
  out = (1.0 - a) * (1.0 - b) * f(i, j) + a * (1.0 - b) * f(i + 1, j) + (1.0 - a) * b * f(i, j + 1) +
        a * b * f(i + 1, j + 1);
  return true;
}

}  // namespace detail

/// Front radius along n_angles rays from the centroid: the outermost place
/// where the bilinear interpolant crosses level, refined linearly between
/// samples spaced a quarter cell apart. Angles are phi_j = 2 pi j / n_angles.
inline std::vector<double> extract_boundary(const Field2D& f, const Grid2D& g, double level, int n_angles) {
  detail::check_shape(f, g);
  if (n_angles < 1) throw DomainError("n_angles must be >= 1");
  const auto [cx, cy] = centroid(f, g);
  const double h = 0.25 * std::min(g.dx, g.dy);
  std::vector<double> out(static_cast<std::size_t>(n_angles));
  for (int a = 0; a < n_angles; ++a) {
    const double phi = 2.0 * std::numbers::pi * a / n_angles;
    const double ex = std::cos(phi), ey = std::sin(phi);
    double prev = 0.0;
    if (!detail::bilinear(f, g, cx, cy, prev)) throw DomainError("centroid lies outside the grid");
    double found = -1.0;
    double prev_r = 0.0;
    for (int s = 1;; ++s) {
      const double r = s * h;
      double val = 0.0;
      if (!detail::bilinear(f, g, cx + r * ex, cy + r * ey, val)) {
        // still above level at the last in-domain sample: the support touches the wall
        if (prev >= level) found = -1.0;
        break;
      }
      if ((prev >= level) != (val >= level)) {
        const double w = (prev - level) / (prev - val);
        found = prev_r + w * (r - prev_r);
      }
      prev = val;
      prev_r = r;
    }
    if (found < 0.0) throw NoSignChangeError("no level crossing on ray " + std::to_string(a));
    out[static_cast<std::size_t>(a)] = found;
  }
  return out;
}

/// (1/pi) sum r_b(phi_j) cos(m phi_j) dphi over equally spaced angles.
inline double mode_amplitude(const std::vector<double>& rb, int m) {
  if (m < 1) throw DomainError("wavenumber must be >= 1");
  const auto n = static_cast<int>(rb.size());
  if (n < 4 * m) throw DomainError("n_angles < 4m would alias mode " + std::to_string(m));
  const double dphi = 2.0 * std::numbers::pi / n;
  double s = 0.0;
  for (int j = 0; j < n; ++j) s += rb[static_cast<std::size_t>(j)] * std::cos(m * j * dphi);
  return s * dphi / std::numbers::pi;
}

inline double mean_radius(const std::vector<double>& rb) {
  if (rb.empty()) throw DomainError("empty boundary");
  double s = 0.0;
  for (double r : rb) s += r;
  return s / static_cast<double>(rb.size());
}

/// Least-squares slope of log(maxima) against log(1 + t).
inline double fit_decay_exponent(const std::vector<double>& times, const std::vector<double>& maxima) {
  if (times.size() != maxima.size()) throw DomainError("times and maxima differ in length");
  if (times.size() < 10) throw DomainError("decay fit needs at least 10 points");
  const auto n = static_cast<double>(times.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(maxima[i] > 0.0) || !(1.0 + times[i] > 0.0)) throw DomainError("decay fit needs positive data");
    X.push_back(std::log1p(times[i]));
    Y.push_back(std::log(maxima[i]));
    sx += X.back();
    sy += Y.back();
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("decay fit needs distinct times");
  return sxy / sxx;
}

struct BoundaryTrace {
  std::vector<double> times;
  std::vector<double> radius_mean;
  std::map<int, std::vector<double>> mode_amplitudes;
  std::vector<std::pair<double, double>> centroid_path;
  std::vector<double> mass;
};

struct TraceOptions {
  double level_fraction = 1e-3;  // front level relative to the field maximum
  int n_angles = 256;
  std::vector<int> modes{8};
  /// The front is located on rho^front_exponent. rho vanishes like a root of
  /// the distance to the edge, so rho^k (the pressure) is linear there and
  /// the crossing is found to sub-cell accuracy; 1 uses rho itself.
  double front_exponent = 1.0;
};

/// Appends the measurements of one snapshot.
inline void record_snapshot(BoundaryTrace& tr, const SimState& s, const Grid2D& g, const TraceOptions& opt) {
  if (!(opt.front_exponent > 0.0)) throw DomainError("front_exponent must be positive");
  Field2D front = s.rho;
  if (opt.front_exponent != 1.0)
    for (double& v : front.data) v = v > 0.0 ? std::pow(v, opt.front_exponent) : 0.0;
  const double peak = *std::max_element(front.data.begin(), front.data.end());
  if (!(peak > 0.0)) throw DomainError("snapshot has no positive density");
  const auto rb = extract_boundary(front, g, opt.level_fraction * peak, opt.n_angles);
  tr.times.push_back(s.t);
  tr.radius_mean.push_back(mean_radius(rb));
  for (int m : opt.modes) tr.mode_amplitudes[m].push_back(mode_amplitude(rb, m));
  tr.centroid_path.push_back(centroid(s.rho, g));
  tr.mass.push_back(total_mass(s.rho, g));
}

struct RadiusComparison {
  std::vector<double> times;
  std::vector<double> numeric;
  std::vector<double> analytic;
  std::vector<double> abs_error;
  double max_relative = 0.0;
};

/// Integrates the analytic dR/dt from the first measured radius over the
/// trace times and reports pointwise deviations.
inline RadiusComparison compare_radius(const BoundaryTrace& tr, ProblemSelector sel, const ModelParams& p,
                                       double dt_max = 0.01) {
  if (tr.times.empty() || tr.times.size() != tr.radius_mean.size()) throw DomainError("trace is empty or ragged");
  RadiusComparison out;
  out.times = tr.times;
  out.numeric = tr.radius_mean;
  out.analytic = integrate_radius_at([&](double R) { return boundary_speed(sel, p, R); }, tr.radius_mean.front(),
                                     tr.times, dt_max);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const double e = std::abs(out.numeric[i] - out.analytic[i]);
    out.abs_error.push_back(e);
    out.max_relative = std::max(out.max_relative, e / std::abs(out.analytic[i]));
  }
  return out;
}

/// Max |profile along +x - profile along +y| through the grid centre for a
/// square grid with an odd point count.
inline double axis_asymmetry(const Field2D& f) {
  if (f.nx != f.ny || f.nx % 2 == 0) throw DomainError("axis comparison needs an odd square grid");
  const int c = f.nx / 2;
  double m = 0.0;
  for (int i = 0; i < f.nx; ++i) m = std::max(m, std::abs(f(i, c) - f(c, i)));
  return m;
}

}  // namespace tumor
