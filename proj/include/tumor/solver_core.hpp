#pragma once

/// Finite-difference numerics for the density/nutrient system
///   rho_t = a Lap(rho^{k+1}) + G0 c rho,   a = k/(k+1) by default,
///   tau c_t = Lap(c) - Psi(rho, c),
/// on a square with Neumann walls (ADI + Newton) and on a disk assuming radial
/// symmetry (1D Newton).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tumor/errors.hpp"
#include "tumor/model.hpp"

namespace tumor {

/// Uniform node-centred grid; node (i, j) sits at (x0 + i dx, y0 + j dy).
struct Grid2D {
  int nx = 3;
  int ny = 3;
  double L = 1.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 0.5;
  double dy = 0.5;

  /// Square [-L/2, L/2]^2 with n points per side.
  static Grid2D centered_square(int n, double L) {
    if (n < 3) throw DomainError("grid needs at least 3 points per side");
    if (!(L > 0.0)) throw DomainError("domain length must be positive");
    Grid2D g;
    g.nx = g.ny = n;
    g.L = L;
    g.x0 = g.y0 = -0.5 * L;
    g.dx = g.dy = L / (n - 1);
    return g;
  }

  double x(int i) const { return x0 + i * dx; }
  double y(int j) const { return y0 + j * dy; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
};

/// Row-major field: value(i, j) = data[j * nx + i], i along x.
struct Field2D {
  int nx = 0;
  int ny = 0;
  std::vector<double> data;

  Field2D() = default;
  Field2D(int nx_, int ny_, double fill = 0.0)
      : nx(nx_), ny(ny_), data(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), fill) {}
  explicit Field2D(const Grid2D& g, double fill = 0.0) : Field2D(g.nx, g.ny, fill) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(j) * nx + i]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(j) * nx + i]; }
  std::size_t size() const { return data.size(); }
};

struct SimState {
  Field2D rho;
  Field2D c;
  double t = 0.0;
};

/// Radial nodes r_i = i dr on [0, R_domain].
struct AxisymState {
  std::vector<double> r;
  std::vector<double> rho;
  std::vector<double> c;
  double t = 0.0;
};

enum class CouplingOrder { CThenRho, RhoThenC, IteratePair };

struct Coupling {
  CouplingOrder order = CouplingOrder::CThenRho;
  int iterations = 1;  // outer passes for IteratePair
};

struct SolverConfig {
  double dt = 0.05;
  double newton_tol = 1e-9;
  int newton_max_iter = 30;
  Coupling coupling;
  ModelParams params;
  /// false: c is frozen and Psi is not evaluated (pure PME when G0 = 0 too).
  bool solve_nutrient = true;
  /// Coefficient a of Lap(rho^{k+1}); unset means k/(k+1).
  std::optional<double> diffusion_coefficient;
  /// Each step may be split in halves at most this many times after a zero pivot.
  int max_dt_halvings = 5;

  double pme_coefficient() const {
    return diffusion_coefficient ? *diffusion_coefficient : params.k_pme / (params.k_pme + 1.0);
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("dt must be positive");
    if (!(newton_tol > 0.0)) throw DomainError("newton_tol must be positive");
    if (newton_max_iter < 1) throw DomainError("newton_max_iter must be >= 1");
    if (coupling.iterations < 1) throw DomainError("coupling iterations must be >= 1");
    if (!(pme_coefficient() > 0.0)) throw DomainError("diffusion coefficient must be positive");
    if (!(params.k_pme > 0.0) || !(params.tau > 0.0) || !(params.kappa_smooth > 0.0) || !(params.lambda > 0.0))
      throw DomainError("model parameters must be positive");
  }
};

/// Newton bookkeeping for one accepted step.
struct StepReport {
  std::vector<double> rho_residuals;  // infinity norms, first entry before any update
  std::vector<double> c_residuals;
  int dt_halvings = 0;
};

// ---------------------------------------------------------------------------
// pointwise model terms

struct Indicator {
  double H;
  double dH;
};

/// tanh-smoothed indicator of the tumour region.
inline Indicator smoothed_indicator(double rho, double kappa) {
  if (rho <= 0.0) return {0.0, 0.0};
  const double th = std::tanh(kappa * rho);
  return {th, kappa * (1.0 - th * th)};
}

/// Nutrient sink/source: consumption lambda rho c inside, exchange -(cB - c) outside.
inline double psi(double rho, double c, const ModelParams& p) {
  const double H = smoothed_indicator(rho, p.kappa_smooth).H;
  return -(p.cB - c) + (p.lambda * rho * c + (p.cB - c)) * H;
}

// ---------------------------------------------------------------------------
// initial conditions

/// Edge of the support at t = 0.
inline double barenblatt_edge(double k) { return 2.0 * (k + 1.0) / std::sqrt(k); }

/// Similarity solution of rho_t = a Lap(rho^{k+1}) in 2D, started from the
/// profile with unit peak at t = 0.
inline double barenblatt_profile(double k, double r, double t, double a = 1.0) {
  const double T = 1.0 + a * t;
  const double decay = std::pow(T, -1.0 / (k + 1.0));
  const double bracket = 1.0 - k / (4.0 * (k + 1.0) * (k + 1.0)) * r * r * decay;
  // the edge test keeps roundoff in the bracket from leaving a tiny positive value at the edge
  if (bracket <= 0.0 || r >= barenblatt_edge(k) / std::sqrt(decay)) return 0.0;
  return std::pow(bracket, 1.0 / k) * decay;
}

inline Field2D barenblatt_ic(double k, const Grid2D& g, std::pair<double, double> center = {0.0, 0.0}) {
  if (!(k > 0.0)) throw DomainError("k_pme must be positive");
  Field2D f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f(i, j) = barenblatt_profile(k, std::hypot(g.x(i) - center.first, g.y(j) - center.second), 0.0);
  return f;
}

struct PerturbedField {
  Field2D field;
  bool linear_theory_warning = false;  // eps / R0 > 0.2
};

/// base(r) evaluated at r / (1 + (eps/R0) cos(m phi)), moving a front at R0 to
/// R0 + eps cos(m phi) to first order.
inline PerturbedField perturbed_ic(const std::function<double(double)>& base, double R0, int m, double eps,
                                   const Grid2D& g, std::pair<double, double> center = {0.0, 0.0}) {
  if (m < 1) throw DomainError("wavenumber must be >= 1");
  if (!(R0 > 0.0) || !(eps >= 0.0)) throw DomainError("need R0 > 0 and eps >= 0");
  PerturbedField out{Field2D(g), eps / R0 > 0.2};
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double dx = g.x(i) - center.first;
      const double dy = g.y(j) - center.second;
      const double r = std::hypot(dx, dy);
      const double phi = std::atan2(dy, dx);
      out.field(i, j) = base(r / (1.0 + eps / R0 * std::cos(m * phi)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// tridiagonal solves

/// Thomas algorithm. sub[i] multiplies x[i] in row i+1, sup[i] multiplies
/// x[i+1] in row i (both of length n-1). Results go to x; work needs n entries.
inline void tridiag_solve(std::span<const double> sub, std::span<const double> diag, std::span<const double> sup,
                          std::span<const double> rhs, std::span<double> x, std::span<double> work) {
  const std::size_t n = diag.size();
  if (n == 0 || rhs.size() != n || x.size() != n || work.size() < n || sub.size() + 1 < n || sup.size() + 1 < n)
    throw DomainError("tridiagonal system has inconsistent lengths");
  auto check = [](double pivot, double scale) {
    if (!std::isfinite(pivot) || std::abs(pivot) <= 1e-14 * scale) throw ZeroPivotError("zero pivot in tridiagonal solve");
  };
  double pivot = diag[0];
  check(pivot, std::abs(diag[0]) + (n > 1 ? std::abs(sup[0]) : 0.0));
  x[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    work[i] = sup[i - 1] / pivot;
    pivot = diag[i] - sub[i - 1] * work[i];
    check(pivot, std::abs(diag[i]) + std::abs(sub[i - 1]) + (i + 1 < n ? std::abs(sup[i]) : 0.0));
    x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= work[i + 1] * x[i + 1];
}

inline std::vector<double> tridiag_solve(const std::vector<double>& sub, const std::vector<double>& diag,
                                         const std::vector<double>& sup, const std::vector<double>& rhs) {
  std::vector<double> x(diag.size()), work(diag.size());
  tridiag_solve(sub, diag, sup, rhs, x, work);
  return x;
}

namespace detail {

/// Solves (D0 - coef * Lap_1d * diag(g)) v = rhs along every grid line of one
/// direction, in place. Mirror ghost points close the ends.
class LineSolver {
 public:
  explicit LineSolver(int n) : sub_(n - 1), diag_(n), sup_(n - 1), rhs_(n), x_(n), work_(n) {}

  template <class Get, class Put>
  void solve(int n, double coef_h2, Get&& d0_g, Put&& io) {
    for (int i = 0; i < n; ++i) {
      const auto [d0, g] = d0_g(i);
      diag_[i] = d0 + 2.0 * coef_h2 * g;
      rhs_[i] = io(i);
    }
    for (int i = 0; i + 1 < n; ++i) {
      const double g_next = d0_g(i + 1).second;
      const double g_prev = d0_g(i).second;
      sup_[i] = -coef_h2 * g_next * (i == 0 ? 2.0 : 1.0);
      sub_[i] = -coef_h2 * g_prev * (i + 1 == n - 1 ? 2.0 : 1.0);
    }
    tridiag_solve(std::span<const double>(sub_.data(), n - 1), std::span<const double>(diag_.data(), n),
                  std::span<const double>(sup_.data(), n - 1), std::span<const double>(rhs_.data(), n),
                  std::span<double>(x_.data(), n), std::span<double>(work_.data(), n));
    for (int i = 0; i < n; ++i) io(i) = x_[i];
  }

 private:
  std::vector<double> sub_, diag_, sup_, rhs_, x_, work_;
};

inline void sweep_x(const Grid2D& grid, const Field2D& d0, const Field2D& g, double coef, Field2D& v, LineSolver& ls) {
  const double ch = coef / (grid.dx * grid.dx);
  for (int j = 0; j < grid.ny; ++j)
    ls.solve(grid.nx, ch, [&](int i) { return std::pair{d0(i, j), g(i, j)}; },
             [&](int i) -> double& { return v(i, j); });
}

inline void sweep_y(const Grid2D& grid, const Field2D& d0, const Field2D& g, double coef, Field2D& v, LineSolver& ls) {
  const double ch = coef / (grid.dy * grid.dy);
  for (int i = 0; i < grid.nx; ++i)
    ls.solve(grid.ny, ch, [&](int j) { return std::pair{d0(i, j), g(i, j)}; },
             [&](int j) -> double& { return v(i, j); });
}

/// Approximately factorised solve
///   (D0 - coef Lx G) D0^{-1} (D0 - coef Ly G) delta = -F,
/// averaged over the x-first and y-first orderings so that a field symmetric
/// under x <-> y stays symmetric to the last bit.
inline void factorized_update(const Grid2D& grid, const Field2D& d0, const Field2D& g, double coef, const Field2D& F,
                              Field2D& delta) {
  LineSolver ls(std::max(grid.nx, grid.ny));
  Field2D a(grid), b(grid);
  for (std::size_t n = 0; n < F.size(); ++n) a.data[n] = -F.data[n];
  b = a;
  sweep_x(grid, d0, g, coef, a, ls);
  for (std::size_t n = 0; n < a.size(); ++n) a.data[n] *= d0.data[n];
  sweep_y(grid, d0, g, coef, a, ls);
  sweep_y(grid, d0, g, coef, b, ls);
  for (std::size_t n = 0; n < b.size(); ++n) b.data[n] *= d0.data[n];
  sweep_x(grid, d0, g, coef, b, ls);
  delta = Field2D(grid);
  for (std::size_t n = 0; n < delta.size(); ++n) delta.data[n] = 0.5 * (a.data[n] + b.data[n]);
}

/// Five-point Laplacian with mirrored ghost nodes, x and y parts added last.
inline double laplacian_at(const Field2D& f, const Grid2D& g, int i, int j) {
  const int im = i == 0 ? 1 : i - 1;
  const int ip = i == g.nx - 1 ? g.nx - 2 : i + 1;
  const int jm = j == 0 ? 1 : j - 1;
  const int jp = j == g.ny - 1 ? g.ny - 2 : j + 1;
  const double c = f(i, j);
  const double lx = (f(im, j) - 2.0 * c + f(ip, j)) / (g.dx * g.dx);
  const double ly = (f(i, jm) - 2.0 * c + f(i, jp)) / (g.dy * g.dy);
  return lx + ly;
}

inline double inf_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double pme_flux_potential(double rho, double k, double a) { return rho > 0.0 ? a * std::pow(rho, k + 1.0) : 0.0; }
inline double pme_flux_slope(double rho, double k, double a) { return rho > 0.0 ? a * (k + 1.0) * std::pow(rho, k) : 0.0; }

/// Newton loop shared by the solvers: residual(u, F) fills F and returns its
/// norm, update(u, F, delta) computes the correction. A halving line search
/// engages only when the full step increases the residual.
template <class State, class Residual, class Update>
void newton_solve(State& u, Residual&& residual, Update&& update, double tol, int max_iter,
                  std::vector<double>& history, const char* what) {
  State F = u, delta = u, trial = u, Ftrial = u;
  double norm = residual(u, F);
  history.push_back(norm);
  for (int it = 0; it < max_iter && norm > tol; ++it) {
    update(u, F, delta);
    double step = 1.0;
    double trial_norm = 0.0;
    for (int halving = 0; halving <= 12; ++halving) {
      trial = u;
      for (std::size_t n = 0; n < trial.size(); ++n) trial.data[n] += step * delta.data[n];
      trial_norm = residual(trial, Ftrial);
      if (trial_norm < norm) break;
      step *= 0.5;
    }
    if (!(trial_norm < norm)) throw ConvergenceError(std::string(what) + ": line search failed to reduce the residual", norm);
    u = trial;
    F = Ftrial;
    norm = trial_norm;
    history.push_back(norm);
  }
  if (!(norm <= tol)) throw ConvergenceError(std::string(what) + ": Newton iteration did not converge", norm);
}

/// Restarted GMRES with right preconditioning for A x = b, starting from x.
/// Stops once the true residual 2-norm is <= target; returns that norm.
template <class ApplyA, class ApplyPinv>
double gmres(ApplyA&& apply_A, ApplyPinv&& apply_Pinv, const std::vector<double>& b, std::vector<double>& x,
             double target, int restart, int max_restarts) {
  const std::size_t n = b.size();
  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += u[i] * v[i];
    return s;
  };
  std::vector<double> r(n), w(n), z(n);
  std::vector<std::vector<double>> V(static_cast<std::size_t>(restart) + 1, std::vector<double>(n));
  std::vector<std::vector<double>> H(static_cast<std::size_t>(restart) + 1, std::vector<double>(restart, 0.0));
  std::vector<double> cs(restart), sn(restart), g(static_cast<std::size_t>(restart) + 1);
  double beta = 0.0;
  for (int cycle = 0; cycle <= max_restarts; ++cycle) {
    apply_A(x, w);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - w[i];
    beta = std::sqrt(dot(r, r));
    if (beta <= target || cycle == max_restarts) return beta;
    for (std::size_t i = 0; i < n; ++i) V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int used = 0;
    for (int j = 0; j < restart; ++j) {
      apply_Pinv(V[j], z);
      apply_A(z, w);
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H[i][j] = dot(w, V[i]);
        for (std::size_t q = 0; q < n; ++q) w[q] -= H[i][j] * V[i][q];
      }
      H[j + 1][j] = std::sqrt(dot(w, w));
      if (H[j + 1][j] > 0.0)
        for (std::size_t q = 0; q < n; ++q) V[j + 1][q] = w[q] / H[j + 1][j];
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
        H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = t;
      }
      const double den = std::hypot(H[j][j], H[j + 1][j]);
      cs[j] = den > 0.0 ? H[j][j] / den : 1.0;
      sn[j] = den > 0.0 ? H[j + 1][j] / den : 0.0;
      H[j][j] = den;
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] *= cs[j];
      used = j + 1;
      if (std::abs(g[j + 1]) <= 0.5 * target || H[j][j] == 0.0) break;
    }
    std::vector<double> y(static_cast<std::size_t>(used));
    for (int i = used - 1; i >= 0; --i) {
      double s = g[i];
      for (int k = i + 1; k < used; ++k) s -= H[i][k] * y[k];
      y[i] = H[i][i] != 0.0 ? s / H[i][i] : 0.0;
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < used; ++i)
      for (std::size_t q = 0; q < n; ++q) w[q] += y[i] * V[i][q];
    apply_Pinv(w, z);
    for (std::size_t q = 0; q < n; ++q) x[q] += z[q];
  }
  return beta;
}

/// Newton correction for the Jacobian J = D0 - coef Lap diag(g).
///
/// The factorised solve alone contracts slowly once coef g/dx^2 is large, so
/// it preconditions GMRES on the exact J; one more factorised pass on the
/// leftover linear residual then makes sum_w(J delta + F) vanish whenever the
/// factorised pass does, which keeps the discrete mass exact for pure PME.
inline void krylov_update(const Grid2D& grid, const Field2D& d0, const Field2D& g, double coef, const Field2D& F,
                          Field2D& delta, double newton_tol) {
  Field2D in(grid), out(grid);
  auto apply_J = [&](const std::vector<double>& v, std::vector<double>& res) {
    for (std::size_t n = 0; n < v.size(); ++n) in.data[n] = g.data[n] * v[n];
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const std::size_t n = static_cast<std::size_t>(j) * grid.nx + i;
        res[n] = d0.data[n] * v[n] - coef * laplacian_at(in, grid, i, j);
      }
  };
  auto apply_P = [&](const std::vector<double>& v, std::vector<double>& res) {
    for (std::size_t n = 0; n < v.size(); ++n) in.data[n] = -v[n];
    factorized_update(grid, d0, g, coef, in, out);
    res = out.data;
  };
  std::vector<double> rhs(F.size()), x(F.size(), 0.0), Jx(F.size()), corr(F.size());
  double fnorm = 0.0;
  for (std::size_t n = 0; n < F.size(); ++n) {
    rhs[n] = -F.data[n];
    fnorm += F.data[n] * F.data[n];
  }
  const double target = std::max(0.1 * newton_tol, 1e-4 * std::sqrt(fnorm));
  gmres(apply_J, apply_P, rhs, x, target, 30, 20);
  apply_J(x, Jx);
  for (std::size_t n = 0; n < rhs.size(); ++n) Jx[n] = rhs[n] - Jx[n];
  apply_P(Jx, corr);
  delta = Field2D(grid);
  for (std::size_t n = 0; n < x.size(); ++n) delta.data[n] = x[n] + corr[n];
}

/// Thin vector wrapper so the 1D solver can share newton_solve.
struct Vec {
  std::vector<double> data;
  std::size_t size() const { return data.size(); }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// 2D ADI

namespace detail {

inline void adi_rho_solve(const Grid2D& grid, const Field2D& rho_old, const Field2D& c, Field2D& rho,
                          const SolverConfig& cfg, double dt, std::vector<double>& history) {
  const double k = cfg.params.k_pme;
  const double a = cfg.pme_coefficient();
  const double G0 = cfg.params.G0;
  Field2D f(grid), d0(grid), g(grid);
  auto residual = [&](const Field2D& u, Field2D& F) {
    for (std::size_t n = 0; n < u.size(); ++n) f.data[n] = pme_flux_potential(u.data[n], k, a);
    double m = 0.0;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double r = u(i, j) - rho_old(i, j) - dt * laplacian_at(f, grid, i, j) - dt * G0 * c(i, j) * u(i, j);
        F(i, j) = r;
        m = std::max(m, std::abs(r));
      }
    return m;
  };
  auto update = [&](const Field2D& u, const Field2D& F, Field2D& delta) {
    for (std::size_t n = 0; n < u.size(); ++n) {
      d0.data[n] = 1.0 - dt * G0 * c.data[n];
      g.data[n] = pme_flux_slope(u.data[n], k, a);
    }
    krylov_update(grid, d0, g, dt, F, delta, cfg.newton_tol);
  };
  newton_solve(rho, residual, update, cfg.newton_tol, cfg.newton_max_iter, history, "density equation");
}

inline void adi_c_solve(const Grid2D& grid, const Field2D& c_old, const Field2D& rho, Field2D& c,
                        const SolverConfig& cfg, double dt, std::vector<double>& history) {
  const ModelParams& p = cfg.params;
  const double q = dt / p.tau;
  Field2D beta(grid), source(grid), d0(grid), ones(grid, 1.0);
  // Psi = beta c - cB (1 - H): linear in c with rho lagged
  for (std::size_t n = 0; n < rho.size(); ++n) {
    const double H = smoothed_indicator(rho.data[n], p.kappa_smooth).H;
    beta.data[n] = (1.0 - H) + p.lambda * rho.data[n] * H;
    source.data[n] = p.cB * (1.0 - H);
    d0.data[n] = 1.0 + q * beta.data[n];
  }
  auto residual = [&](const Field2D& u, Field2D& F) {
    double m = 0.0;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const std::size_t n = static_cast<std::size_t>(j) * grid.nx + i;
        const double r = u(i, j) - c_old(i, j) - q * laplacian_at(u, grid, i, j) +
                         q * (beta.data[n] * u(i, j) - source.data[n]);
        F(i, j) = r;
        m = std::max(m, std::abs(r));
      }
    return m;
  };
  auto update = [&](const Field2D&, const Field2D& F, Field2D& delta) {
    krylov_update(grid, d0, ones, q, F, delta, cfg.newton_tol);
  };
  newton_solve(c, residual, update, cfg.newton_tol, cfg.newton_max_iter, history, "nutrient equation");
}

inline void adi_step_once(const Grid2D& grid, SimState& s, const SolverConfig& cfg, double dt, StepReport& rep) {
  const Field2D rho_old = s.rho;
  const Field2D c_old = s.c;
  auto solve_c = [&] {
    if (cfg.solve_nutrient) adi_c_solve(grid, c_old, s.rho, s.c, cfg, dt, rep.c_residuals);
  };
  auto solve_rho = [&] { adi_rho_solve(grid, rho_old, s.c, s.rho, cfg, dt, rep.rho_residuals); };
  switch (cfg.coupling.order) {
    case CouplingOrder::CThenRho:
      solve_c();
      solve_rho();
      break;
    case CouplingOrder::RhoThenC:
      solve_rho();
      solve_c();
      break;
    case CouplingOrder::IteratePair:
      for (int it = 0; it < cfg.coupling.iterations; ++it) {
        solve_c();
        solve_rho();
      }
      break;
  }
  s.t += dt;
}

template <class StepOnce, class State>
void step_with_halving(State& s, double dt, int depth, int max_depth, StepReport& rep, StepOnce&& once) {
  State backup = s;
  StepReport local;
  try {
    once(s, dt, local);
    rep.rho_residuals.insert(rep.rho_residuals.end(), local.rho_residuals.begin(), local.rho_residuals.end());
    rep.c_residuals.insert(rep.c_residuals.end(), local.c_residuals.begin(), local.c_residuals.end());
  } catch (const ZeroPivotError&) {
    if (depth >= max_depth) throw;
    s = std::move(backup);
    rep.dt_halvings = std::max(rep.dt_halvings, depth + 1);
    step_with_halving(s, 0.5 * dt, depth + 1, max_depth, rep, once);
    step_with_halving(s, 0.5 * dt, depth + 1, max_depth, rep, once);
  }
}

}  // namespace detail

/// One backward-Euler step of the coupled system on the square.
inline SimState step_adi(const SimState& state, const Grid2D& grid, const SolverConfig& cfg, StepReport* report = nullptr) {
  cfg.validate();
  if (state.rho.nx != grid.nx || state.rho.ny != grid.ny || state.c.nx != grid.nx || state.c.ny != grid.ny)
    throw DomainError("state does not match the grid");
  SimState s = state;
  StepReport rep;
  detail::step_with_halving(s, cfg.dt, 0, cfg.max_dt_halvings, rep,
                            [&](SimState& st, double dt, StepReport& r) { detail::adi_step_once(grid, st, cfg, dt, r); });
  if (report) *report = std::move(rep);
  return s;
}

// ---------------------------------------------------------------------------
// radially symmetric solver

/// Control-volume weights (per unit angle) of the radial nodes: r dr in the
/// interior, dr^2/8 at the axis, R dr/2 - dr^2/8 at the outer wall.
inline std::vector<double> axisym_volumes(const std::vector<double>& r) {
  const std::size_t n = r.size();
  if (n < 3) throw DomainError("radial grid needs at least 3 nodes");
  const double dr = r[1] - r[0];
  std::vector<double> v(n);
  v[0] = dr * dr / 8.0;
  for (std::size_t i = 1; i + 1 < n; ++i) v[i] = r[i] * dr;
  v[n - 1] = r[n - 1] * dr / 2.0 - dr * dr / 8.0;
  return v;
}

inline AxisymState make_axisym_state(double R_domain, int intervals, const std::function<double(double)>& rho0,
                                     double c0) {
  if (intervals < 2 || !(R_domain > 0.0)) throw DomainError("radial grid needs R > 0 and >= 2 intervals");
  AxisymState s;
  const double dr = R_domain / intervals;
  for (int i = 0; i <= intervals; ++i) {
    const double r = i == intervals ? R_domain : i * dr;
    s.r.push_back(r);
    s.rho.push_back(rho0(r));
    s.c.push_back(c0);
  }
  return s;
}

/// 2 pi * sum V_i rho_i, the discrete integral conserved by the flux form.
inline double axisym_mass(const AxisymState& s) {
  const auto v = axisym_volumes(s.r);
  double m = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) m += v[i] * s.rho[i];
  return 2.0 * std::numbers::pi * m;
}

namespace detail {

/// Flux-form radial operator (1/V_i)[w_{i+1/2}(f_{i+1}-f_i) - w_{i-1/2}(f_i-f_{i-1})]/dr
/// as tridiagonal coefficients lo_i (f_{i-1}), mid_i, hi_i (f_{i+1}).
struct RadialOperator {
  std::vector<double> lo, mid, hi;

  explicit RadialOperator(const std::vector<double>& r) {
    const std::size_t n = r.size();
    const double dr = r[1] - r[0];
    const auto v = axisym_volumes(r);
    lo.assign(n, 0.0);
    mid.assign(n, 0.0);
    hi.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double w_out = i + 1 < n ? (r[i] + 0.5 * dr) / dr : 0.0;
      const double w_in = i > 0 ? (r[i] - 0.5 * dr) / dr : 0.0;
      hi[i] = w_out / v[i];
      lo[i] = w_in / v[i];
      mid[i] = -(w_out + w_in) / v[i];
    }
  }

  double apply(const std::vector<double>& f, std::size_t i) const {
    double out = mid[i] * f[i];
    if (i > 0) out += lo[i] * f[i - 1];
    if (i + 1 < f.size()) out += hi[i] * f[i + 1];
    return out;
  }
};

inline void axisym_rho_solve(const RadialOperator& op, const std::vector<double>& rho_old, const std::vector<double>& c,
                             std::vector<double>& rho, const SolverConfig& cfg, double dt, std::vector<double>& history) {
  const double k = cfg.params.k_pme;
  const double a = cfg.pme_coefficient();
  const double G0 = cfg.params.G0;
  const std::size_t n = rho.size();
  std::vector<double> f(n), sub(n - 1), diag(n), sup(n - 1), x(n), work(n), rhs(n);
  auto residual = [&](const Vec& u, Vec& F) {
    for (std::size_t i = 0; i < n; ++i) f[i] = pme_flux_potential(u.data[i], k, a);
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      F.data[i] = u.data[i] - rho_old[i] - dt * op.apply(f, i) - dt * G0 * c[i] * u.data[i];
      m = std::max(m, std::abs(F.data[i]));
    }
    return m;
  };
  auto update = [&](const Vec& u, const Vec& F, Vec& delta) {
    for (std::size_t i = 0; i < n; ++i) f[i] = pme_flux_slope(u.data[i], k, a);
    for (std::size_t i = 0; i < n; ++i) {
      diag[i] = 1.0 - dt * G0 * c[i] - dt * op.mid[i] * f[i];
      if (i + 1 < n) sup[i] = -dt * op.hi[i] * f[i + 1];
      if (i > 0) sub[i - 1] = -dt * op.lo[i] * f[i - 1];
      rhs[i] = -F.data[i];
    }
    tridiag_solve(sub, diag, sup, rhs, x, work);
    delta.data = x;
  };
  Vec u{rho};
  newton_solve(u, residual, update, cfg.newton_tol, cfg.newton_max_iter, history, "density equation");
  rho = std::move(u.data);
}

inline void axisym_c_solve(const RadialOperator& op, const std::vector<double>& c_old, const std::vector<double>& rho,
                           std::vector<double>& c, const SolverConfig& cfg, double dt, std::vector<double>& history) {
  const ModelParams& p = cfg.params;
  const double q = dt / p.tau;
  const std::size_t n = c.size();
  std::vector<double> beta(n), source(n), sub(n - 1), diag(n), sup(n - 1), x(n), work(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double H = smoothed_indicator(rho[i], p.kappa_smooth).H;
    beta[i] = (1.0 - H) + p.lambda * rho[i] * H;
    source[i] = p.cB * (1.0 - H);
  }
  auto residual = [&](const Vec& u, Vec& F) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      F.data[i] = u.data[i] - c_old[i] - q * op.apply(u.data, i) + q * (beta[i] * u.data[i] - source[i]);
      m = std::max(m, std::abs(F.data[i]));
    }
    return m;
  };
  auto update = [&](const Vec&, const Vec& F, Vec& delta) {
    for (std::size_t i = 0; i < n; ++i) {
      diag[i] = 1.0 + q * beta[i] - q * op.mid[i];
      if (i + 1 < n) sup[i] = -q * op.hi[i];
      if (i > 0) sub[i - 1] = -q * op.lo[i];
      rhs[i] = -F.data[i];
    }
    tridiag_solve(sub, diag, sup, rhs, x, work);
    delta.data = x;
  };
  Vec u{c};
  newton_solve(u, residual, update, cfg.newton_tol, cfg.newton_max_iter, history, "nutrient equation");
  c = std::move(u.data);
}

inline void axisym_step_once(AxisymState& s, const SolverConfig& cfg, double dt, StepReport& rep) {
  const RadialOperator op(s.r);
  const std::vector<double> rho_old = s.rho;
  const std::vector<double> c_old = s.c;
  auto solve_c = [&] {
    if (cfg.solve_nutrient) axisym_c_solve(op, c_old, s.rho, s.c, cfg, dt, rep.c_residuals);
  };
  auto solve_rho = [&] { axisym_rho_solve(op, rho_old, s.c, s.rho, cfg, dt, rep.rho_residuals); };
  switch (cfg.coupling.order) {
    case CouplingOrder::CThenRho:
      solve_c();
      solve_rho();
      break;
    case CouplingOrder::RhoThenC:
      solve_rho();
      solve_c();
      break;
    case CouplingOrder::IteratePair:
      for (int it = 0; it < cfg.coupling.iterations; ++it) {
        solve_c();
        solve_rho();
      }
      break;
  }
  s.t += dt;
}

}  // namespace detail

/// One backward-Euler step of the radially symmetric system.
inline AxisymState step_axisym(const AxisymState& state, const SolverConfig& cfg, StepReport* report = nullptr) {
  cfg.validate();
  if (state.r.size() < 3 || state.rho.size() != state.r.size() || state.c.size() != state.r.size())
    throw DomainError("axisymmetric state arrays are inconsistent");
  AxisymState s = state;
  StepReport rep;
  detail::step_with_halving(s, cfg.dt, 0, cfg.max_dt_halvings, rep,
                            [&](AxisymState& st, double dt, StepReport& r) { detail::axisym_step_once(st, cfg, dt, r); });
  if (report) *report = std::move(rep);
  return s;
}

// ---------------------------------------------------------------------------
// driver

struct StepRecord {
  std::size_t step = 0;
  double t = 0.0;
  int rho_iterations = 0;
  int c_iterations = 0;
  double rho_residual = 0.0;
  double c_residual = 0.0;
  int dt_halvings = 0;
  double min_rho = 0.0;
};

struct Trajectory {
  std::vector<SimState> snapshots;
  std::vector<StepRecord> records;
  bool stopped_early = false;
};

/// Called on every snapshot (including the initial state); returning false
/// ends the run after that snapshot.
using SnapshotObserver = std::function<bool(const SimState&)>;

inline std::size_t step_count(double t_end, double dt) {
  if (!(t_end >= 0.0) || !(dt > 0.0)) throw DomainError("need t_end >= 0 and dt > 0");
  return static_cast<std::size_t>(std::llround(t_end / dt));
}

/// Advances the ADI solver to t_end, keeping a snapshot every snapshot_every
/// steps. Step failures are rethrown with the failing step index attached.
inline Trajectory run_simulation(const SolverConfig& cfg, const Grid2D& grid, const SimState& ic, double t_end,
                                 std::size_t snapshot_every, const SnapshotObserver& observer = {},
                                 bool keep_snapshots = true) {
  cfg.validate();
  if (snapshot_every == 0) throw DomainError("snapshot_every must be >= 1");
  const std::size_t steps = step_count(t_end, cfg.dt);
  Trajectory out;
  SimState s = ic;
  auto emit = [&](const SimState& st) {
    if (keep_snapshots) out.snapshots.push_back(st);
    return observer ? observer(st) : true;
  };
  if (!emit(s)) {
    out.stopped_early = true;
    return out;
  }
  for (std::size_t n = 1; n <= steps; ++n) {
    StepReport rep;
    try {
      s = step_adi(s, grid, cfg, &rep);
    } catch (const ConvergenceError& e) {
      throw ConvergenceError(std::string(e.what()) + " at step " + std::to_string(n), e.last_residual(),
                             static_cast<std::ptrdiff_t>(n));
    } catch (const ZeroPivotError& e) {
      throw ZeroPivotError(std::string(e.what()) + " at step " + std::to_string(n));
    }
    s.t = static_cast<double>(n) * cfg.dt + ic.t;
    StepRecord rec;
    rec.step = n;
    rec.t = s.t;
    rec.rho_iterations = static_cast<int>(rep.rho_residuals.size()) - 1;
    rec.c_iterations = rep.c_residuals.empty() ? 0 : static_cast<int>(rep.c_residuals.size()) - 1;
    rec.rho_residual = rep.rho_residuals.empty() ? 0.0 : rep.rho_residuals.back();
    rec.c_residual = rep.c_residuals.empty() ? 0.0 : rep.c_residuals.back();
    rec.dt_halvings = rep.dt_halvings;
    rec.min_rho = *std::min_element(s.rho.data.begin(), s.rho.data.end());
    out.records.push_back(rec);
    if (n % snapshot_every == 0) {
      if (!emit(s)) {
        out.stopped_early = true;
        break;
      }
    }
  }
  return out;
}

/// Samples an axisymmetric state onto the 2D grid by linear interpolation in r.
inline double interpolate_radial(const AxisymState& s, double r) {
  if (r <= s.r.front()) return s.rho.front();
  if (r >= s.r.back()) return s.rho.back();
  const double dr = s.r[1] - s.r[0];
  const auto i = std::min(static_cast<std::size_t>(r / dr), s.r.size() - 2);
  const double w = (r - s.r[i]) / (s.r[i + 1] - s.r[i]);
  return (1.0 - w) * s.rho[i] + w * s.rho[i + 1];
}

}  // namespace tumor
