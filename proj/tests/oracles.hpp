#pragma once

// Independent reference evaluations used only by the tests.

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

/// I_nu(x) by the ascending series in long double.
inline long double bessel_i_series(long double nu, long double x) {
  const long double h = x / 2;
  long double term = std::pow(h, nu) / std::tgamma(nu + 1);
  long double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= h * h / (k * (k + nu));
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  return sum;
}

/// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by the trapezoid rule,
/// which converges geometrically for this analytic, decaying integrand.
inline long double bessel_k_integral(long double nu, long double x) {
  const long double h = 0.01L;
  long double sum = 0.5L * std::exp(-x);
  for (int k = 1;; ++k) {
    const long double t = k * h;
    const long double v = std::exp(-x * std::cosh(t)) * std::cosh(nu * t);
    sum += v;
    if (v < sum * 1e-22L && t > 1) break;
  }
  return sum * h;
}

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[p][c])) p = r;
    std::swap(A[c], A[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

}  // namespace oracle
