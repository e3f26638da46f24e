#pragma once

/// Modified Bessel functions I_nu, K_nu for integer and half-integer order.
///
/// Every routine has an exponentially scaled twin (I e^{-x}, K e^{x}) so that
/// ratios of large and small values can be formed without overflow.

#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include "tumor/errors.hpp"

namespace tumor {

/// Order nu = twice/2 with twice >= 0, so nu is n or n + 1/2 exactly.
class BesselOrder {
 public:
  constexpr BesselOrder() = default;

  static constexpr BesselOrder integer(int n) { return BesselOrder(2 * n); }
  static constexpr BesselOrder half_integer(int n) { return BesselOrder(2 * n + 1); }

  static BesselOrder from_twice(int twice) {
    if (twice < 0) throw DomainError("Bessel order must be nonnegative");
    return BesselOrder(twice);
  }

  static BesselOrder from_double(double nu) {
    const double t = 2.0 * nu;
    if (!std::isfinite(nu) || nu < 0.0 || t != std::round(t) || t > 1e6)
      throw DomainError("Bessel order must be a nonnegative integer or half-integer");
    return BesselOrder(static_cast<int>(t));
  }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  friend constexpr bool operator==(BesselOrder, BesselOrder) = default;

 private:
  explicit constexpr BesselOrder(int twice) : twice_(twice) {}
  int twice_ = 0;
};

struct BesselValue {
  double value;
  double derivative;
};

enum class BesselKind { I, K };
enum class ExpansionRegime { NearZero, NearInfinity };

struct ExpansionSpec {
  ExpansionRegime regime = ExpansionRegime::NearZero;
  int term_count = 1;
};

namespace detail {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kEulerGamma = std::numbers::egamma;
inline constexpr double kEps = std::numeric_limits<double>::epsilon();

/// Ascending series switches to the ratio route above this argument.
inline constexpr double kISeriesLimit = 15.0;
/// Integer-order K: log series below, Steed's continued fraction above.
inline constexpr double kKSeriesLimit = 2.0;

inline void check_argument(double x) {
  if (!std::isfinite(x) || x <= 0.0) throw DomainError("Bessel argument must be finite and positive");
}

/// (x/2)^nu / Gamma(nu+1) built by products so that half-integer orders stay exact.
inline double series_lead(int twice_nu, double x) {
  const double h = 0.5 * x;
  const int n = twice_nu / 2;
  double lead;
  if (twice_nu % 2 == 0) {
    lead = 1.0;
    for (int j = 1; j <= n; ++j) lead *= h / j;
  } else {
    lead = std::sqrt(h) / (0.5 * std::sqrt(kPi));
    for (int j = 1; j <= n; ++j) lead *= h / (j + 0.5);
  }
  return lead;
}

/// Ascending series for I_nu(x), twice_nu >= 0, without scaling.
inline double i_series(int twice_nu, double x) {
  const double nu = 0.5 * twice_nu;
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 500; ++k) {
    term *= q / (k * (k + nu));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum * series_lead(twice_nu, x);
}

/// e^{-x} I_0(x) from the large-argument expansion, summed until the terms
/// stop shrinking.
inline double i0_asymptotic_scaled(double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (odd * odd) / (8.0 * k * x);  // (-1)^k a_k(0) / x^k, all positive
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * sum) break;
  }
  return sum / std::sqrt(2.0 * kPi * x);
}

/// I_nu / I_{nu-1} by the modified Lentz method.
inline double i_ratio_cf(double nu, double x) {
  constexpr double tiny = 1e-300;
  double f = tiny;
  double c = f;
  double d = 0.0;
  for (int j = 0; j < 100000; ++j) {
    const double b = 2.0 * (nu + j) / x;
    d = b + d;
    if (d == 0.0) d = tiny;
    d = 1.0 / d;
    c = b + 1.0 / c;
    if (c == 0.0) c = tiny;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return f;
  }
  throw ConvergenceError("continued fraction for I_nu/I_nu-1 did not converge", f);
}

/// e^{-x} I_nu(x) for nu >= 0 and x above the series limit: base order value
/// (0 or 1/2) times a chain of ratios seeded by a continued fraction.
/// Fills out[j] with orders twice_top - 2*(count-1) + 2*j.
template <std::size_t N>
void i_scaled_large(int twice_top, double x, std::array<double, N>& out, int count) {
  const bool half = (twice_top % 2) != 0;
  const double base_value =
      half ? -std::expm1(-2.0 * x) / std::sqrt(2.0 * kPi * x) : i0_asymptotic_scaled(x);
  const int base_twice = half ? 1 : 0;
  const int steps = (twice_top - base_twice) / 2;
  // ratios h[j] = I_{base+j} / I_{base+j-1}, j = 1..steps
  double h = i_ratio_cf(0.5 * twice_top, x);
  double value = base_value;
  if (steps == 0) {
    out[count - 1] = value;
    return;
  }
  // walk the ratio chain downward, storing partial ratios
  constexpr int kMaxSteps = 4096;
  if (steps > kMaxSteps) throw DomainError("Bessel order too large");
  static thread_local std::array<double, kMaxSteps + 1> ratios;
  ratios[steps] = h;
  for (int j = steps; j > 1; --j) {
    const double nu_j = 0.5 * base_twice + j;
    h = 1.0 / (2.0 * (nu_j - 1.0) / x + h);
    ratios[j - 1] = h;
  }
  const int first_needed = steps - (count - 1);
  if (first_needed <= 0) out[-first_needed] = value;
  for (int j = 1; j <= steps; ++j) {
    value *= ratios[j];
    const int slot = j - first_needed;
    if (slot >= 0 && slot < count) out[slot] = value;
  }
}

/// e^{-x} I_nu(x), twice_nu >= 0.
inline double i_scaled_nonneg(int twice_nu, double x) {
  if (x <= kISeriesLimit) return i_series(twice_nu, x) * std::exp(-x);
  std::array<double, 1> out{};
  i_scaled_large(twice_nu, x, out, 1);
  return out[0];
}

/// e^{x} K_{n+1/2}(x): terminating closed form, all terms positive.
inline double k_half_scaled(int n, double x) {
  double c = 1.0;
  double sum = 1.0;
  for (int k = 0; k < n; ++k) {
    c *= static_cast<double>(n + k + 1) * static_cast<double>(n - k) / ((k + 1) * 2.0 * x);
    sum += c;
  }
  return std::sqrt(kPi / (2.0 * x)) * sum;
}

/// K_0, K_1 by the logarithmic ascending series (x <= 2), unscaled.
inline std::array<double, 2> k01_series(double x) {
  const double q = 0.25 * x * x;
  const double lg = std::log(0.5 * x);
  const double i0 = i_series(0, x);
  const double i1 = i_series(2, x);

  double term = 1.0;  // q^k / (k!)^2
  double harmonic = 0.0;
  double s0 = 0.0;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    harmonic += 1.0 / k;
    const double add = term * harmonic;
    s0 += add;
    if (add < 1e-17 * std::abs(s0)) break;
  }
  const double k0 = -(lg + kEulerGamma) * i0 + s0;

  term = 1.0;  // q^k / (k! (k+1)!)
  double hk = 0.0;
  double hk1 = 1.0;
  double s1 = (hk - kEulerGamma) + (hk1 - kEulerGamma);
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + 1));
    hk += 1.0 / k;
    hk1 += 1.0 / (k + 1);
    const double add = term * ((hk - kEulerGamma) + (hk1 - kEulerGamma));
    s1 += add;
    if (std::abs(add) < 1e-17 * std::abs(s1)) break;
  }
  const double k1 = 1.0 / x + lg * i1 - 0.25 * x * s1;
  return {k0, k1};
}

/// e^{x} K_mu and e^{x} K_{mu+1} by Steed's continued fraction (x >= 2).
inline std::array<double, 2> k_steed_scaled(double mu, double x) {
  const double a1 = 0.25 - mu * mu;
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d;
  double delh = d;
  double q1 = 0.0;
  double q2 = 1.0;
  double q = a1;
  double c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  bool converged = false;
  for (int i = 1; i < 100000; ++i) {
    a -= 2.0 * i;
    c = -a * c / (i + 1.0);
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) {
      converged = true;
      break;
    }
  }
  if (!converged) throw ConvergenceError("continued fraction for K_nu did not converge", s);
  h *= a1;
  const double kmu = std::sqrt(kPi / (2.0 * x)) / s;
  const double kmu1 = kmu * (mu + x + 0.5 - h) / x;
  return {kmu, kmu1};
}

/// e^{x} K_nu(x) for orders twice_top - 2*(count-1) ... twice_top (all >= 0).
template <std::size_t N>
void k_scaled_range(int twice_top, double x, std::array<double, N>& out, int count) {
  const bool half = (twice_top % 2) != 0;
  const int top = twice_top / 2;
  const int first = top - (count - 1);
  auto store = [&](int n, double v) {
    const int slot = n - first;
    if (slot >= 0 && slot < count) out[slot] = v;
  };
  if (half) {
    for (int n = std::max(first, 0); n <= top; ++n) store(n, k_half_scaled(n, x));
    return;
  }
  std::array<double, 2> k01;
  if (x <= kKSeriesLimit) {
    k01 = k01_series(x);
    const double e = std::exp(x);
    k01[0] *= e;
    k01[1] *= e;
  } else {
    k01 = k_steed_scaled(0.0, x);
  }
  double km = k01[0];
  double kc = k01[1];
  store(0, km);
  store(1, kc);
  for (int n = 1; n < top; ++n) {
    const double kn = km + (2.0 * n / x) * kc;
    km = kc;
    kc = kn;
    store(n + 1, kc);
  }
}

/// e^{x} K_nu(x) for any signed twice-order (K is even in nu).
inline double k_scaled_signed(int twice_nu, double x) {
  std::array<double, 1> out{};
  k_scaled_range(std::abs(twice_nu), x, out, 1);
  return out[0];
}

/// e^{-x} I_nu(x) for any signed twice-order; negative half-integers use
/// I_{-mu} = I_mu + (2/pi) sin(mu pi) K_mu.
inline double i_scaled_signed(int twice_nu, double x) {
  if (twice_nu >= 0) return i_scaled_nonneg(twice_nu, x);
  const int mu2 = -twice_nu;
  if (mu2 % 2 == 0) return i_scaled_nonneg(mu2, x);
  const int n = mu2 / 2;
  const double sign = (n % 2 == 0) ? 1.0 : -1.0;
  return i_scaled_nonneg(mu2, x) + (2.0 / kPi) * sign * k_scaled_signed(mu2, x) * std::exp(-2.0 * x);
}

/// Scaled I at orders nu-1, nu, nu+1.
inline std::array<double, 3> i_scaled_triplet(int twice_nu, double x) {
  std::array<double, 3> r{};
  if (x > kISeriesLimit && twice_nu >= 2) {
    i_scaled_large(twice_nu + 2, x, r, 3);
    return r;
  }
  r[0] = i_scaled_signed(twice_nu - 2, x);
  r[1] = i_scaled_nonneg(twice_nu, x);
  r[2] = i_scaled_nonneg(twice_nu + 2, x);
  return r;
}

/// Scaled K at orders nu-1, nu, nu+1.
inline std::array<double, 3> k_scaled_triplet(int twice_nu, double x) {
  std::array<double, 3> r{};
  if (twice_nu >= 2) {
    k_scaled_range(twice_nu + 2, x, r, 3);
    return r;
  }
  std::array<double, 2> up{};
  k_scaled_range(twice_nu + 2, x, up, 2);
  r[0] = k_scaled_signed(twice_nu - 2, x);
  r[1] = up[0];
  r[2] = up[1];
  return r;
}

inline void check_k_overflow(BesselOrder order, double x) {
  if (x < 1e-8 && order.twice() >= 2)
    throw OverflowError("K_nu(x) overflows for x < 1e-8 at order >= 1");
}

/// Appendix-style coefficient a_k(nu) = prod_{j=1..k}(4nu^2 - (2j-1)^2) / (k! 8^k).
inline double asymptotic_coefficient(double nu, int k) {
  double a = 1.0;
  const double mu = 4.0 * nu * nu;
  for (int j = 1; j <= k; ++j) {
    const double odd = 2.0 * j - 1.0;
    a *= (mu - odd * odd) / (8.0 * j);
  }
  return a;
}

}  // namespace detail

/// e^{-x} I_nu(x) and e^{-x} I_nu'(x).
inline BesselValue bessel_i_scaled(BesselOrder order, double x) {
  detail::check_argument(x);
  const auto t = detail::i_scaled_triplet(order.twice(), x);
  return {t[1], 0.5 * (t[0] + t[2])};
}

/// e^{x} K_nu(x) and e^{x} K_nu'(x).
inline BesselValue bessel_k_scaled(BesselOrder order, double x) {
  detail::check_argument(x);
  detail::check_k_overflow(order, x);
  const auto t = detail::k_scaled_triplet(order.twice(), x);
  if (!std::isfinite(t[0]) || !std::isfinite(t[1]) || !std::isfinite(t[2]))
    throw OverflowError("K_nu(x) is not representable");
  return {t[1], -0.5 * (t[0] + t[2])};
}

/// I_nu(x) and its derivative from I_nu' = (I_{nu-1} + I_{nu+1}) / 2.
inline BesselValue bessel_i(BesselOrder order, double x) {
  const BesselValue s = bessel_i_scaled(order, x);
  const double e = std::exp(x);
  const BesselValue r{s.value * e, s.derivative * e};
  if (!std::isfinite(r.value) || !std::isfinite(r.derivative))
    throw OverflowError("I_nu(x) overflows; use bessel_i_scaled");
  return r;
}

/// K_nu(x) and its derivative from K_nu' = -(K_{nu-1} + K_{nu+1}) / 2.
inline BesselValue bessel_k(BesselOrder order, double x) {
  const BesselValue s = bessel_k_scaled(order, x);
  const double e = std::exp(-x);
  const BesselValue r{s.value * e, s.derivative * e};
  if (!std::isfinite(r.value) || !std::isfinite(r.derivative))
    throw OverflowError("K_nu(x) overflows");
  return r;
}

/// Truncated small- or large-argument expansion. Validation use only.
inline double bessel_asymptotic(BesselKind kind, BesselOrder order, double x, ExpansionSpec spec) {
  using detail::kPi;
  if (spec.term_count < 1 || spec.term_count > 20)
    throw DomainError("term_count must lie in [1, 20]");
  if (!std::isfinite(x) || x < 0.0) throw DomainError("expansion argument must be finite and nonnegative");
  const double nu = order.value();
  const int n = spec.term_count;

  if (spec.regime == ExpansionRegime::NearInfinity) {
    if (x < 5.0) throw RegimeMismatchError("large-argument expansion requires x >= 5");
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const double term = detail::asymptotic_coefficient(nu, k) / std::pow(x, k);
      sum += (kind == BesselKind::I && (k % 2) == 1) ? -term : term;
    }
    if (kind == BesselKind::I) return std::exp(x) / std::sqrt(2.0 * kPi * x) * sum;
    return std::sqrt(kPi / (2.0 * x)) * std::exp(-x) * sum;
  }

  if (x > 1.0) throw RegimeMismatchError("small-argument expansion requires x <= 1");
  const double h = 0.5 * x;
  auto i_truncated = [&](double order_value) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const double g = k + order_value + 1.0;
      if (g <= 0.0 && g == std::round(g)) continue;  // 1/Gamma at poles is zero
      sum += std::pow(h, 2.0 * k + order_value) / (std::tgamma(k + 1.0) * std::tgamma(g));
    }
    return sum;
  };
  if (kind == BesselKind::I) return i_truncated(nu);

  if (x == 0.0) throw DomainError("K_nu is singular at x = 0");
  if (!order.is_integer()) {
    return 0.5 * kPi * (i_truncated(-nu) - i_truncated(nu)) / std::sin(nu * kPi);
  }
  // integer order: finite negative-power part plus n terms of the log series
  const int m = order.twice() / 2;
  double finite = 0.0;
  for (int k = 0; k < m; ++k)
    finite += std::tgamma(m - k) / std::tgamma(k + 1.0) * std::pow(-h * h, k);
  finite *= 0.5 * std::pow(h, -m);
  auto digamma_int = [](int j) {  // psi(j) for integer j >= 1
    double s = -detail::kEulerGamma;
    for (int i = 1; i < j; ++i) s += 1.0 / i;
    return s;
  };
  double tail = 0.0;
  for (int k = 0; k < n; ++k)
    tail += (digamma_int(k + 1) + digamma_int(m + k + 1)) * std::pow(h * h, k) /
            (std::tgamma(k + 1.0) * std::tgamma(m + k + 1.0));
  tail *= 0.5 * std::pow(h, m) * ((m % 2 == 0) ? 1.0 : -1.0);
  const double log_part = ((m % 2 == 0) ? -1.0 : 1.0) * std::log(h) * i_truncated(m);
  return finite + log_part + tail;
}

}  // namespace tumor
