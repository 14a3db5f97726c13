#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "curvedfield/errors.hpp"

namespace curvedfield::specfun {

/// Gegenbauer polynomial C^p_q(x) by the three-term recurrence in q.
inline double gegenbauer(int p, int q, double x) {
  if (p < 1) throw domain_error("gegenbauer: p must be a positive integer");
  if (q < 0) throw domain_error("gegenbauer: q must be nonnegative");
  if (!(x >= -1.0 && x <= 1.0)) {
    throw domain_error("gegenbauer: x=" + std::to_string(x) + " outside [-1, 1]");
  }
  const double lambda = p;
  double prev = 1.0;
  if (q == 0) return prev;
  double cur = 2.0 * lambda * x;
  for (int n = 2; n <= q; ++n) {
    const double next = (2.0 * x * (n + lambda - 1.0) * cur - (n + 2.0 * lambda - 2.0) * prev) / n;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Below this r the conical function is summed from its hypergeometric series.
inline constexpr double conical_series_threshold = 1e-4;

namespace detail {

// P^{-1/2-l}_{-1/2+i omega}(cosh r) = tanh(r/2)^{l+1/2}/Gamma(l+3/2)
//   * 2F1(1/2-i omega, 1/2+i omega; l+3/2; -sinh^2(r/2)).
inline double conical_series(double omega, int l, double r) {
  const double z = -std::pow(std::sinh(0.5 * r), 2);
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 500; ++n) {
    term *= ((n + 0.5) * (n + 0.5) + omega * omega) / ((n + l + 1.5) * (n + 1.0)) * z;
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return std::exp((l + 0.5) * std::log(std::tanh(0.5 * r)) - std::lgamma(l + 1.5)) * sum;
}

// sqrt(2/(pi sinh r)) without overflowing for large r.
inline double conical_prefactor(double r) {
  return std::sqrt(4.0 / (std::numbers::pi * -std::expm1(-2.0 * r))) * std::exp(-0.5 * r);
}

// sin(omega r)/omega, continuous at omega = 0.
inline double sin_over(double omega, double r) {
  return omega * r < 1e-8 ? r : std::sin(omega * r) / omega;
}

}  // namespace detail

/// Conical function P^{-1/2-l}_{-1/2+i omega}(cosh r) for real omega >= 0.
///
/// Index-lowering recurrence seeded by the elementary l=-1 and l=0 members:
///   P_{l+1} = [(2l+1) coth(r) P_l - P_{l-1}] / (omega^2 + (l+1)^2).
/// P_l is the minimal solution in l, so the recurrence is only run forward while
/// the estimated loss stays below three digits; otherwise Miller's backward
/// algorithm is used and normalised against the elementary seeds.
inline double conical_legendre(double omega, int l, double r) {
  if (!std::isfinite(omega) || !std::isfinite(r)) throw domain_error("conical_legendre: non-finite input");
  if (omega < 0.0) throw domain_error("conical_legendre: omega must be >= 0");
  if (l < 0) throw domain_error("conical_legendre: l must be >= 0");
  if (r < 0.0) throw domain_error("conical_legendre: r must be >= 0");
  if (r == 0.0) return 0.0;
  if (r < conical_series_threshold) return detail::conical_series(omega, l, r);

  const double c = detail::conical_prefactor(r);
  const double p_minus = c * std::cos(omega * r);
  const double p_zero = c * detail::sin_over(omega, r);
  if (l == 0) return p_zero;
  const double coth = 1.0 / std::tanh(r);
  const double w2 = omega * omega;

  const double damping = 2.0 * std::log(1.0 / std::tanh(0.5 * r));
  const double loss = std::max(0.0, l - omega * std::sinh(std::min(r, 700.0))) * damping;
  if (loss < std::log(1e3)) {
    double prev = p_minus;
    double cur = p_zero;
    for (int n = 0; n < l; ++n) {
      const double next = ((2.0 * n + 1.0) * coth * cur - prev) / (w2 + (n + 1.0) * (n + 1.0));
      prev = cur;
      cur = next;
    }
    return cur;
  }

  const double extra = omega * std::sinh(std::min(r, 700.0));
  const int start = l + static_cast<int>(std::ceil(std::min(extra, 1e4))) +
                    static_cast<int>(std::ceil(40.0 / damping)) + 10;
  // Backward: f_{n-1} = (2n+1) coth f_n - (omega^2+(n+1)^2) f_{n+1}.
  double upper = 0.0;
  double cur = 1e-200;
  double at_l = 0.0;
  for (int n = start; n >= 0; --n) {
    const double lower = (2.0 * n + 1.0) * coth * cur - (w2 + (n + 1.0) * (n + 1.0)) * upper;
    upper = cur;
    cur = lower;  // f_{n-1}
    if (n == l) at_l = upper;
    if (std::abs(cur) > 1e200) {
      cur *= 1e-200;
      upper *= 1e-200;
      at_l *= 1e-200;
    }
  }
  // cur = f_{-1}, upper = f_0.
  if (std::abs(std::cos(omega * r)) >= 0.5) return at_l * (p_minus / cur);
  return at_l * (p_zero / upper);
}

struct CertifiedValue {
  double value;
  double residual;  // ODE residual relative to the local scale of the solution
};

/// conical_legendre plus a check of the conical ODE
///   u'' + coth(r) u' + (omega^2 + 1/4 - mu^2/sinh^2 r) u = 0,  mu = -1/2 - l,
/// by fourth-order central differences around r. Throws convergence_error when the
/// residual exceeds `tolerance`.
inline CertifiedValue conical_legendre_certified(double omega, int l, double r, double tolerance = 1e-6) {
  const double value = conical_legendre(omega, l, r);
  const double h = std::min(0.01 / std::max(1.0, omega), 0.1 * r);
  if (r - 2 * h < conical_series_threshold) {
    return {value, 0.0};
  }
  double u[5];
  for (int i = 0; i < 5; ++i) u[i] = conical_legendre(omega, l, r + (i - 2) * h);
  const double d1 = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h);
  const double d2 = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h);
  const double mu = -0.5 - l;
  const double sh = std::sinh(r);
  const double q = omega * omega + 0.25 - mu * mu / (sh * sh);
  const double res = d2 + d1 / std::tanh(r) + q * value;
  const double scale = std::abs(d2) + std::abs(d1 / std::tanh(r)) + std::abs(q * value);
  const double rel = scale > 0.0 ? std::abs(res) / scale : 0.0;
  if (rel > tolerance) {
    throw convergence_error("conical_legendre: ODE residual " + std::to_string(rel) + " at omega=" +
                            std::to_string(omega) + ", l=" + std::to_string(l) +
                            ", r=" + std::to_string(r));
  }
  return {value, rel};
}

}  // namespace curvedfield::specfun
