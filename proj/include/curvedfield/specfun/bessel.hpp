#pragma once

#include <cmath>
#include <string>

#include "curvedfield/errors.hpp"

namespace curvedfield::specfun {

namespace detail {

// Power series j_l(x) = x^l/(2l+1)!! * sum_n (-x^2/2)^n / (n! (2l+3)(2l+5)...(2l+2n+1)).
inline double spherical_bessel_series(int l, double x) {
  double lead = 1.0;
  for (int i = 1; i <= l; ++i) lead *= x / (2.0 * i + 1.0);
  const double y = -0.5 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n < 200; ++n) {
    term *= y / (n * (2.0 * l + 2.0 * n + 1.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return lead * sum;
}

}  // namespace detail

/// Spherical Bessel function j_l(x), x >= 0. Upward recurrence for x >= l, Miller's
/// downward recurrence (normalised by j_0 or j_1) below the turning point, and the
/// power series for x <= 1.
inline double spherical_bessel(int l, double x) {
  if (l < 0) throw domain_error("spherical_bessel: negative order");
  if (!std::isfinite(x) || x < 0.0) {
    throw domain_error("spherical_bessel: argument must be finite and >= 0, got " + std::to_string(x));
  }
  if (x == 0.0) return l == 0 ? 1.0 : 0.0;
  if (x <= 1.0) return detail::spherical_bessel_series(l, x);
  const double j0 = std::sin(x) / x;
  if (l == 0) return j0;
  const double j1 = (std::sin(x) / x - std::cos(x)) / x;
  if (l == 1) return j1;
  if (x >= l) {
    double prev = j0;
    double cur = j1;
    for (int n = 1; n < l; ++n) {
      const double next = (2.0 * n + 1.0) / x * cur - prev;
      prev = cur;
      cur = next;
    }
    return cur;
  }
  // Start well above l so the dominant solution has died out: accumulate the
  // growth rate log((2n+3)/x) of the minimal solution going downward.
  int start = l;
  double growth = 0.0;
  while (growth < 40.0) {
    growth += std::log((2.0 * start + 3.0) / x);
    ++start;
  }
  start += 10;
  double upper = 0.0;
  double cur = 1e-300;
  double at_l = 0.0;
  double f1 = 0.0;
  double f0 = 0.0;
  for (int n = start; n >= 1; --n) {
    const double lower = (2.0 * n + 1.0) / x * cur - upper;
    upper = cur;
    cur = lower;  // cur now holds f_{n-1}
    if (n - 1 == l) at_l = cur;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      upper *= 1e-250;
      at_l *= 1e-250;
    }
  }
  f0 = cur;
  f1 = upper;
  return std::abs(j0) >= std::abs(j1) ? at_l * (j0 / f0) : at_l * (j1 / f1);
}

}  // namespace curvedfield::specfun
