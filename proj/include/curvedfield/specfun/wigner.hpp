#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>

#include "curvedfield/errors.hpp"

namespace curvedfield::specfun {

inline constexpr int max_degree = 64;

namespace detail {

// log(n!) for 0 <= n <= 4*max_degree+8.
inline const std::array<double, 4 * max_degree + 9>& log_factorials() {
  static const auto table = [] {
    std::array<double, 4 * max_degree + 9> t{};
    t[0] = 0.0;
    for (std::size_t n = 1; n < t.size(); ++n) t[n] = t[n - 1] + std::log(static_cast<double>(n));
    return t;
  }();
  return table;
}

inline double log_factorial(int n) { return log_factorials()[static_cast<std::size_t>(n)]; }

inline void check_degree(int l, const char* where) {
  if (l < 0 || l > max_degree) {
    throw domain_error(std::string(where) + ": degree l=" + std::to_string(l) +
                       " outside [0, " + std::to_string(max_degree) + "]");
  }
}

}  // namespace detail

namespace detail {

// The finite sum of the element, with binomial prefactors in log-factorial space.
// Exact in exact arithmetic, but it cancels badly once l exceeds a few tens.
inline double wigner_d_sum(int l, int m, int n, double theta) {
  const double sh = std::sin(0.5 * theta);
  const double ch = std::cos(0.5 * theta);
  const double log_norm = 0.5 * (log_factorial(l + m) + log_factorial(l - m) -
                                 log_factorial(l + n) - log_factorial(l - n)) +
                          log_factorial(l + n) + log_factorial(l - n);
  const int lo = std::max(0, m + n);
  const int hi = std::min(l + m, l + n);
  double sum = 0.0;
  for (int s = lo; s <= hi; ++s) {
    const double log_coef = log_norm - log_factorial(s) - log_factorial(l + n - s) -
                            log_factorial(s - m - n) - log_factorial(l - s + m);
    const int sin_power = 2 * l - 2 * s + m + n;
    const int cos_power = 2 * s - m - n;
    double term = std::exp(log_coef) * std::pow(sh, sin_power) * std::pow(ch, cos_power);
    if ((l - s + n) % 2 != 0) term = -term;
    sum += term;
  }
  return (m % 2 != 0) ? -sum : sum;
}

}  // namespace detail

/// Reduced Wigner matrix element d^l_{mn}(theta) in the convention where the full
/// element is D^l_{mn}(phi, theta, psi) = exp(-i(m phi + n psi)) d^l_{mn}(theta).
/// At l0 = max(|m|, |n|) the finite sum has a single term; higher degrees follow
/// from the stable three-term recurrence in l.
inline double wigner_d(int l, int m, int n, double theta) {
  detail::check_degree(l, "wigner_d");
  if (std::abs(m) > l || std::abs(n) > l) {
    throw domain_error("wigner_d: |m|, |n| must not exceed l (l=" + std::to_string(l) +
                       ", m=" + std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  if (!std::isfinite(theta)) throw domain_error("wigner_d: non-finite angle");
  const int l0 = std::max(std::abs(m), std::abs(n));
  const double c = std::cos(theta);
  const double mn = static_cast<double>(m) * n;
  const double m2 = static_cast<double>(m) * m;
  const double n2 = static_cast<double>(n) * n;
  double prev = 0.0;
  double cur = detail::wigner_d_sum(l0, m, n, theta);
  for (int j = l0; j < l; ++j) {
    const double J = j;
    const double a = std::sqrt(((J + 1) * (J + 1) - m2) * ((J + 1) * (J + 1) - n2));
    double next;
    if (j == 0) {
      next = c * cur;
    } else {
      next = ((J + 1) * (2 * J + 1) * (c - mn / (J * (J + 1))) * cur -
              (J + 1) * std::sqrt((J * J - m2) * (J * J - n2)) / J * prev) / a;
    }
    prev = cur;
    cur = next;
  }
  return cur;
}

inline std::complex<double> wigner_D(int l, int m, int n, double phi, double theta, double psi) {
  return wigner_d(l, m, n, theta) * std::polar(1.0, -(m * phi + n * psi));
}

}  // namespace curvedfield::specfun
