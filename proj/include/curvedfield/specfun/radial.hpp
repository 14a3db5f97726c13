#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "curvedfield/errors.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/specfun/bessel.hpp"
#include "curvedfield/specfun/legendre.hpp"

namespace curvedfield::specfun {

/// Closed-model radial function for integer omega >= 0 and dimensionless r = sqrt(K) chi:
///   R = 2^l l! sqrt((omega-l)! / ((omega+l+1)! (omega+1))) sin^l(r) C^{l+1}_{omega-l}(cos r),
/// and exactly 0 for l > omega.
inline double radial_closed_mode(int omega, int l, double r) {
  if (omega < 0 || l < 0) throw domain_error("radial_closed_mode: negative index");
  if (l > omega) return 0.0;
  const double log_coef = l * std::log(2.0) + std::lgamma(l + 1.0) +
                          0.5 * (std::lgamma(omega - l + 1.0) - std::lgamma(omega + l + 2.0) -
                                 std::log(omega + 1.0));
  const double x = std::clamp(std::cos(r), -1.0, 1.0);
  return std::exp(log_coef) * std::pow(std::sin(r), l) * gegenbauer(l + 1, omega - l, x);
}

/// Open-model radial function at omega = k/sqrt(-K), r = sqrt(-K) chi:
///   R = sqrt(pi prod_{n<=l}(omega^2+n^2) / (2 sinh r)) P^{-1/2-l}_{-1/2+i omega}(cosh r).
inline double radial_open_mode(double omega, int l, double r) {
  if (r == 0.0) return l == 0 ? 1.0 : 0.0;
  double log_n = 0.0;
  for (int n = 1; n <= l; ++n) log_n += std::log(omega * omega + double(n) * n);
  // 1/sqrt(sinh r) in overflow-safe form.
  const double inv_sqrt_sinh = std::sqrt(2.0 / -std::expm1(-2.0 * r)) * std::exp(-0.5 * r);
  return std::sqrt(0.5 * std::numbers::pi) * std::exp(0.5 * log_n) * inv_sqrt_sinh *
         conical_legendre(omega, l, r);
}

/// Radial eigenfunction R_{kl}(chi) of the Helmholtz operator with the normalisation
/// used for each model (flat: sqrt(2/pi) j_l(k chi)). For the closed model k must sit
/// on the lattice (omega+1)sqrt(K).
inline double radial(const Geometry& g, double k, int l, double chi) {
  if (l < 0) throw domain_error("radial: negative l");
  if (!std::isfinite(k) || k < 0.0) throw domain_error("radial: k must be finite and >= 0");
  g.check_chi(chi, "radial");
  switch (g.kind()) {
    case CurvatureKind::flat:
      return std::sqrt(2.0 / std::numbers::pi) * spherical_bessel(l, k * chi);
    case CurvatureKind::open: {
      const double a = g.scale();
      return radial_open_mode(k / a, l, a * chi);
    }
    case CurvatureKind::closed: {
      const int omega = g.closed_mode(k);
      return radial_closed_mode(omega, l, std::min(g.scale() * chi, std::numbers::pi));
    }
  }
  return 0.0;
}

/// Zonal spherical function Phi_omega(r), r being the dimensionless distance.
/// open: sin(omega r)/(omega sinh r), continued to sinh(tau r)/(tau sinh r) on the
/// supplementary series omega = i tau, tau in (0, 1]; flat: sin(omega r)/(omega r);
/// closed (integer omega): sin((omega+1) r)/((omega+1) sin r).
inline double zonal_spherical(CurvatureKind kind, std::complex<double> omega, double r) {
  if (!std::isfinite(r) || r < 0.0) throw domain_error("zonal_spherical: r must be finite and >= 0");
  const double re = omega.real();
  const double im = omega.imag();
  switch (kind) {
    case CurvatureKind::open: {
      if (im != 0.0) {
        if (re != 0.0 || !(im > 0.0 && im <= 1.0)) {
          throw domain_error("zonal_spherical: open model needs omega >= 0 or omega in i(0, 1]");
        }
        if (r == 0.0) return 1.0;
        // sinh(tau r)/sinh(r) = e^{(tau-1) r} (1-e^{-2 tau r})/(1-e^{-2r})
        return std::exp((im - 1.0) * r) * std::expm1(-2.0 * im * r) / std::expm1(-2.0 * r) / im;
      }
      if (!(re >= 0.0)) throw domain_error("zonal_spherical: omega must be >= 0");
      if (r == 0.0) return 1.0;
      const double numer = re * r < 1e-8 ? r : std::sin(re * r) / re;
      if (r > 700.0) return 0.0;
      return numer / std::sinh(r);
    }
    case CurvatureKind::flat: {
      if (im != 0.0 || !(re >= 0.0)) throw domain_error("zonal_spherical: flat model needs omega >= 0");
      const double x = re * r;
      return x < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    }
    case CurvatureKind::closed: {
      if (im != 0.0 || re < 0.0 || re != std::round(re)) {
        throw domain_error("zonal_spherical: closed model needs integer omega >= 0");
      }
      // Chebyshev U_omega(cos r)/(omega+1); stable through r = 0 and r = pi.
      const int w = static_cast<int>(re);
      const double x = std::cos(r);
      double prev = 1.0;
      double cur = 2.0 * x;
      if (w == 0) return 1.0;
      for (int n = 2; n <= w; ++n) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
      }
      return cur / (w + 1.0);
    }
  }
  return 0.0;
}

inline double zonal_spherical(const Geometry& g, std::complex<double> omega, double r) {
  return zonal_spherical(g.kind(), omega, r);
}

}  // namespace curvedfield::specfun
