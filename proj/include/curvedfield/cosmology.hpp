#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>

#include "curvedfield/errors.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/quadrature.hpp"

namespace curvedfield::cosmology {

inline constexpr double speed_of_light = 299792.458;  // km/s
/// Hubble time 1/H0 in Gyr for H0 = 1 km/s/Mpc (Mpc/(km/s) expressed in Gyr).
inline constexpr double hubble_time_gyr = 977.79222168;
inline constexpr double megaparsec_m = 3.0856775814913673e22;
inline constexpr double gravitational_constant = 6.67430e-11;  // m^3 kg^-1 s^-2

struct CosmologyParams {
  double H0 = 0.0;  // km/s/Mpc
  double omega_R = 0.0;
  double omega_M = 0.0;
  double omega_K = 0.0;
  double omega_L = 0.0;
  double c = speed_of_light;

  /// 1 minus the sum of the density parameters at z = 0.
  double closure_residual() const { return 1.0 - (omega_R + omega_M + omega_K + omega_L); }
};

struct SolveCurvature {};
struct ExactCurvature {
  double omega_K;
};
using Closure = std::variant<SolveCurvature, ExactCurvature>;

inline constexpr double closure_tolerance = 1e-6;

inline CosmologyParams make_params(double H0, double omega_M, double omega_L, double omega_R,
                                   Closure closure = SolveCurvature{}) {
  curvedfield::detail::require(std::isfinite(H0) && std::isfinite(omega_M) && std::isfinite(omega_L) &&
                      std::isfinite(omega_R),
                  "make_params: parameters must be finite");
  curvedfield::detail::require(H0 > 0.0, "make_params: H0 must be positive");
  curvedfield::detail::require(omega_M >= 0.0, "make_params: Omega_M must be >= 0");
  curvedfield::detail::require(omega_R >= 0.0, "make_params: Omega_R must be >= 0");
  CosmologyParams p{H0, omega_R, omega_M, 0.0, omega_L, speed_of_light};
  if (const auto* exact = std::get_if<ExactCurvature>(&closure)) {
    curvedfield::detail::require(std::isfinite(exact->omega_K), "make_params: Omega_K must be finite");
    p.omega_K = exact->omega_K;
    const double residual = p.closure_residual();
    if (std::abs(residual) > closure_tolerance) {
      throw domain_error("make_params: density parameters sum to " + std::to_string(1.0 - residual) +
                         " (closure residual " + std::to_string(residual) + " exceeds " +
                         std::to_string(closure_tolerance) + ")");
    }
  } else {
    p.omega_K = 1.0 - omega_R - omega_M - omega_L;
  }
  return p;
}

/// Central values of the reference parameter set, taken verbatim (they do not
/// close exactly; see closure_residual()).
inline CosmologyParams reference_params() { return {67.80, 4.9e-5, 0.315, -0.0010, 0.685, speed_of_light}; }

/// E(z)^2 = Omega_R (1+z)^4 + Omega_M (1+z)^3 + Omega_K (1+z)^2 + Omega_L.
inline double expansion_squared(const CosmologyParams& p, double z) {
  const double x = 1.0 + z;
  const double x2 = x * x;
  return ((p.omega_R * x + p.omega_M) * x + p.omega_K) * x2 + p.omega_L;
}

inline double hubble(const CosmologyParams& p, double z) {
  if (!(z > -1.0)) throw domain_error("hubble: redshift must exceed -1, got " + std::to_string(z));
  if (z == 0.0) {
    const double residual = p.closure_residual();
    return std::abs(residual) <= 1e-9 ? p.H0 : p.H0 * std::sqrt(1.0 - residual);
  }
  const double e2 = expansion_squared(p, z);
  if (!(e2 > 0.0)) {
    throw domain_error("hubble: Friedmann radicand " + std::to_string(e2) + " is not positive at z=" +
                       std::to_string(z));
  }
  return p.H0 * std::sqrt(e2);
}

inline double scale_factor(double z) {
  if (!(z > -1.0)) throw domain_error("scale_factor: redshift must exceed -1");
  return 1.0 / (1.0 + z);
}

inline double redshift_from_scale_factor(double a) {
  if (!(a > 0.0)) throw domain_error("redshift_from_scale_factor: a must be positive");
  return 1.0 / a - 1.0;
}

struct Tolerance {
  double rel = 1e-8;
  double abs = 0.0;
};

namespace detail {

inline double inverse_e(const CosmologyParams& p, double u) {
  const double e2 = expansion_squared(p, u);
  if (!(e2 > 0.0)) {
    throw domain_error("Friedmann radicand " + std::to_string(e2) + " is not positive at z=" +
                       std::to_string(u));
  }
  return 1.0 / std::sqrt(e2);
}

// Integrals over b = sqrt(a) in [0, 1] for the z -> infinity limits; power is the
// exponent of b in the numerator (1 for distance, 3 for time).
inline double integral_to_big_bang(const CosmologyParams& p, int power, Tolerance tol) {
  auto f = [&](double b) {
    if (b == 0.0) return 0.0;
    const double b2 = b * b;
    const double r = p.omega_R + b2 * (p.omega_M + b2 * (p.omega_K + b2 * b2 * p.omega_L));
    if (!(r > 0.0)) throw domain_error("Friedmann radicand is not positive near the big bang");
    return 2.0 * std::pow(b, power) / std::sqrt(r);
  };
  return quad::integrate_adaptive(f, 0.0, 1.0, tol.abs, tol.rel, 1 << 14).value;
}

}  // namespace detail

/// Line-of-sight comoving distance chi(z) in Mpc (z may be +infinity).
inline double comoving_distance(const CosmologyParams& p, double z, Tolerance tol = {}) {
  if (!(z >= 0.0)) throw domain_error("comoving_distance: z must be >= 0, got " + std::to_string(z));
  if (z == 0.0) return 0.0;
  const double hubble_distance = p.c / p.H0;
  if (std::isinf(z)) return hubble_distance * detail::integral_to_big_bang(p, 1, tol);
  auto f = [&](double u) { return detail::inverse_e(p, u); };
  return hubble_distance * quad::integrate_adaptive(f, 0.0, z, tol.abs, tol.rel, 1 << 14).value;
}

struct LookbackTime {
  double hubble_units;  // in units of 1/H0
  double gyr;
};

inline LookbackTime lookback_time(const CosmologyParams& p, double z, Tolerance tol = {}) {
  if (!(z >= 0.0)) throw domain_error("lookback_time: z must be >= 0, got " + std::to_string(z));
  if (z == 0.0) return {0.0, 0.0};
  double t = 0.0;
  if (std::isinf(z)) {
    t = detail::integral_to_big_bang(p, 3, tol);
  } else {
    auto f = [&](double u) { return detail::inverse_e(p, u) / (1.0 + u); };
    t = quad::integrate_adaptive(f, 0.0, z, tol.abs, tol.rel, 1 << 14).value;
  }
  return {t, t * hubble_time_gyr / p.H0};
}

/// Spatial geometry with K = -Omega_K H0^2 / c^2 in Mpc^-2. |Omega_K| < 1e-12 is flat.
inline Geometry geometry_from_params(const CosmologyParams& p) {
  if (std::abs(p.omega_K) < 1e-12) return Geometry::flat();
  const double h = p.H0 / p.c;
  return Geometry::from_curvature(-p.omega_K * h * h);
}

/// Critical density 3 H(z)^2 / (8 pi G) in kg/m^3.
inline double critical_density(const CosmologyParams& p, double z = 0.0) {
  const double h_si = hubble(p, z) * 1e3 / megaparsec_m;
  return 3.0 * h_si * h_si / (8.0 * std::numbers::pi * gravitational_constant);
}

}  // namespace curvedfield::cosmology
