#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "curvedfield/errors.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/quadrature.hpp"
#include "curvedfield/randfield/spectrum.hpp"
#include "curvedfield/specfun/radial.hpp"

namespace curvedfield::randfield {

namespace detail {

// Integrates g over the support [lo, hi] of a spectrum; hi may be infinite, in
// which case the tail beyond k1 is mapped to (0, 1] by k = k1/t.
template <class G>
double integrate_support(G&& g, const PowerSpectrum& P, double abs_tol, double rel_tol) {
  auto [lo, hi] = P.support();
  std::vector<double> breaks;
  if (const auto* tab = std::get_if<Tabulated>(&P.form())) {
    breaks = tab->k;
  } else {
    breaks = {lo};
    const double finite_hi = std::isfinite(hi) ? hi : std::max(2.0 * lo, 1.0);
    const int pieces = 8;
    for (int i = 1; i <= pieces; ++i) breaks.push_back(lo + (finite_hi - lo) * i / pieces);
  }
  double total = 0.0;
  const double piece_tol = abs_tol / static_cast<double>(breaks.size() + 1);
  for (std::size_t i = 1; i < breaks.size(); ++i) {
    total += quad::integrate_adaptive(g, breaks[i - 1], breaks[i], piece_tol, rel_tol, 1 << 13).value;
  }
  if (!std::isfinite(hi)) {
    const double k1 = breaks.back();
    auto mapped = [&](double t) { return g(k1 / t) * k1 / (t * t); };
    total += quad::integrate_adaptive(mapped, 0.0, 1.0, piece_tol, rel_tol, 1 << 14).value;
  }
  return total;
}

inline double closed_mode_sum(const PowerSpectrum& P, double r, double rel_tol) {
  const int bound = P.closed_mode_bound();
  double sum = 0.0;
  if (bound == std::numeric_limits<int>::max()) {
    // Unbounded parametric spectrum: sum until a long run of negligible terms.
    int quiet = 0;
    for (int w = 0; w < 2000000; ++w) {
      const double term = (w + 1.0) * (w + 1.0) * P.at_mode(w);
      sum += term * specfun::zonal_spherical(CurvatureKind::closed, w, r);
      quiet = (term <= rel_tol * 1e-3 * std::abs(sum) || term == 0.0) ? quiet + 1 : 0;
      if (quiet > 64 && w > P.support().first / P.geometry().scale()) return sum;
    }
    throw convergence_error("analytic_correlation: closed-model mode sum does not converge");
  }
  for (int w = 0; w <= bound; ++w) {
    const double p = P.at_mode(w);
    if (p != 0.0) sum += (w + 1.0) * (w + 1.0) * p * specfun::zonal_spherical(CurvatureKind::closed, w, r);
  }
  return sum;
}

}  // namespace detail

/// Variance R(0): the total mass of the spectral measure.
inline double spectral_mass(const PowerSpectrum& P, double rel_tol = 1e-11);

/// Zonal autocorrelation R at geodesic distance `distance` for a mixed spectral
/// measure:
///   open:   int Phi_{k/a}(a d) P(k) k^2 dk,      a = sqrt(-K)
///   flat:   int sin(k d)/(k d) P(k) k^2 dk
///   closed: sum_omega (omega+1)^2 P(omega) Phi_omega(sqrt(K) d)
/// plus sum of weight * Phi_omega for every atom.
inline double analytic_correlation(const Geometry& g, const SpectralMeasure& nu, double distance,
                                   double rel_tol = 1e-11) {
  if (!std::isfinite(distance) || distance < 0.0) {
    throw domain_error("analytic_correlation: distance must be finite and >= 0");
  }
  const double a = g.scale();
  const double r = g.kind() == CurvatureKind::closed ? std::min(a * distance, std::numbers::pi) : a * distance;
  double total = 0.0;
  if (nu.density) {
    const PowerSpectrum& P = *nu.density;
    curvedfield::detail::require(P.geometry() == g, "analytic_correlation: spectrum geometry mismatch");
    if (!P.is_zero()) {
      if (g.kind() == CurvatureKind::closed) {
        total += detail::closed_mode_sum(P, r, rel_tol);
      } else {
        const double scale = distance == 0.0 ? 0.0 : spectral_mass(P, rel_tol);
        auto integrand = [&](double k) {
          const double p = P(k);
          if (p == 0.0) return 0.0;
          const double omega = g.kind() == CurvatureKind::open ? k / a : k;
          return specfun::zonal_spherical(g.kind(), omega, r) * p * k * k;
        };
        total += detail::integrate_support(integrand, P, 1e-13 * scale, rel_tol);
      }
    }
  }
  for (const auto& atom : nu.atoms) {
    if (!std::isfinite(atom.weight) || atom.weight < 0.0) {
      throw domain_error("analytic_correlation: atom weights must be finite and >= 0");
    }
    if (atom.omega.imag() != 0.0 && g.kind() != CurvatureKind::open) {
      throw domain_error("analytic_correlation: supplementary-series atoms exist only in the open model");
    }
    total += atom.weight * specfun::zonal_spherical(g.kind(), atom.omega, r);
  }
  return total;
}

inline double analytic_correlation(const PowerSpectrum& P, double distance, double rel_tol = 1e-11) {
  return analytic_correlation(P.geometry(), SpectralMeasure{P, {}}, distance, rel_tol);
}

inline double spectral_mass(const PowerSpectrum& P, double rel_tol) {
  if (P.is_zero()) return 0.0;
  if (P.geometry().kind() == CurvatureKind::closed) return detail::closed_mode_sum(P, 0.0, rel_tol);
  return detail::integrate_support([&](double k) { return P(k) * k * k; }, P, 0.0, rel_tol);
}

struct MomentCheck {
  double value = 0.0;
  double last_share = 0.0;  // share of the highest-l term in the truncated sum
};

/// Truncated moment sum_{l<=l_max} l(l+1)(2l+1) int R_kl(chi)^2 k^2 P(k) dk (closed:
/// the mode sum with (omega+1)^2 weights). Throws convergence_error when the highest
/// degree still carries more than `tolerance` of the total, i.e. the sum has not
/// settled at truncation.
inline MomentCheck lensing_moment(const PowerSpectrum& P, double chi, int l_max, const quad::Rule& k_rule,
                                  double tolerance = 1e-6) {
  const Geometry& g = P.geometry();
  curvedfield::detail::require(l_max >= 1, "lensing_moment: l_max must be >= 1");
  MomentCheck out;
  double last = 0.0;
  for (int l = 1; l <= l_max; ++l) {
    double integral = 0.0;
    if (g.kind() == CurvatureKind::closed) {
      const int bound = P.closed_mode_bound();
      curvedfield::detail::require(bound != std::numeric_limits<int>::max(),
                                   "lensing_moment: closed spectrum must have bounded support");
      for (int w = l; w <= bound; ++w) {
        const double R = specfun::radial_closed_mode(w, l, std::min(g.scale() * chi, std::numbers::pi));
        integral += (w + 1.0) * (w + 1.0) * P.at_mode(w) * R * R;
      }
    } else {
      for (std::size_t q = 0; q < k_rule.size(); ++q) {
        const double k = k_rule.nodes[q];
        const double R = specfun::radial(g, k, l, chi);
        integral += k_rule.weights[q] * R * R * k * k * P(k);
      }
    }
    last = l * (l + 1.0) * (2.0 * l + 1.0) * integral;
    out.value += last;
  }
  out.last_share = out.value > 0.0 ? last / out.value : 0.0;
  if (out.last_share > tolerance) {
    throw convergence_error("lensing moment not converged at l_max=" + std::to_string(l_max) +
                            ": top degree carries a share " + std::to_string(out.last_share));
  }
  return out;
}

}  // namespace curvedfield::randfield
