#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "curvedfield/errors.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/parallel.hpp"
#include "curvedfield/quadrature.hpp"
#include "curvedfield/specfun/radial.hpp"

// Isotropic spherical Fourier transforms. The arbitrary multiplier of the invariant
// measure on the slice is fixed to C = 1, so spectra are scaled accordingly.
namespace curvedfield::sft {

/// f(chi) sampled on the nodes of a quadrature rule over the comoving range.
struct RadialProfile {
  Geometry geometry = Geometry::flat();
  quad::Rule grid;
  std::vector<double> values;
};

/// f_00 on a spectral grid. Open/flat: wave numbers k with quadrature weights.
/// Closed: mode indices omega = 0..omega_max (stored as doubles), unit weights.
struct Spectrum {
  Geometry geometry = Geometry::flat();
  std::vector<double> k;
  std::vector<double> weights;
  std::vector<double> values;
};

struct SpectralGrid {
  std::vector<double> k;
  std::vector<double> weights;
  bool discrete = false;

  static SpectralGrid continuous(const quad::Rule& rule) { return {rule.nodes, rule.weights, false}; }
  static SpectralGrid modes(int omega_max) {
    curvedfield::detail::require(omega_max >= 0, "SpectralGrid::modes: omega_max must be >= 0");
    SpectralGrid g;
    g.discrete = true;
    for (int w = 0; w <= omega_max; ++w) {
      g.k.push_back(w);
      g.weights.push_back(1.0);
    }
    return g;
  }
};

struct TransformOptions {
  /// Largest tolerated share of the absolute integral carried by the last 5% of a
  /// truncated infinite range.
  double tail_tolerance = 1e-8;
  unsigned threads = 1;
};

/// Printed prefactor of the transform pair: 1/(2 sqrt pi) for curved, 1/(pi sqrt 2) flat.
inline double transform_prefactor(const Geometry& g) {
  return g.kind() == CurvatureKind::flat ? 1.0 / (std::numbers::pi * std::numbers::sqrt2)
                                         : 0.5 / std::sqrt(std::numbers::pi);
}

/// Zonal kernel of the pair; spectral argument is k (open/flat) or omega (closed).
inline double transform_kernel(const Geometry& g, double spectral, double chi) {
  switch (g.kind()) {
    case CurvatureKind::flat: return specfun::zonal_spherical(g, spectral, chi);
    case CurvatureKind::open: return specfun::zonal_spherical(g, spectral / g.scale(), g.scale() * chi);
    case CurvatureKind::closed:
      return specfun::zonal_spherical(g, spectral, std::min(g.scale() * chi, std::numbers::pi));
  }
  return 0.0;
}

/// Density of the Plancherel measure that inverts the forward transform:
/// (2/pi) k^2 open, k^2 flat, and point masses (2/pi) K^{3/2} (omega+1)^2 closed.
inline double plancherel_density(const Geometry& g, double spectral) {
  switch (g.kind()) {
    case CurvatureKind::flat: return spectral * spectral;
    case CurvatureKind::open: return 2.0 / std::numbers::pi * spectral * spectral;
    case CurvatureKind::closed: {
      const double w1 = spectral + 1.0;
      return 2.0 / std::numbers::pi * std::pow(g.K(), 1.5) * w1 * w1;
    }
  }
  return 0.0;
}

namespace detail {

inline void check_tail(std::span<const double> nodes, std::span<const double> integrand, double tolerance,
                       const char* what) {
  if (nodes.size() < 2) return;
  const double lo = nodes.front();
  const double hi = nodes.back();
  const double cut = hi - 0.05 * (hi - lo);
  double total = 0.0;
  double tail = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    total += std::abs(integrand[i]);
    if (nodes[i] >= cut) tail += std::abs(integrand[i]);
  }
  if (total > 0.0 && tail > tolerance * total) {
    throw convergence_error(std::string(what) + ": truncated range does not converge; last 5% of [" +
                            std::to_string(lo) + ", " + std::to_string(hi) + "] carries a share " +
                            std::to_string(tail / total) + " > tolerance " + std::to_string(tolerance));
  }
}

inline void check_profile(const RadialProfile& p) {
  curvedfield::detail::require(!p.grid.nodes.empty(), "RadialProfile: empty grid");
  curvedfield::detail::require(p.grid.weights.size() == p.grid.nodes.size() &&
                                   p.values.size() == p.grid.nodes.size(),
                               "RadialProfile: grid, weights and values differ in length");
  for (std::size_t i = 0; i < p.grid.nodes.size(); ++i) {
    p.geometry.check_chi(p.grid.nodes[i], "RadialProfile");
    if (i > 0 && !(p.grid.nodes[i] > p.grid.nodes[i - 1])) {
      throw domain_error("RadialProfile: chi grid must be strictly increasing");
    }
  }
}

inline void check_spectral(const Geometry& g, std::span<const double> k, bool discrete) {
  curvedfield::detail::require(!k.empty(), "spectrum: empty spectral grid");
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (g.kind() == CurvatureKind::closed) {
      if (!(k[i] >= 0.0 && k[i] == std::round(k[i]))) {
        throw domain_error("spectrum: closed-model grid must hold integer modes omega >= 0, got " +
                           std::to_string(k[i]));
      }
    } else {
      if (discrete) throw domain_error("spectrum: discrete mode grid requires the closed model");
      if (!(k[i] >= 0.0) || !std::isfinite(k[i])) throw domain_error("spectrum: k must be finite and >= 0");
    }
    if (i > 0 && !(k[i] > k[i - 1])) throw domain_error("spectrum: grid must be strictly increasing");
  }
}

}  // namespace detail

/// f_00(k) = A * int f(chi) Phi_k(chi) S(chi) d chi with the normalisation prefactor A.
inline Spectrum forward_isotropic(const RadialProfile& profile, const SpectralGrid& grid,
                                  const TransformOptions& options = {}) {
  detail::check_profile(profile);
  const Geometry& g = profile.geometry;
  if (g.kind() == CurvatureKind::closed && !grid.discrete) {
    throw domain_error("forward_isotropic: closed model needs a mode grid (SpectralGrid::modes)");
  }
  detail::check_spectral(g, grid.k, grid.discrete);
  const std::size_t n = profile.grid.size();
  std::vector<double> measure(n);
  std::vector<double> weighted(n);
  for (std::size_t i = 0; i < n; ++i) {
    measure[i] = profile.grid.weights[i] * surface_area(g, profile.grid.nodes[i]);
    weighted[i] = measure[i] * profile.values[i];
  }
  if (g.kind() != CurvatureKind::closed) {
    detail::check_tail(profile.grid.nodes, weighted, options.tail_tolerance, "forward_isotropic");
  }
  Spectrum out{g, grid.k, grid.weights, std::vector<double>(grid.k.size(), 0.0)};
  const double A = transform_prefactor(g);
  parallel_for(grid.k.size(), options.threads, [&](std::size_t q) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (weighted[i] != 0.0) sum += weighted[i] * transform_kernel(g, grid.k[q], profile.grid.nodes[i]);
    }
    out.values[q] = A * sum;
  });
  return out;
}

/// f(chi) = A * int f_00(k) Phi_k(chi) d mu(k) over the Plancherel measure.
inline RadialProfile inverse_isotropic(const Spectrum& spectrum, const quad::Rule& chi_grid,
                                       const TransformOptions& options = {}) {
  const Geometry& g = spectrum.geometry;
  curvedfield::detail::require(spectrum.weights.size() == spectrum.k.size() &&
                                   spectrum.values.size() == spectrum.k.size(),
                               "inverse_isotropic: spectrum arrays differ in length");
  detail::check_spectral(g, spectrum.k, false);
  RadialProfile out{g, chi_grid, std::vector<double>(chi_grid.size(), 0.0)};
  for (double chi : chi_grid.nodes) g.check_chi(chi, "inverse_isotropic");
  const std::size_t n = spectrum.k.size();
  std::vector<double> weighted(n);
  for (std::size_t q = 0; q < n; ++q) {
    weighted[q] = spectrum.weights[q] * plancherel_density(g, spectrum.k[q]) * spectrum.values[q];
  }
  if (g.kind() != CurvatureKind::closed) {
    detail::check_tail(spectrum.k, weighted, options.tail_tolerance, "inverse_isotropic");
  }
  const double A = transform_prefactor(g);
  parallel_for(chi_grid.size(), options.threads, [&](std::size_t i) {
    double sum = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      if (weighted[q] != 0.0) sum += weighted[q] * transform_kernel(g, spectrum.k[q], chi_grid.nodes[i]);
    }
    out.values[i] = A * sum;
  });
  return out;
}

/// Samples f on the rule's nodes.
template <class F>
RadialProfile sample_profile(const Geometry& g, const quad::Rule& grid, F&& f) {
  RadialProfile p{g, grid, {}};
  p.values.reserve(grid.size());
  for (double chi : grid.nodes) p.values.push_back(f(chi));
  return p;
}

}  // namespace curvedfield::sft
