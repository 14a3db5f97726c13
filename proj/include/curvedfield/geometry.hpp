#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "curvedfield/errors.hpp"

namespace curvedfield {

enum class CurvatureKind { open, flat, closed };

inline const char* to_string(CurvatureKind kind) {
  switch (kind) {
    case CurvatureKind::open: return "open";
    case CurvatureKind::flat: return "flat";
    case CurvatureKind::closed: return "closed";
  }
  return "?";
}

/// Constant-curvature spatial slice. K is in inverse length squared; the sign is
/// tied to `kind` (open: K<0, flat: K=0, closed: K>0).
class Geometry {
 public:
  static Geometry open(double K = -1.0) {
    detail::require(std::isfinite(K) && K < 0.0, "Geometry::open: K must be negative");
    return Geometry(CurvatureKind::open, K);
  }
  static Geometry flat() { return Geometry(CurvatureKind::flat, 0.0); }
  static Geometry closed(double K = 1.0) {
    detail::require(std::isfinite(K) && K > 0.0, "Geometry::closed: K must be positive");
    return Geometry(CurvatureKind::closed, K);
  }
  static Geometry from_curvature(double K) {
    if (K < 0.0) return open(K);
    if (K > 0.0) return closed(K);
    return flat();
  }

  CurvatureKind kind() const { return kind_; }
  double K() const { return K_; }
  /// sqrt(|K|); 1 for the flat model so that dimensionless distances reduce to chi.
  double scale() const { return kind_ == CurvatureKind::flat ? 1.0 : std::sqrt(std::abs(K_)); }

  /// Upper end of the comoving range: pi/sqrt(K) when closed, infinity otherwise.
  double chi_max() const {
    return kind_ == CurvatureKind::closed ? std::numbers::pi / std::sqrt(K_)
                                          : std::numeric_limits<double>::infinity();
  }

  bool contains_chi(double chi) const {
    return std::isfinite(chi) && chi >= 0.0 && chi <= chi_max() * (1.0 + 1e-14);
  }

  void check_chi(double chi, const char* where) const {
    if (!contains_chi(chi)) {
      throw domain_error(std::string(where) + ": chi=" + std::to_string(chi) +
                         " outside the comoving range of the " + to_string(kind_) + " model");
    }
  }

  /// Closed-model lattice index omega for wave number k=(omega+1)sqrt(K); throws when
  /// k is off the lattice by more than a relative 1e-9.
  int closed_mode(double k) const {
    detail::require(kind_ == CurvatureKind::closed, "closed_mode: geometry is not closed");
    const double w = k / std::sqrt(K_) - 1.0;
    const double rounded = std::round(w);
    if (!(rounded >= 0.0) || std::abs(w - rounded) > 1e-9 * std::max(1.0, std::abs(w))) {
      throw domain_error("closed model: k=" + std::to_string(k) +
                         " is not on the lattice (omega+1)sqrt(K)");
    }
    return static_cast<int>(rounded);
  }
  double closed_wavenumber(int omega) const {
    detail::require(kind_ == CurvatureKind::closed && omega >= 0,
                    "closed_wavenumber: need closed geometry and omega >= 0");
    return (omega + 1) * std::sqrt(K_);
  }

  bool operator==(const Geometry&) const = default;

 private:
  Geometry(CurvatureKind kind, double K) : kind_(kind), K_(K) {}
  CurvatureKind kind_;
  double K_;
};

/// Comoving angular-diameter function f_K(chi).
inline double f_K(const Geometry& g, double chi) {
  g.check_chi(chi, "f_K");
  switch (g.kind()) {
    case CurvatureKind::flat: return chi;
    case CurvatureKind::open: {
      const double a = g.scale();
      return std::sinh(a * chi) / a;
    }
    case CurvatureKind::closed: {
      const double a = g.scale();
      return std::sin(std::min(a * chi, std::numbers::pi)) / a;
    }
  }
  return 0.0;
}

/// Area 4 pi f_K(chi)^2 of the comoving sphere of radius chi.
inline double surface_area(const Geometry& g, double chi) {
  const double f = f_K(g, chi);
  return 4.0 * std::numbers::pi * f * f;
}

/// Geodesic distance between the points (chi1, n1) and (chi2, n2) whose directions
/// subtend the angle beta. Haversine forms keep small separations accurate.
inline double geodesic_distance(const Geometry& g, double chi1, double chi2, double beta) {
  g.check_chi(chi1, "geodesic_distance");
  g.check_chi(chi2, "geodesic_distance");
  const double s = std::sin(0.5 * beta);
  switch (g.kind()) {
    case CurvatureKind::flat: {
      const double d = 0.5 * (chi1 - chi2);
      return 2.0 * std::sqrt(d * d + chi1 * chi2 * s * s);
    }
    case CurvatureKind::open: {
      const double a = g.scale();
      const double d = std::sinh(0.5 * a * (chi1 - chi2));
      const double h = d * d + std::sinh(a * chi1) * std::sinh(a * chi2) * s * s;
      return 2.0 * std::asinh(std::sqrt(h)) / a;
    }
    case CurvatureKind::closed: {
      const double a = g.scale();
      const double d = std::sin(0.5 * a * (chi1 - chi2));
      const double h = d * d + std::sin(a * chi1) * std::sin(a * chi2) * s * s;
      return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0))) / a;
    }
  }
  return 0.0;
}

}  // namespace curvedfield
