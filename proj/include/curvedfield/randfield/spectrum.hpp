#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "curvedfield/errors.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/hash.hpp"

namespace curvedfield::randfield {

/// A k^index on [k_low, k_high], zero outside. k_high may be +infinity.
struct PowerLaw {
  double A = 1.0;
  double index = 0.0;
  double k_low = 0.0;
  double k_high = std::numeric_limits<double>::infinity();
};

/// A exp(-(k-k0)^2 / (2 sigma^2)) for k >= 0.
struct GaussianBump {
  double A = 1.0;
  double k0 = 1.0;
  double sigma = 0.25;
};

/// Piecewise-linear interpolation of (k, value) nodes; zero outside the table.
struct Tabulated {
  std::vector<double> k;
  std::vector<double> values;
};

/// Closed model only: P(omega) for omega = 0 .. values.size()-1, zero beyond.
struct DiscreteModes {
  std::vector<double> values;
};

using SpectrumForm = std::variant<PowerLaw, GaussianBump, Tabulated, DiscreteModes>;

/// Density of the spectral measure with respect to the Plancherel measure. For the
/// closed model parametric forms are read at the lattice wave numbers
/// k = (omega+1) sqrt(K); DiscreteModes is indexed by omega directly.
class PowerSpectrum {
 public:
  PowerSpectrum(Geometry geometry, SpectrumForm form) : geometry_(geometry), form_(std::move(form)) {
    validate();
  }

  static PowerSpectrum zero(Geometry geometry) {
    if (geometry.kind() == CurvatureKind::closed) return {geometry, DiscreteModes{{0.0}}};
    return {geometry, PowerLaw{0.0, 0.0, 0.0, 1.0}};
  }

  const Geometry& geometry() const { return geometry_; }
  const SpectrumForm& form() const { return form_; }

  /// P at wave number k (open/flat) or at k itself for closed parametric forms.
  double operator()(double k) const {
    return std::visit([&](const auto& f) { return eval(f, k); }, form_);
  }

  /// P(omega) for the closed model.
  double at_mode(int omega) const {
    curvedfield::detail::require(geometry_.kind() == CurvatureKind::closed && omega >= 0,
                                 "PowerSpectrum::at_mode: closed model and omega >= 0 required");
    if (const auto* d = std::get_if<DiscreteModes>(&form_)) {
      return static_cast<std::size_t>(omega) < d->values.size() ? d->values[omega] : 0.0;
    }
    return (*this)(geometry_.closed_wavenumber(omega));
  }

  /// Closed interval outside which P vanishes (up to e^-50 for the Gaussian bump).
  std::pair<double, double> support() const {
    return std::visit(
        [&](const auto& f) -> std::pair<double, double> {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, PowerLaw>) {
            return {f.k_low, f.k_high};
          } else if constexpr (std::is_same_v<T, GaussianBump>) {
            return {std::max(0.0, f.k0 - 10.0 * f.sigma), f.k0 + 10.0 * f.sigma};
          } else if constexpr (std::is_same_v<T, Tabulated>) {
            return {f.k.front(), f.k.back()};
          } else {
            return {0.0, f.values.size() - 1.0};
          }
        },
        form_);
  }

  /// Largest omega with possibly nonzero P in the closed model (-1 if P is zero,
  /// max int when unbounded).
  int closed_mode_bound() const {
    if (const auto* d = std::get_if<DiscreteModes>(&form_)) {
      int last = -1;
      for (std::size_t w = 0; w < d->values.size(); ++w)
        if (d->values[w] != 0.0) last = static_cast<int>(w);
      return last;
    }
    const double hi = support().second;
    if (!std::isfinite(hi)) return std::numeric_limits<int>::max();
    return static_cast<int>(std::floor(hi / geometry_.scale() - 1.0 + 1e-12));
  }

  bool is_zero() const {
    return std::visit(
        [](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, PowerLaw> || std::is_same_v<T, GaussianBump>) {
            return f.A == 0.0;
          } else {
            return std::all_of(f.values.begin(), f.values.end(), [](double v) { return v == 0.0; });
          }
        },
        form_);
  }

  std::string descriptor() const {
    std::string out = std::string(to_string(geometry_.kind())) + " K=" + exact_text(geometry_.K()) + " ";
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, PowerLaw>) {
            out += "power_law A=" + exact_text(f.A) + " n=" + exact_text(f.index) +
                   " k_low=" + exact_text(f.k_low) + " k_high=" + exact_text(f.k_high);
          } else if constexpr (std::is_same_v<T, GaussianBump>) {
            out += "gaussian_bump A=" + exact_text(f.A) + " k0=" + exact_text(f.k0) +
                   " sigma=" + exact_text(f.sigma);
          } else if constexpr (std::is_same_v<T, Tabulated>) {
            out += "tabulated";
            for (std::size_t i = 0; i < f.k.size(); ++i) out += " " + exact_text(f.k[i]) + ":" + exact_text(f.values[i]);
          } else {
            out += "modes";
            for (double v : f.values) out += " " + exact_text(v);
          }
        },
        form_);
    return out;
  }

  std::uint64_t descriptor_hash() const { return fnv1a(descriptor()); }

 private:
  static double eval(const PowerLaw& f, double k) {
    if (!(k >= f.k_low && k <= f.k_high) || f.A == 0.0) return 0.0;
    if (f.index == 0.0) return f.A;
    return f.A * std::pow(k, f.index);
  }
  static double eval(const GaussianBump& f, double k) {
    if (k < 0.0) return 0.0;
    const double x = (k - f.k0) / f.sigma;
    return f.A * std::exp(-0.5 * x * x);
  }
  static double eval(const Tabulated& f, double k) {
    if (!(k >= f.k.front() && k <= f.k.back())) return 0.0;
    const auto it = std::lower_bound(f.k.begin(), f.k.end(), k);
    const std::size_t i = static_cast<std::size_t>(it - f.k.begin());
    if (f.k[i] == k) return f.values[i];
    const double t = (k - f.k[i - 1]) / (f.k[i] - f.k[i - 1]);
    // Convex combination of two nonnegative nodes stays nonnegative and bracketed.
    return (1.0 - t) * f.values[i - 1] + t * f.values[i];
  }
  static double eval(const DiscreteModes& f, double k) {
    const double w = std::round(k);
    if (w < 0.0 || w != k || w >= static_cast<double>(f.values.size())) return 0.0;
    return f.values[static_cast<std::size_t>(w)];
  }

  void validate() const {
    std::visit([&](const auto& f) { check(f); }, form_);
  }
  void check(const PowerLaw& f) const {
    using curvedfield::detail::require;
    require(std::isfinite(f.A) && f.A >= 0.0, "power_law: amplitude A must be finite and >= 0");
    require(std::isfinite(f.index), "power_law: index must be finite");
    require(std::isfinite(f.k_low) && f.k_low >= 0.0, "power_law: k_low must be finite and >= 0");
    require(f.k_high > f.k_low, "power_law: need k_high > k_low");
    if (f.A == 0.0) return;
    // Finite variance needs int k^{index+2} dk to converge at both ends.
    if (f.k_low == 0.0 && f.index <= -3.0) {
      throw domain_error("power_law: index " + exact_text(f.index) +
                         " <= -3 with k_low = 0 makes the variance diverge at k -> 0");
    }
    if (std::isinf(f.k_high) && f.index >= -3.0) {
      throw domain_error("power_law: index " + exact_text(f.index) +
                         " >= -3 with k_high = infinity makes the variance diverge at k -> infinity");
    }
  }
  void check(const GaussianBump& f) const {
    using curvedfield::detail::require;
    require(std::isfinite(f.A) && f.A >= 0.0, "gaussian_bump: amplitude A must be finite and >= 0");
    require(std::isfinite(f.k0) && f.k0 >= 0.0, "gaussian_bump: k0 must be finite and >= 0");
    require(std::isfinite(f.sigma) && f.sigma > 0.0, "gaussian_bump: sigma must be positive");
  }
  void check(const Tabulated& f) const {
    using curvedfield::detail::require;
    require(f.k.size() >= 2 && f.k.size() == f.values.size(),
            "tabulated: need at least two nodes and matching value count");
    for (std::size_t i = 0; i < f.k.size(); ++i) {
      require(std::isfinite(f.k[i]) && f.k[i] >= 0.0, "tabulated: k nodes must be finite and >= 0");
      require(std::isfinite(f.values[i]) && f.values[i] >= 0.0, "tabulated: values must be finite and >= 0");
      if (i > 0) require(f.k[i] > f.k[i - 1], "tabulated: k nodes must be strictly increasing");
    }
  }
  void check(const DiscreteModes& f) const {
    using curvedfield::detail::require;
    require(geometry_.kind() == CurvatureKind::closed, "modes: discrete spectra need the closed model");
    require(!f.values.empty(), "modes: need at least one value");
    for (double v : f.values) require(std::isfinite(v) && v >= 0.0, "modes: values must be finite and >= 0");
  }

  Geometry geometry_;
  SpectrumForm form_;
};

/// A k^n on the cut window (zero outside); for other forms the spectrum value.
inline double power_law_eval(const PowerSpectrum& P, double k) {
  if (!std::isfinite(k) || k < 0.0) throw domain_error("power_law_eval: k must be finite and >= 0");
  return P(k);
}

/// Point mass of the spectral measure. omega is dimensionless: real >= 0 (principal
/// series), i*tau with tau in (0, 1] (open supplementary series), or an integer
/// mode index (closed).
struct SpectralAtom {
  std::complex<double> omega;
  double weight;
};

/// Covariance spectral measure: density P times the Plancherel measure plus atoms.
struct SpectralMeasure {
  std::optional<PowerSpectrum> density;
  std::vector<SpectralAtom> atoms;
};

}  // namespace curvedfield::randfield
