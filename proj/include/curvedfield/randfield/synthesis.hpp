#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "curvedfield/errors.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/hash.hpp"
#include "curvedfield/parallel.hpp"
#include "curvedfield/quadrature.hpp"
#include "curvedfield/random.hpp"
#include "curvedfield/randfield/correlation.hpp"
#include "curvedfield/randfield/spectrum.hpp"
#include "curvedfield/specfun/harmonics.hpp"
#include "curvedfield/specfun/radial.hpp"

namespace curvedfield::randfield {

enum class FieldKind { complex, real };

/// Weight of mode omega in the closed-model sum: (omega+1) sqrt(P) by default, or
/// omega sqrt(P) (which drops omega = 0).
enum class ClosedModeWeight { shifted, unshifted };

struct SynthesisConfig {
  int l_max = 8;
  /// Open/flat: Gauss-Legendre panels on [k_min, k_max]. k_max <= 0 means the
  /// upper end of the spectrum's support (which must then be finite).
  std::size_t k_order = 16;
  std::size_t k_panels = 4;
  double k_min = 0.0;
  double k_max = 0.0;
  /// Closed: modes omega = 0..omega_max.
  int omega_max = 8;
  std::uint64_t seed = 0;
  FieldKind field_kind = FieldKind::complex;
  ClosedModeWeight closed_weight = ClosedModeWeight::shifted;
  unsigned threads = 1;
  /// Largest tolerated share of the variance lost by truncating the spectrum.
  double moment_tolerance = 1e-6;

  std::string descriptor() const {
    return "l_max=" + std::to_string(l_max) + " k_order=" + std::to_string(k_order) +
           " k_panels=" + std::to_string(k_panels) + " k_min=" + exact_text(k_min) +
           " k_max=" + exact_text(k_max) + " omega_max=" + std::to_string(omega_max) +
           " field=" + (field_kind == FieldKind::real ? "real" : "complex") +
           " closed_weight=" + (closed_weight == ClosedModeWeight::unshifted ? "unshifted" : "shifted");
  }
};

/// Tensor grid chi x theta x phi; values are stored chi-outer, phi-inner.
struct FieldGrid {
  std::vector<double> chi;
  std::vector<double> theta;
  std::vector<double> phi;

  std::size_t size() const { return chi.size() * theta.size() * phi.size(); }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * theta.size() + j) * phi.size() + k;
  }
  bool operator==(const FieldGrid&) const = default;
};

/// Coefficient processes a_lm(chi_i), flattened as ((l^2 + l + m) * n_chi + i).
struct HarmonicCoefficients {
  int l_max = 0;
  std::size_t n_chi = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& at(int l, int m, std::size_t i) {
    return values[static_cast<std::size_t>(l * l + l + m) * n_chi + i];
  }
  const std::complex<double>& at(int l, int m, std::size_t i) const {
    return values[static_cast<std::size_t>(l * l + l + m) * n_chi + i];
  }
};

struct FieldRealization {
  Geometry geometry = Geometry::flat();
  FieldGrid grid;
  std::vector<std::complex<double>> values;
  HarmonicCoefficients coefficients;
  SynthesisConfig config;
  std::uint64_t spectrum_hash = 0;

  const std::complex<double>& at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[grid.index(i, j, k)];
  }
};

namespace detail {

inline void check_grid(const Geometry& g, const FieldGrid& grid) {
  curvedfield::detail::require(!grid.chi.empty() && !grid.theta.empty() && !grid.phi.empty(),
                               "FieldGrid: every axis needs at least one node");
  for (double chi : grid.chi) g.check_chi(chi, "FieldGrid");
  for (double t : grid.theta) {
    curvedfield::detail::require(std::isfinite(t) && t >= 0.0 && t <= std::numbers::pi,
                                 "FieldGrid: theta must lie in [0, pi]");
  }
  for (double p : grid.phi) curvedfield::detail::require(std::isfinite(p), "FieldGrid: phi must be finite");
}

}  // namespace detail

/// Gaussian mode-sum synthesis with tables prepared once so that many seeds can be drawn:
///   open:   2 sqrt(pi) sum_lm int R_kl(chi) k sqrt(P(k)) dW_lm(k) Y_lm
///   flat:   pi sqrt(2) (same integrand)
///   closed: 2 sqrt(pi) sum_omega sum_lm R_omega,l(chi) (omega+1) sqrt(P(omega)) xi Y_lm
/// The stochastic integral over k is discretised on the quadrature nodes as
/// sum_q R_{k_q l} k_q sqrt(P(k_q) w_q) xi_{lm,q}, with xi drawn from a Philox stream
/// keyed by (seed, l, m, q).
class Synthesizer {
 public:
  Synthesizer(const PowerSpectrum& P, SynthesisConfig cfg, FieldGrid grid)
      : geometry_(P.geometry()), config_(std::move(cfg)), grid_(std::move(grid)), spectrum_hash_(P.descriptor_hash()) {
    using curvedfield::detail::require;
    require(config_.l_max >= 0 && config_.l_max <= specfun::max_degree, "synthesize: l_max outside [0, 64]");
    detail::check_grid(geometry_, grid_);
    build_modes(P);
    build_tables();
  }

  const Geometry& geometry() const { return geometry_; }
  const FieldGrid& grid() const { return grid_; }
  const SynthesisConfig& config() const { return config_; }
  std::size_t mode_count() const { return modes_.size(); }
  /// Point variance on the origin of the discretised spectrum (only l=0 contributes).
  double discrete_variance() const {
    const double r0 = geometry_.kind() == CurvatureKind::flat ? 2.0 / std::numbers::pi : 1.0;
    double v = 0.0;
    for (const auto& md : modes_) v += md.amplitude * md.amplitude;
    return v * r0 / (4.0 * std::numbers::pi);
  }

  FieldRealization realize(std::uint64_t seed) const {
    const int L = config_.l_max;
    const std::size_t n_chi = grid_.chi.size();
    const std::size_t n_modes = modes_.size();
    const rng::Key key = rng::key_from_seed(seed);
    const bool real = config_.field_kind == FieldKind::real;

    HarmonicCoefficients coeffs{L, n_chi, std::vector<std::complex<double>>((L + 1) * (L + 1) * n_chi)};
    parallel_for(static_cast<std::size_t>(L + 1), config_.threads, [&](std::size_t lu) {
      const int l = static_cast<int>(lu);
      std::vector<std::complex<double>> xi(n_modes);
      for (int m = real ? 0 : -l; m <= l; ++m) {
        for (std::size_t q = 0; q < n_modes; ++q) {
          const auto ctr = rng::counter_for(rng::Stream::scalar_field, 0, l, m, static_cast<std::uint32_t>(q));
          xi[q] = (real && m == 0) ? std::complex<double>(rng::normal_pair(ctr, key)[0], 0.0)
                                   : rng::complex_normal(ctr, key);
        }
        for (std::size_t i = 0; i < n_chi; ++i) {
          std::complex<double> a = 0.0;
          for (std::size_t q = 0; q < n_modes; ++q) a += radial_table_[(lu * n_modes + q) * n_chi + i] * xi[q];
          coeffs.at(l, m, i) = a;
          if (real && m > 0) coeffs.at(l, -m, i) = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(a);
        }
      }
    });

    FieldRealization out;
    out.geometry = geometry_;
    out.grid = grid_;
    out.config = config_;
    out.config.seed = seed;
    out.spectrum_hash = spectrum_hash_;
    out.values.assign(grid_.size(), 0.0);
    const std::size_t n_theta = grid_.theta.size();
    const std::size_t n_phi = grid_.phi.size();
    parallel_for(n_chi * n_theta, config_.threads, [&](std::size_t row) {
      const std::size_t i = row / n_theta;
      const std::size_t j = row % n_theta;
      std::vector<std::complex<double>> by_m(2 * L + 1);
      for (int m = -L; m <= L; ++m) {
        std::complex<double> s = 0.0;
        for (int l = std::abs(m); l <= L; ++l) s += coeffs.at(l, m, i) * theta_table_[theta_index(l, m, j)];
        by_m[m + L] = s;
      }
      for (std::size_t k = 0; k < n_phi; ++k) {
        std::complex<double> v = 0.0;
        for (int m = -L; m <= L; ++m) v += by_m[m + L] * phase_table_[(m + L) * n_phi + k];
        out.values[grid_.index(i, j, k)] = real ? std::complex<double>(v.real(), 0.0) : v;
      }
    });
    out.coefficients = std::move(coeffs);
    return out;
  }

 private:
  struct Mode {
    double k;          // wave number, or omega for the closed model
    double amplitude;  // prefactor * k sqrt(P w), or prefactor * weight(omega) sqrt(P)
  };

  double prefactor() const {
    return geometry_.kind() == CurvatureKind::flat ? std::numbers::pi * std::numbers::sqrt2
                                                   : 2.0 * std::sqrt(std::numbers::pi);
  }

  void build_modes(const PowerSpectrum& P) {
    using curvedfield::detail::require;
    const double A = prefactor();
    if (geometry_.kind() == CurvatureKind::closed) {
      require(config_.omega_max >= 0, "synthesize: omega_max must be >= 0");
      const int bound = P.closed_mode_bound();
      if (bound > config_.omega_max && !P.is_zero()) {
        // Mass beyond omega_max relative to the retained mass.
        double kept = 0.0;
        for (int w = 0; w <= config_.omega_max; ++w) kept += (w + 1.0) * (w + 1.0) * P.at_mode(w);
        const double total = spectral_mass(P);
        if (!(total - kept <= config_.moment_tolerance * total)) {
          throw convergence_error("synthesize: modes above omega_max=" + std::to_string(config_.omega_max) +
                                  " carry a variance share " + std::to_string((total - kept) / total));
        }
      }
      for (int w = 0; w <= config_.omega_max; ++w) {
        const double p = P.at_mode(w);
        const double weight = config_.closed_weight == ClosedModeWeight::shifted ? w + 1.0 : double(w);
        modes_.push_back({static_cast<double>(w), A * weight * std::sqrt(p)});
      }
      return;
    }
    auto [lo, hi] = P.support();
    const double k_min = config_.k_min;
    double k_max = config_.k_max > 0.0 ? config_.k_max : hi;
    require(std::isfinite(k_max), "synthesize: spectrum support is unbounded; set k_max");
    require(k_max > k_min && k_min >= 0.0, "synthesize: need 0 <= k_min < k_max");
    if (!P.is_zero()) {
      const double total = spectral_mass(P);
      const double kept =
          quad::integrate_adaptive([&](double k) { return P(k) * k * k; }, std::max(k_min, lo),
                                   std::max(std::min(k_max, hi), std::max(k_min, lo)), 0.0, 1e-10, 1 << 13)
              .value;
      if (!(total - kept <= config_.moment_tolerance * total)) {
        throw convergence_error("synthesize: k window [" + exact_text(k_min) + ", " + exact_text(k_max) +
                                "] misses a variance share " + std::to_string((total - kept) / total) +
                                " of the spectrum");
      }
    }
    const quad::Rule rule = quad::gauss_legendre_panels(k_min, k_max, config_.k_panels, config_.k_order);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double k = rule.nodes[q];
      modes_.push_back({k, A * k * std::sqrt(P(k) * rule.weights[q])});
    }
  }

  void build_tables() {
    const int L = config_.l_max;
    const std::size_t n_chi = grid_.chi.size();
    const std::size_t n_modes = modes_.size();
    radial_table_.assign((L + 1) * n_modes * n_chi, 0.0);
    parallel_for(static_cast<std::size_t>(L + 1), config_.threads, [&](std::size_t lu) {
      const int l = static_cast<int>(lu);
      for (std::size_t q = 0; q < n_modes; ++q) {
        if (modes_[q].amplitude == 0.0) continue;
        for (std::size_t i = 0; i < n_chi; ++i) {
          const double chi = grid_.chi[i];
          double R = 0.0;
          if (geometry_.kind() == CurvatureKind::closed) {
            const int w = static_cast<int>(modes_[q].k);
            R = specfun::radial_closed_mode(w, l, std::min(geometry_.scale() * chi, std::numbers::pi));
          } else {
            R = specfun::radial(geometry_, modes_[q].k, l, chi);
          }
          radial_table_[(lu * n_modes + q) * n_chi + i] = modes_[q].amplitude * R;
        }
      }
    });
    const std::size_t n_theta = grid_.theta.size();
    theta_table_.assign(static_cast<std::size_t>((L + 1) * (L + 1)) * n_theta, 0.0);
    for (int l = 0; l <= L; ++l) {
      const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
      for (int m = -l; m <= l; ++m)
        for (std::size_t j = 0; j < n_theta; ++j)
          theta_table_[theta_index(l, m, j)] = norm * specfun::wigner_d(l, m, 0, grid_.theta[j]);
    }
    const std::size_t n_phi = grid_.phi.size();
    phase_table_.assign((2 * L + 1) * n_phi, 0.0);
    for (int m = -L; m <= L; ++m)
      for (std::size_t k = 0; k < n_phi; ++k) phase_table_[(m + L) * n_phi + k] = std::polar(1.0, m * grid_.phi[k]);
  }

  std::size_t theta_index(int l, int m, std::size_t j) const {
    return static_cast<std::size_t>(l * l + l + m) * grid_.theta.size() + j;
  }

  Geometry geometry_;
  SynthesisConfig config_;
  FieldGrid grid_;
  std::uint64_t spectrum_hash_;
  std::vector<Mode> modes_;
  std::vector<double> radial_table_;
  std::vector<double> theta_table_;
  std::vector<std::complex<double>> phase_table_;
};

inline FieldRealization synthesize(const PowerSpectrum& P, const SynthesisConfig& cfg, const FieldGrid& grid) {
  return Synthesizer(P, cfg, grid).realize(cfg.seed);
}

}  // namespace curvedfield::randfield
