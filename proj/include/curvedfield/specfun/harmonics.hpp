#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <string>
#include <vector>

#include "curvedfield/errors.hpp"
#include "curvedfield/specfun/wigner.hpp"

namespace curvedfield::specfun {

/// Spin-weighted spherical harmonic sY_lm(theta, phi)
///   = sqrt((2l+1)/(4 pi)) exp(i m phi) d^l_{m,-s}(theta).
/// For s=0 this is Y_lm with the Condon-Shortley phase.
inline std::complex<double> spin_harmonic(int s, int l, int m, double theta, double phi) {
  if (l < std::abs(s)) {
    throw domain_error("spin_harmonic: l=" + std::to_string(l) + " is below |s|=" +
                       std::to_string(std::abs(s)));
  }
  if (std::abs(m) > l) throw domain_error("spin_harmonic: |m| > l");
  const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
  return norm * wigner_d(l, m, -s, theta) * std::polar(1.0, m * phi);
}

enum class Ladder { raise, lower };

/// Square of the eth ladder coefficient as an exact integer: (l-s)(l+s+1) when
/// raising, (l+s)(l-s+1) when lowering; 0 whenever source or target leaves |s|<=l.
inline long long eth_ladder_squared(int s, int l, Ladder direction) {
  const int target = direction == Ladder::raise ? s + 1 : s - 1;
  if (l < 0 || std::abs(s) > l || std::abs(target) > l) return 0;
  const long long L = l;
  const long long S = s;
  return direction == Ladder::raise ? (L - S) * (L + S + 1) : (L + S) * (L - S + 1);
}

/// eth sY_lm = c * (s+1)Y_lm (raise) and eth* sY_lm = c * (s-1)Y_lm (lower).
inline double eth_ladder(int s, int l, Ladder direction) {
  const double root = std::sqrt(static_cast<double>(eth_ladder_squared(s, l, direction)));
  return direction == Ladder::raise ? root : -root;
}

/// Samples of a spin-s quantity on a tensor grid: theta nodes (strictly inside
/// (0, pi), increasing) by equispaced periodic phi nodes phi_k = 2 pi k / n_phi.
/// values are stored theta-major.
struct SpinSection {
  int s = 0;
  std::vector<double> theta;
  std::size_t n_phi = 0;
  std::vector<std::complex<double>> values;

  double phi(std::size_t k) const { return 2.0 * std::numbers::pi * k / static_cast<double>(n_phi); }
  std::complex<double>& at(std::size_t j, std::size_t k) { return values[j * n_phi + k]; }
  const std::complex<double>& at(std::size_t j, std::size_t k) const { return values[j * n_phi + k]; }

  template <class F>
  static SpinSection sample(int s, std::vector<double> theta, std::size_t n_phi, F&& f) {
    SpinSection out{s, std::move(theta), n_phi, {}};
    out.values.resize(out.theta.size() * n_phi);
    for (std::size_t j = 0; j < out.theta.size(); ++j)
      for (std::size_t k = 0; k < n_phi; ++k) out.at(j, k) = f(out.theta[j], out.phi(k));
    return out;
  }
};

/// Finite-difference eth = s cot(theta) - d/dtheta - (i / sin theta) d/dphi.
/// Second-order central differences (non-uniform in theta, periodic in phi). The
/// result lives on the interior theta rows (first and last rows are dropped).
/// `l_max` is the highest degree present; grids with fewer than 4*l_max nodes per
/// direction are rejected.
inline SpinSection eth_numeric(const SpinSection& in, int l_max) {
  const std::size_t need = static_cast<std::size_t>(std::max(4 * l_max, 3));
  if (in.theta.size() < need || in.n_phi < need) {
    throw domain_error("eth_numeric: grid " + std::to_string(in.theta.size()) + "x" +
                       std::to_string(in.n_phi) + " does not resolve degree " +
                       std::to_string(l_max) + " (need >= " + std::to_string(need) +
                       " nodes per direction)");
  }
  if (in.values.size() != in.theta.size() * in.n_phi) {
    throw domain_error("eth_numeric: value count does not match grid");
  }
  for (std::size_t j = 0; j < in.theta.size(); ++j) {
    const double t = in.theta[j];
    if (!(t > 0.0 && t < std::numbers::pi)) throw domain_error("eth_numeric: theta grid touches a pole");
    if (j > 0 && !(t > in.theta[j - 1])) throw domain_error("eth_numeric: theta grid not increasing");
  }
  SpinSection out;
  out.s = in.s + 1;
  out.n_phi = in.n_phi;
  out.theta.assign(in.theta.begin() + 1, in.theta.end() - 1);
  out.values.resize(out.theta.size() * out.n_phi);
  const double dphi = 2.0 * std::numbers::pi / static_cast<double>(in.n_phi);
  const std::complex<double> I(0.0, 1.0);
  for (std::size_t j = 1; j + 1 < in.theta.size(); ++j) {
    const double hm = in.theta[j] - in.theta[j - 1];
    const double hp = in.theta[j + 1] - in.theta[j];
    const double t = in.theta[j];
    const double cot = std::cos(t) / std::sin(t);
    for (std::size_t k = 0; k < in.n_phi; ++k) {
      const auto fm = in.at(j - 1, k);
      const auto f0 = in.at(j, k);
      const auto fp = in.at(j + 1, k);
      const auto dtheta = (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hm * hp * (hm + hp));
      const auto right = in.at(j, (k + 1) % in.n_phi);
      const auto left = in.at(j, (k + in.n_phi - 1) % in.n_phi);
      const auto dphi_f = (right - left) / (2.0 * dphi);
      out.at(j - 1, k) = static_cast<double>(in.s) * cot * f0 - dtheta - I / std::sin(t) * dphi_f;
    }
  }
  return out;
}

}  // namespace curvedfield::specfun
