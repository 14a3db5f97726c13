#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "curvedfield/errors.hpp"
#include "curvedfield/parallel.hpp"
#include "curvedfield/quadrature.hpp"
#include "curvedfield/random.hpp"
#include "curvedfield/specfun/harmonics.hpp"

namespace curvedfield::spinfield {

/// Kernels C_{s,l}(chi_i, chi_j) for l = |s| .. l_max on a chi grid.
struct SpinKernelSet {
  int s = 0;
  int l_max = 0;
  std::vector<double> chi;
  std::vector<Eigen::MatrixXd> kernels;  // kernels[l - |s|]

  int l_min() const { return std::abs(s); }

  static SpinKernelSet zeros(int s, int l_max, std::vector<double> chi) {
    curvedfield::detail::require(l_max >= std::abs(s), "SpinKernelSet: l_max must be >= |s|");
    SpinKernelSet k{s, l_max, std::move(chi), {}};
    const auto n = static_cast<Eigen::Index>(k.chi.size());
    k.kernels.assign(static_cast<std::size_t>(l_max - std::abs(s) + 1), Eigen::MatrixXd::Zero(n, n));
    return k;
  }

  Eigen::MatrixXd& at(int l) { return kernels[static_cast<std::size_t>(l - l_min())]; }
  const Eigen::MatrixXd& at(int l) const { return kernels[static_cast<std::size_t>(l - l_min())]; }
};

/// Roundoff allowance for symmetry and negative eigenvalues, relative to max(1, |C|).
inline constexpr double kernel_clip = 1e-12;

/// Checks the structural invariants: square symmetric nonnegative-definite tables,
/// finite trace sum, and C(0, chi) = 0 for l != 0 when chi = 0 is on the grid.
inline void validate(const SpinKernelSet& k) {
  using curvedfield::detail::require;
  require(k.l_max >= k.l_min() && k.l_max <= specfun::max_degree, "SpinKernelSet: l_max outside [|s|, 64]");
  require(k.kernels.size() == static_cast<std::size_t>(k.l_max - k.l_min() + 1),
          "SpinKernelSet: one kernel per degree l = |s|..l_max is required");
  require(!k.chi.empty(), "SpinKernelSet: empty chi grid");
  const auto n = static_cast<Eigen::Index>(k.chi.size());
  for (int l = k.l_min(); l <= k.l_max; ++l) {
    const Eigen::MatrixXd& C = k.at(l);
    const std::string where = "SpinKernelSet: kernel l=" + std::to_string(l);
    if (C.rows() != n || C.cols() != n) throw domain_error(where + " has the wrong shape");
    if (!C.allFinite()) throw domain_error(where + " has non-finite entries");
    const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > kernel_clip * scale) throw domain_error(where + " is not symmetric");
    if (n > 0) {
      const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(C, Eigen::EigenvaluesOnly).eigenvalues()(0);
      if (min_eig < -kernel_clip * scale) {
        throw domain_error(where + " is not nonnegative-definite (eigenvalue " + std::to_string(min_eig) + ")");
      }
    }
    if (l != 0) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (k.chi[static_cast<std::size_t>(i)] == 0.0 && C.row(i).cwiseAbs().maxCoeff() != 0.0) {
          throw domain_error(where + " does not vanish at chi = 0");
        }
      }
    }
  }
}

/// a_{s,lm}(chi_i) flattened as ((l^2 + l + m) * n_chi + i); entries below l=|s| are zero.
struct SpinCoefficients {
  int s = 0;
  int l_max = 0;
  std::size_t n_chi = 0;
  std::vector<std::complex<double>> values;

  static SpinCoefficients zeros(int s, int l_max, std::size_t n_chi) {
    return {s, l_max, n_chi, std::vector<std::complex<double>>(static_cast<std::size_t>((l_max + 1) * (l_max + 1)) * n_chi)};
  }
  std::complex<double>& at(int l, int m, std::size_t i) {
    return values[static_cast<std::size_t>(l * l + l + m) * n_chi + i];
  }
  const std::complex<double>& at(int l, int m, std::size_t i) const {
    return values[static_cast<std::size_t>(l * l + l + m) * n_chi + i];
  }
};

struct SpinFieldRealization {
  int s = 0;
  std::vector<double> chi;
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<std::complex<double>> values;  // chi outer, phi inner
  SpinCoefficients coefficients;
  std::uint64_t seed = 0;
  int l_max = 0;

  const std::complex<double>& at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * theta.size() + j) * phi.size() + k];
  }
};

/// X(chi_i, theta_j, phi_k) = sum_{l >= |s|} sum_m a_lm(chi_i) sY_lm(theta_j, phi_k).
inline std::vector<std::complex<double>> evaluate(const SpinCoefficients& a, const std::vector<double>& theta,
                                                  const std::vector<double>& phi, unsigned threads = 1) {
  const int L = a.l_max;
  const int l0 = std::abs(a.s);
  const std::size_t nt = theta.size();
  const std::size_t np = phi.size();
  std::vector<double> dtab(static_cast<std::size_t>((L + 1) * (L + 1)) * nt, 0.0);
  const auto dindex = [&](int l, int m, std::size_t j) { return static_cast<std::size_t>(l * l + l + m) * nt + j; };
  for (int l = l0; l <= L; ++l) {
    const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
    for (int m = -l; m <= l; ++m)
      for (std::size_t j = 0; j < nt; ++j) dtab[dindex(l, m, j)] = norm * specfun::wigner_d(l, m, -a.s, theta[j]);
  }
  std::vector<std::complex<double>> phase(static_cast<std::size_t>(2 * L + 1) * np);
  for (int m = -L; m <= L; ++m)
    for (std::size_t k = 0; k < np; ++k) phase[static_cast<std::size_t>(m + L) * np + k] = std::polar(1.0, m * phi[k]);
  std::vector<std::complex<double>> out(a.n_chi * nt * np);
  parallel_for(a.n_chi * nt, threads, [&](std::size_t row) {
    const std::size_t i = row / nt;
    const std::size_t j = row % nt;
    std::vector<std::complex<double>> by_m(static_cast<std::size_t>(2 * L + 1));
    for (int m = -L; m <= L; ++m) {
      std::complex<double> sum = 0.0;
      for (int l = std::max(l0, std::abs(m)); l <= L; ++l) sum += a.at(l, m, i) * dtab[dindex(l, m, j)];
      by_m[static_cast<std::size_t>(m + L)] = sum;
    }
    for (std::size_t k = 0; k < np; ++k) {
      std::complex<double> v = 0.0;
      for (int m = -L; m <= L; ++m) v += by_m[static_cast<std::size_t>(m + L)] * phase[static_cast<std::size_t>(m + L) * np + k];
      out[row * np + k] = v;
    }
  });
  return out;
}

/// Symmetric square root of a kernel matrix. Eigenvalues down to -kernel_clip*max(1,|C|)
/// are clipped to zero; grid points with zero variance get exactly zero rows and columns.
inline Eigen::MatrixXd kernel_sqrt(const Eigen::MatrixXd& C, int l) {
  const auto n = C.rows();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < n; ++i)
    if (C(i, i) != 0.0) active.push_back(i);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n);
  if (active.empty()) return B;
  const auto m = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) sub(a, b) = C(active[a], active[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sub);
  if (eig.info() != Eigen::Success) throw convergence_error("kernel_sqrt: eigendecomposition failed at l=" + std::to_string(l));
  const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (lambda(i) < -kernel_clip * scale) {
      throw domain_error("synthesize_spin: kernel l=" + std::to_string(l) +
                         " is not nonnegative-definite (eigenvalue " + std::to_string(lambda(i)) + ")");
    }
    lambda(i) = std::sqrt(std::max(0.0, lambda(i)));
  }
  const Eigen::MatrixXd root = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b) B(active[a], active[b]) = root(a, b);
  return B;
}

/// Spin-s field with coefficient processes a_lm(chi) ~ B_l xi, B_l B_l^T = C_{s,l},
/// xi independent standard complex Gaussians keyed by (seed, s, l, m, chi index).
inline SpinFieldRealization synthesize_spin(const SpinKernelSet& kernels, const std::vector<double>& theta,
                                            const std::vector<double>& phi, std::uint64_t seed, unsigned threads = 1) {
  validate(kernels);
  const int L = kernels.l_max;
  const int s = kernels.s;
  const std::size_t n = kernels.chi.size();
  SpinCoefficients a = SpinCoefficients::zeros(s, L, n);
  const rng::Key key = rng::key_from_seed(seed);
  const int l0 = kernels.l_min();
  parallel_for(static_cast<std::size_t>(L - l0 + 1), threads, [&](std::size_t idx) {
    const int l = l0 + static_cast<int>(idx);
    const Eigen::MatrixXd B = kernel_sqrt(kernels.at(l), l);
    Eigen::VectorXcd xi(static_cast<Eigen::Index>(n));
    for (int m = -l; m <= l; ++m) {
      for (std::size_t q = 0; q < n; ++q) {
        xi(static_cast<Eigen::Index>(q)) =
            rng::complex_normal(rng::counter_for(rng::Stream::spin_field, s, l, m, static_cast<std::uint32_t>(q)), key);
      }
      const Eigen::VectorXcd coeff = B.cast<std::complex<double>>() * xi;
      for (std::size_t i = 0; i < n; ++i) a.at(l, m, i) = coeff(static_cast<Eigen::Index>(i));
    }
  });
  SpinFieldRealization out;
  out.s = s;
  out.chi = kernels.chi;
  out.theta = theta;
  out.phi = phi;
  out.values = evaluate(a, theta, phi, threads);
  out.coefficients = std::move(a);
  out.seed = seed;
  out.l_max = L;
  return out;
}

/// Euler angles of the point pair (n1, n2), plus their validity.
struct PointPairFrame {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  bool angles_defined = true;  // false at coincident or antipodal points
};

namespace detail {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Rz(phi) Ry(theta): rotation taking the north pole to (theta, phi).
inline Mat3 pole_to(double theta, double phi) {
  const double ct = std::cos(theta), st = std::sin(theta), cp = std::cos(phi), sp = std::sin(phi);
  return {{{cp * ct, -sp, cp * st}, {sp * ct, cp, sp * st}, {-st, 0.0, ct}}};
}

// R1^T R2.
inline Mat3 relative(const Mat3& r1, const Mat3& r2) {
  Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) m[i][j] += r1[k][i] * r2[k][j];
  return m;
}

inline double wrap(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(angle, two_pi);
  if (w < 0.0) w += two_pi;
  return w >= two_pi ? 0.0 : w;
}

}  // namespace detail

/// Frame angles of the point pair. alpha is the bearing (azimuth from north
/// through east) of the connecting great arc leaving n1 towards n2; gamma is
/// pi minus the bearing of the arc where it arrives at n2. With the ZYZ angles
/// (a, beta, c) of R(n1)^T R(n2), R(n) = Rz(phi) Ry(theta), these are
/// alpha = pi - a and gamma = -c.
inline PointPairFrame euler_frame(double theta1, double phi1, double theta2, double phi2) {
  const auto M = detail::relative(detail::pole_to(theta1, phi1), detail::pole_to(theta2, phi2));
  PointPairFrame f;
  const double sb = std::hypot(M[0][2], M[1][2]);
  f.beta = std::atan2(sb, M[2][2]);
  if (sb < 1e-12) {
    f.angles_defined = false;
    f.alpha = 0.0;
    f.gamma = 0.0;
    return f;
  }
  f.alpha = detail::wrap(std::numbers::pi - std::atan2(M[1][2], M[0][2]));
  f.gamma = detail::wrap(-std::atan2(M[2][1], -M[2][0]));
  return f;
}

/// alpha + gamma, with its limit value where the frame degenerates (pi at
/// coincident points).
inline double frame_phase_angle(double theta1, double phi1, double theta2, double phi2) {
  const auto M = detail::relative(detail::pole_to(theta1, phi1), detail::pole_to(theta2, phi2));
  return std::numbers::pi - std::atan2(M[1][0] - M[0][1], M[0][0] + M[1][1]);
}

/// R = (1/(2 sqrt pi)) sum_l C_{s,l}(chi_i1, chi_i2) sqrt(2l+1) sY_{l,-s}(beta, 0) e^{-is(alpha+gamma)}.
/// At coincident points the phase takes its limit (-1)^s; at antipodal points only
/// s = 0 terms survive.
inline std::complex<double> spin_correlation(const SpinKernelSet& k, std::size_t i1, double theta1, double phi1,
                                             std::size_t i2, double theta2, double phi2) {
  curvedfield::detail::require(i1 < k.chi.size() && i2 < k.chi.size(), "spin_correlation: chi index outside grid");
  const PointPairFrame f = euler_frame(theta1, phi1, theta2, phi2);
  double sum = 0.0;
  for (int l = k.l_min(); l <= k.l_max; ++l) {
    const double c = k.at(l)(static_cast<Eigen::Index>(i1), static_cast<Eigen::Index>(i2));
    if (c == 0.0) continue;
    sum += c * std::sqrt(2.0 * l + 1.0) * specfun::spin_harmonic(k.s, l, -k.s, f.beta, 0.0).real();
  }
  const double phase_angle = k.s == 0 ? 0.0 : frame_phase_angle(theta1, phi1, theta2, phi2);
  return 0.5 / std::sqrt(std::numbers::pi) * sum * std::polar(1.0, -k.s * phase_angle);
}

/// Gauss-Legendre rule in cos(beta): nodes are angles beta_j (ascending), weights
/// integrate g(beta) sin(beta) d beta over [0, pi].
inline quad::Rule beta_quadrature(std::size_t n) {
  const quad::Rule x = quad::gauss_legendre(n);
  quad::Rule r;
  for (std::size_t j = n; j-- > 0;) {
    r.nodes.push_back(std::acos(x.nodes[j]));
    r.weights.push_back(x.weights[j]);
  }
  return r;
}

/// Zonal samples R(chi_i1, north pole, chi_i2, (beta_j, 0)) stored as
/// [(i1 * n_chi + i2) * n_beta + j].
inline std::vector<std::complex<double>> sample_zonal_correlation(const SpinKernelSet& k, const quad::Rule& beta) {
  const std::size_t n = k.chi.size();
  std::vector<std::complex<double>> out(n * n * beta.size());
  for (std::size_t i1 = 0; i1 < n; ++i1)
    for (std::size_t i2 = 0; i2 < n; ++i2)
      for (std::size_t j = 0; j < beta.size(); ++j)
        out[(i1 * n + i2) * beta.size() + j] = spin_correlation(k, i1, 0.0, 0.0, i2, beta.nodes[j], 0.0);
  return out;
}

/// C_{s,l}(chi_1, chi_2) = (4 pi^{3/2} / sqrt(2l+1)) int_0^pi R e^{is(alpha+gamma)} conj(sY_{l,-s}(beta, 0)) sin(beta) d beta
/// on a Gauss-Legendre rule in cos(beta) with at least 2 l_max nodes. The frame factor
/// removes the phase of the sampling configuration (pole, (beta, 0)), which is (-1)^s.
inline SpinKernelSet recover_kernels(const std::vector<std::complex<double>>& samples, const quad::Rule& beta, int s,
                                     int l_max, const std::vector<double>& chi) {
  curvedfield::detail::require(l_max >= std::abs(s), "recover_kernels: l_max must be >= |s|");
  if (beta.size() < static_cast<std::size_t>(std::max(2 * l_max, 1))) {
    throw domain_error("recover_kernels: beta grid with " + std::to_string(beta.size()) +
                       " nodes cannot resolve l_max=" + std::to_string(l_max) + " (need >= " +
                       std::to_string(2 * l_max) + ")");
  }
  const std::size_t n = chi.size();
  curvedfield::detail::require(samples.size() == n * n * beta.size(), "recover_kernels: sample count mismatch");
  SpinKernelSet out = SpinKernelSet::zeros(s, l_max, chi);
  for (int l = out.l_min(); l <= l_max; ++l) {
    std::vector<std::complex<double>> basis(beta.size());
    for (std::size_t j = 0; j < beta.size(); ++j) {
      basis[j] = beta.weights[j] * specfun::spin_harmonic(s, l, -s, beta.nodes[j], 0.0).real() *
                 std::polar(1.0, s * frame_phase_angle(0.0, 0.0, beta.nodes[j], 0.0));
    }
    const double scale = 4.0 * std::pow(std::numbers::pi, 1.5) / std::sqrt(2.0 * l + 1.0);
    for (std::size_t i1 = 0; i1 < n; ++i1)
      for (std::size_t i2 = 0; i2 < n; ++i2) {
        double acc = 0.0;
        for (std::size_t j = 0; j < beta.size(); ++j) acc += (samples[(i1 * n + i2) * beta.size() + j] * basis[j]).real();
        out.at(l)(static_cast<Eigen::Index>(i1), static_cast<Eigen::Index>(i2)) = scale * acc;
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lensing ladder

/// A ladder multiplier written exactly as sign * (factor / 2) * sqrt(radicand).
struct LadderMultiplier {
  int sign = 1;
  long long factor = 0;
  long long radicand = 0;

  double value() const {
    return sign * 0.5 * static_cast<double>(factor) * std::sqrt(static_cast<double>(radicand));
  }
};

namespace detail {

// (1/2) * product of eth ladder coefficients applied to a spin-0 degree-l mode.
inline LadderMultiplier compose(int l, std::initializer_list<specfun::Ladder> steps) {
  long long squared = 1;
  int sign = 1;
  int s = 0;
  for (const auto step : steps) {
    squared *= specfun::eth_ladder_squared(s, l, step);
    if (step == specfun::Ladder::lower) sign = -sign;
    s += step == specfun::Ladder::raise ? 1 : -1;
  }
  if (squared == 0) return {1, 0, 0};
  // Pull the largest square factor out of the radicand.
  long long factor = 1;
  long long rest = squared;
  for (long long p = 2; p * p <= rest; ++p) {
    while (rest % (p * p) == 0) {
      rest /= p * p;
      factor *= p;
    }
  }
  return {sign, factor, rest};
}

}  // namespace detail

enum class LensingObservable { convergence, flexion_F, shear, flexion_G };

inline int spin_of(LensingObservable o) {
  switch (o) {
    case LensingObservable::convergence: return 0;
    case LensingObservable::flexion_F: return 1;
    case LensingObservable::shear: return 2;
    case LensingObservable::flexion_G: return 3;
  }
  return 0;
}

/// kappa = (1/2) eth* eth psi, F = (1/2) eth eth* eth psi, gamma = (1/2) eth^2 psi,
/// G = (1/2) eth^3 psi on the degree-l component of psi.
inline LadderMultiplier lensing_multiplier(LensingObservable o, int l) {
  using specfun::Ladder;
  switch (o) {
    case LensingObservable::convergence: return detail::compose(l, {Ladder::raise, Ladder::lower});
    case LensingObservable::flexion_F: return detail::compose(l, {Ladder::raise, Ladder::lower, Ladder::raise});
    case LensingObservable::shear: return detail::compose(l, {Ladder::raise, Ladder::raise});
    case LensingObservable::flexion_G: return detail::compose(l, {Ladder::raise, Ladder::raise, Ladder::raise});
  }
  return {};
}

struct LensingCoefficientSet {
  SpinCoefficients psi;
  SpinCoefficients convergence;  // s = 0
  SpinCoefficients flexion_F;    // s = 1
  SpinCoefficients shear;        // s = 2
  SpinCoefficients flexion_G;    // s = 3

  const SpinCoefficients& get(LensingObservable o) const {
    switch (o) {
      case LensingObservable::convergence: return convergence;
      case LensingObservable::flexion_F: return flexion_F;
      case LensingObservable::shear: return shear;
      case LensingObservable::flexion_G: return flexion_G;
    }
    return convergence;
  }
};

/// Applies the ladder multipliers to the spin-0 potential coefficients. The moment
/// sum_l l(l+1)(2l+1) sum_m |a_lm|^2 must be finite.
inline LensingCoefficientSet lensing_ladder(const SpinCoefficients& psi) {
  curvedfield::detail::require(psi.s == 0, "lensing_ladder: the potential must have spin 0");
  double moment = 0.0;
  for (int l = 0; l <= psi.l_max; ++l)
    for (int m = -l; m <= l; ++m)
      for (std::size_t i = 0; i < psi.n_chi; ++i) moment += l * (l + 1.0) * std::norm(psi.at(l, m, i));
  if (!std::isfinite(moment)) throw convergence_error("lensing_ladder: potential moment diverges");
  LensingCoefficientSet out;
  out.psi = psi;
  for (const auto o : {LensingObservable::convergence, LensingObservable::flexion_F, LensingObservable::shear,
                       LensingObservable::flexion_G}) {
    SpinCoefficients c = SpinCoefficients::zeros(spin_of(o), psi.l_max, psi.n_chi);
    for (int l = spin_of(o); l <= psi.l_max; ++l) {
      const double mult = lensing_multiplier(o, l).value();
      for (int m = -l; m <= l; ++m)
        for (std::size_t i = 0; i < psi.n_chi; ++i) c.at(l, m, i) = mult * psi.at(l, m, i);
    }
    switch (o) {
      case LensingObservable::convergence: out.convergence = std::move(c); break;
      case LensingObservable::flexion_F: out.flexion_F = std::move(c); break;
      case LensingObservable::shear: out.shear = std::move(c); break;
      case LensingObservable::flexion_G: out.flexion_G = std::move(c); break;
    }
  }
  return out;
}

/// Kernels of a derived observable from those of psi: C_X,l = multiplier(l)^2 C_psi,l.
inline SpinKernelSet ladder_kernels(const SpinKernelSet& psi, LensingObservable o) {
  curvedfield::detail::require(psi.s == 0, "ladder_kernels: the potential must have spin 0");
  const int s = spin_of(o);
  curvedfield::detail::require(psi.l_max >= s, "ladder_kernels: l_max below the observable's spin");
  SpinKernelSet out = SpinKernelSet::zeros(s, psi.l_max, psi.chi);
  for (int l = s; l <= psi.l_max; ++l) {
    const double mult = lensing_multiplier(o, l).value();
    out.at(l) = mult * mult * psi.at(l);
  }
  return out;
}

/// Spin-s harmonic analysis of samples on Gauss-Legendre theta nodes (in cos theta)
/// and n_phi equispaced phi nodes; exact for band limit l_max when the theta grid has
/// more than l_max nodes and n_phi > 2 l_max.
inline SpinCoefficients analyze(int s, int l_max, std::size_t n_chi, const std::vector<std::complex<double>>& values,
                                const quad::Rule& theta_rule, std::size_t n_phi) {
  using curvedfield::detail::require;
  require(values.size() == n_chi * theta_rule.size() * n_phi, "analyze: value count does not match the grid");
  require(n_phi > static_cast<std::size_t>(2 * l_max), "analyze: too few phi nodes for l_max");
  require(theta_rule.size() > static_cast<std::size_t>(l_max), "analyze: too few theta nodes for l_max");
  SpinCoefficients a = SpinCoefficients::zeros(s, l_max, n_chi);
  const std::size_t nt = theta_rule.size();
  const double dphi = 2.0 * std::numbers::pi / static_cast<double>(n_phi);
  for (int m = -l_max; m <= l_max; ++m) {
    // Fourier coefficient in phi for every (chi, theta) row.
    std::vector<std::complex<double>> fm(n_chi * nt);
    for (std::size_t row = 0; row < n_chi * nt; ++row) {
      std::complex<double> acc = 0.0;
      for (std::size_t k = 0; k < n_phi; ++k) acc += values[row * n_phi + k] * std::polar(1.0, -m * dphi * k);
      fm[row] = acc * dphi;
    }
    for (int l = std::max(std::abs(s), std::abs(m)); l <= l_max; ++l) {
      const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * std::numbers::pi));
      for (std::size_t j = 0; j < nt; ++j) {
        const double w = theta_rule.weights[j] * norm * specfun::wigner_d(l, m, -s, theta_rule.nodes[j]);
        for (std::size_t i = 0; i < n_chi; ++i) a.at(l, m, i) += w * fm[i * nt + j];
      }
    }
  }
  return a;
}

}  // namespace curvedfield::spinfield
