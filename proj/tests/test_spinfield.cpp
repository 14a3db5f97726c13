#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "curvedfield/spinfield.hpp"
#include "oracles.hpp"

using namespace curvedfield;
using namespace curvedfield::spinfield;
using std::numbers::pi;

namespace {

double wrap(double a) {
  a = std::fmod(a, 2 * pi);
  return a < 0 ? a + 2 * pi : a;
}

double angle_gap(double a, double b) {
  const double d = std::abs(wrap(a) - wrap(b));
  return std::min(d, 2 * pi - d);
}

// Bearing (from north through east) at n of the tangent vector t.
double bearing(const Eigen::Vector3d& n, const Eigen::Vector3d& t) {
  const auto [theta, phi] = oracle::angles(n);
  const Eigen::Vector3d north(-std::cos(theta) * std::cos(phi), -std::cos(theta) * std::sin(phi), std::sin(theta));
  const Eigen::Vector3d east(-std::sin(phi), std::cos(phi), 0.0);
  return std::atan2(t.dot(east), t.dot(north));
}

// Random symmetric positive semidefinite kernels on an n-point grid away from chi = 0.
SpinKernelSet random_kernels(int s, int l_max, std::size_t n, std::mt19937_64& gen) {
  std::vector<double> chi;
  for (std::size_t i = 0; i < n; ++i) chi.push_back(0.5 + static_cast<double>(i));
  auto k = SpinKernelSet::zeros(s, l_max, chi);
  std::normal_distribution<double> z;
  for (int l = std::abs(s); l <= l_max; ++l) {
    Eigen::MatrixXd A(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) A(i, j) = z(gen);
    k.at(l) = A * A.transpose() / (1.0 + l);
  }
  return k;
}

// Covariance of X = sum a_lm sY_lm with E a_lm(chi1) conj(a_l'm'(chi2)) = delta C_l(chi1, chi2).
std::complex<double> msum_correlation(const SpinKernelSet& k, std::size_t i1, double t1, double p1, std::size_t i2,
                                      double t2, double p2) {
  std::complex<double> r = 0.0;
  for (int l = k.l_min(); l <= k.l_max; ++l) {
    std::complex<double> acc = 0.0;
    for (int m = -l; m <= l; ++m)
      acc += oracle::explicit_spin_harmonic(k.s, l, m, t1, p1) * std::conj(oracle::explicit_spin_harmonic(k.s, l, m, t2, p2));
    r += k.at(l)(i1, i2) * acc;
  }
  return r;
}

double max_kernel_error(const SpinKernelSet& a, const SpinKernelSet& b) {
  double e = 0.0;
  for (int l = a.l_min(); l <= a.l_max; ++l) e = std::max(e, (a.at(l) - b.at(l)).cwiseAbs().maxCoeff());
  return e;
}

}  // namespace

TEST(EulerFrame, Examples) {
  const auto same = euler_frame(0.7, 1.1, 0.7, 1.1);
  EXPECT_NEAR(same.beta, 0.0, 1e-7);
  EXPECT_FALSE(same.angles_defined);
  const auto eq = euler_frame(pi / 2, 0.0, pi / 2, pi / 2);
  EXPECT_NEAR(eq.beta, pi / 2, 1e-15);
  EXPECT_NEAR(eq.alpha, pi / 2, 1e-15);
  EXPECT_NEAR(eq.gamma, pi / 2, 1e-15);
  EXPECT_TRUE(eq.angles_defined);
  for (double t : {0.1, 1.0, 2.5}) EXPECT_NEAR(euler_frame(0.0, 0.0, t, 0.0).beta, t, 1e-14);
  const auto anti = euler_frame(0.4, 0.3, pi - 0.4, 0.3 + pi);
  EXPECT_NEAR(anti.beta, pi, 1e-7);
  EXPECT_FALSE(anti.angles_defined);
}

TEST(EulerFrame, MatchesSphericalTriangleBearings) {
  std::mt19937_64 gen(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double t1 = std::acos(2 * u(gen) - 1), p1 = 2 * pi * u(gen);
    const double t2 = std::acos(2 * u(gen) - 1), p2 = 2 * pi * u(gen);
    const Eigen::Vector3d n1 = oracle::direction(t1, p1), n2 = oracle::direction(t2, p2);
    const auto f = euler_frame(t1, p1, t2, p2);
    EXPECT_NEAR(f.beta, std::acos(std::clamp(n1.dot(n2), -1.0, 1.0)), 1e-12);
    const double alpha = bearing(n1, n2 - n1.dot(n2) * n1);
    const double arrive = bearing(n2, -(n1 - n1.dot(n2) * n2));
    EXPECT_LT(angle_gap(f.alpha, alpha), 1e-10);
    EXPECT_LT(angle_gap(f.gamma, pi - arrive), 1e-10);
  }
}

TEST(SpinCorrelation, MatchesModeSum) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = -3; s <= 3; ++s) {
    const auto k = random_kernels(s, 7, 2, gen);
    for (int trial = 0; trial < 10; ++trial) {
      const double t1 = std::acos(2 * u(gen) - 1), p1 = 2 * pi * u(gen);
      const double t2 = std::acos(2 * u(gen) - 1), p2 = 2 * pi * u(gen);
      const auto ref = msum_correlation(k, 0, t1, p1, 1, t2, p2);
      EXPECT_LT(std::abs(spin_correlation(k, 0, t1, p1, 1, t2, p2) - ref), 1e-12 * (1 + std::abs(ref))) << s;
    }
    // Coincident points take the limit value.
    EXPECT_LT(std::abs(spin_correlation(k, 0, 0.8, 0.3, 1, 0.8, 0.3) - msum_correlation(k, 0, 0.8, 0.3, 1, 0.8, 0.3)),
              1e-12);
  }
}

TEST(SpinCorrelation, ScalarReducesToLegendre) {
  std::mt19937_64 gen(6);
  const auto k = random_kernels(0, 10, 2, gen);
  for (double beta : {0.0, 0.3, 1.4, 2.9, pi}) {
    double ref = 0.0, coincident = 0.0;
    for (int l = 0; l <= 10; ++l) {
      ref += k.at(l)(0, 1) * (2 * l + 1) / (4 * pi) * oracle::legendre(l, std::cos(beta));
      coincident += k.at(l)(0, 1) * (2 * l + 1) / (4 * pi);
    }
    const auto r = spin_correlation(k, 0, 0.0, 0.0, 1, beta, 0.0);
    EXPECT_NEAR(r.real(), ref, 1e-13);
    EXPECT_EQ(r.imag(), 0.0);
    if (beta == 0.0) {
      EXPECT_NEAR(r.real(), coincident, 1e-13);
    }
  }
}

TEST(SpinCorrelation, HermitianSymmetry) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s <= 3; ++s) {
    const auto k = random_kernels(s, 6, 3, gen);
    for (int trial = 0; trial < 20; ++trial) {
      const double t1 = std::acos(2 * u(gen) - 1), p1 = 2 * pi * u(gen);
      const double t2 = std::acos(2 * u(gen) - 1), p2 = 2 * pi * u(gen);
      const auto a = spin_correlation(k, 0, t1, p1, 2, t2, p2);
      const auto b = spin_correlation(k, 2, t2, p2, 0, t1, p1);
      EXPECT_LT(std::abs(a - std::conj(b)), 1e-12 * (1 + std::abs(a)));
    }
  }
}

TEST(SpinCorrelation, RotationInvariance) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z;
  for (int s = 0; s <= 3; ++s) {
    const auto k = random_kernels(s, 8, 2, gen);
    for (int trial = 0; trial < 20; ++trial) {
      const double t1 = std::acos(2 * u(gen) - 1), p1 = 2 * pi * u(gen);
      const double t2 = std::acos(2 * u(gen) - 1), p2 = 2 * pi * u(gen);
      const auto ref = spin_correlation(k, 0, t1, p1, 1, t2, p2);
      const Eigen::Matrix3d g = oracle::rotation({z(gen), z(gen), z(gen)}, 2 * pi * u(gen));
      const auto [a1, b1] = oracle::angles(g * oracle::direction(t1, p1));
      const auto [a2, b2] = oracle::angles(g * oracle::direction(t2, p2));
      const auto rotated = spin_correlation(k, 0, a1, b1, 1, a2, b2);
      if (s == 0) {
        EXPECT_LT(std::abs(rotated - ref), 1e-10);
      } else {
        EXPECT_LT(std::abs(std::abs(rotated) - std::abs(ref)), 1e-10);
      }
      const double spin = 2 * pi * u(gen);
      EXPECT_LT(std::abs(spin_correlation(k, 0, t1, p1 + spin, 1, t2, p2 + spin) - ref), 1e-10);
    }
  }
}

TEST(RecoverKernels, RoundtripAllSpins) {
  std::mt19937_64 gen(9);
  for (int s = 0; s <= 3; ++s) {
    for (int L : {s, 5, 16}) {
      if (L < s) continue;
      const auto k = random_kernels(s, L, 3, gen);
      const auto beta = beta_quadrature(2 * L + 2);
      const auto back = recover_kernels(sample_zonal_correlation(k, beta), beta, s, L, k.chi);
      EXPECT_LT(max_kernel_error(k, back), 1e-8) << "s=" << s << " L=" << L;
    }
  }
}

TEST(RecoverKernels, ZeroAndSingleDegree) {
  const std::vector<double> chi{1.0, 2.0};
  const auto beta = beta_quadrature(24);
  const auto zero = recover_kernels(std::vector<std::complex<double>>(4 * 24), beta, 2, 10, chi);
  for (int l = 2; l <= 10; ++l) EXPECT_EQ(zero.at(l).cwiseAbs().maxCoeff(), 0.0);
  auto single = SpinKernelSet::zeros(2, 10, chi);
  single.at(6) << 2.0, 0.5, 0.5, 1.0;
  const auto back = recover_kernels(sample_zonal_correlation(single, beta), beta, 2, 10, chi);
  for (int l = 2; l <= 10; ++l) {
    if (l == 6) {
      EXPECT_LT((back.at(l) - single.at(l)).cwiseAbs().maxCoeff(), 1e-12);
    } else {
      EXPECT_LT(back.at(l).cwiseAbs().maxCoeff(), 1e-12) << l;
    }
  }
}

TEST(RecoverKernels, RejectsCoarseGrid) {
  const auto beta = beta_quadrature(9);
  EXPECT_THROW(recover_kernels(std::vector<std::complex<double>>(9), beta, 0, 5, {1.0}), domain_error);
  EXPECT_THROW(recover_kernels(std::vector<std::complex<double>>(9), beta, 3, 2, {1.0}), domain_error);
}

TEST(SynthesizeSpin, ZeroKernelsGiveZeroField) {
  const auto k = SpinKernelSet::zeros(2, 6, {0.5, 1.0});
  const auto f = synthesize_spin(k, {0.3, 1.2}, {0.0, 2.0}, 11);
  for (const auto& v : f.values) EXPECT_EQ(v, std::complex<double>(0.0));
}

TEST(SynthesizeSpin, ValuesMatchCoefficientExpansion) {
  std::mt19937_64 gen(10);
  const auto k = random_kernels(2, 5, 2, gen);
  const std::vector<double> theta{0.2, 1.3, 2.8}, phi{0.0, 1.7};
  const auto f = synthesize_spin(k, theta, phi, 3);
  for (int l = 0; l < 2; ++l)
    for (int m = -l; m <= l; ++m) EXPECT_EQ(f.coefficients.at(l, m, 0), std::complex<double>(0.0));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < theta.size(); ++j)
      for (std::size_t q = 0; q < phi.size(); ++q) {
        std::complex<double> ref = 0.0;
        for (int l = 2; l <= 5; ++l)
          for (int m = -l; m <= l; ++m)
            ref += f.coefficients.at(l, m, i) * oracle::explicit_spin_harmonic(2, l, m, theta[j], phi[q]);
        EXPECT_LT(std::abs(f.at(i, j, q) - ref), 1e-12);
      }
}

TEST(SynthesizeSpin, DeterministicAcrossThreads) {
  std::mt19937_64 gen(12);
  const auto k = random_kernels(1, 12, 3, gen);
  const std::vector<double> theta{0.2, 1.0, 2.0}, phi{0.0, 1.0, 2.0, 3.0};
  const auto a = synthesize_spin(k, theta, phi, 99, 1);
  EXPECT_EQ(a.values, synthesize_spin(k, theta, phi, 99, 3).values);
  EXPECT_NE(a.values, synthesize_spin(k, theta, phi, 100, 1).values);
  EXPECT_EQ(a.seed, 99u);
  EXPECT_EQ(a.l_max, 12);
}

TEST(SynthesizeSpin, KernelValidation) {
  auto k = SpinKernelSet::zeros(0, 3, {0.5, 1.0});
  k.at(2) << 1.0, 2.0, 2.0, 1.0;
  try {
    synthesize_spin(k, {0.5}, {0.0}, 1);
    FAIL() << "expected domain_error";
  } catch (const domain_error& e) {
    EXPECT_NE(std::string(e.what()).find("l=2"), std::string::npos);
  }
  k.at(2) << 1.0, 1.0, 1.0, 1.0 - 1e-14;  // roundoff-indefinite, tolerated
  EXPECT_NO_THROW(synthesize_spin(k, {0.5}, {0.0}, 1));
  k.at(2) << 1.0, 0.5, 0.4, 1.0;
  EXPECT_THROW(synthesize_spin(k, {0.5}, {0.0}, 1), domain_error);
  auto origin = SpinKernelSet::zeros(0, 2, {0.0, 1.0});
  origin.at(0) << 1.0, 0.5, 0.5, 1.0;
  EXPECT_NO_THROW(synthesize_spin(origin, {0.5}, {0.0}, 1));
  origin.at(1) << 0.1, 0.0, 0.0, 1.0;
  EXPECT_THROW(synthesize_spin(origin, {0.5}, {0.0}, 1), domain_error);
  auto inf = SpinKernelSet::zeros(0, 1, {1.0});
  inf.at(1)(0, 0) = INFINITY;
  EXPECT_THROW(synthesize_spin(inf, {0.5}, {0.0}, 1), domain_error);
}

TEST(SynthesizeSpin, OriginCarriesNoSpinContent) {
  auto k = SpinKernelSet::zeros(1, 4, {0.0, 1.0});
  for (int l = 1; l <= 4; ++l) k.at(l) << 0.0, 0.0, 0.0, 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto f = synthesize_spin(k, {0.3, 2.0}, {0.0, 1.0}, seed);
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t q = 0; q < 2; ++q) {
        EXPECT_EQ(f.at(0, j, q), std::complex<double>(0.0));
        EXPECT_NE(f.at(1, j, q), std::complex<double>(0.0));
      }
  }
}

// Monte Carlo: point variance, coefficient covariance and the correlation at five pairs.
TEST(SpinMonteCarlo, SecondMomentsMatch) {
  const int s = 2;
  const std::size_t N = 2000;
  std::mt19937_64 gen(13);
  const auto k = random_kernels(s, 6, 2, gen);
  auto single = SpinKernelSet::zeros(s, s, {1.0});
  single.at(s)(0, 0) = 1.0;

  const std::vector<double> theta{0.3, 0.9, 1.6, 2.4}, phi{0.0, 2.0};
  // (chi index, theta, phi) pairs over the grid above.
  const std::vector<std::array<std::size_t, 6>> pairs{
      {0, 0, 0, 1, 0, 0}, {0, 0, 0, 0, 1, 1}, {0, 1, 0, 1, 2, 1}, {1, 0, 1, 1, 3, 0}, {0, 2, 1, 1, 3, 1}};
  std::vector<std::complex<double>> sum(pairs.size()), sq_re(pairs.size()), sq_im(pairs.size());
  double var_sum = 0.0, var_sq = 0.0;
  std::complex<double> same = 0.0, cross = 0.0, other = 0.0;
  double same_sq = 0.0, cross_sq = 0.0, other_sq = 0.0;
  for (std::uint64_t seed = 1; seed <= N; ++seed) {
    const auto f = synthesize_spin(k, theta, phi, seed);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& q = pairs[p];
      const auto v = f.at(q[0], q[1], q[2]) * std::conj(f.at(q[3], q[4], q[5]));
      sum[p] += v;
      sq_re[p] += v.real() * v.real();
      sq_im[p] += v.imag() * v.imag();
    }
    const auto c1 = f.coefficients.at(3, 1, 0) * std::conj(f.coefficients.at(3, 1, 1));
    const auto c2 = f.coefficients.at(3, 1, 0) * std::conj(f.coefficients.at(4, 1, 1));
    const auto c3 = f.coefficients.at(3, 1, 0) * std::conj(f.coefficients.at(3, -2, 0));
    same += c1;
    cross += c2;
    other += c3;
    same_sq += std::norm(c1);
    cross_sq += std::norm(c2);
    other_sq += std::norm(c3);
    const double x = std::norm(synthesize_spin(single, {1.1}, {0.4}, seed).values[0]);
    var_sum += x;
    var_sq += x * x;
  }
  const double n = static_cast<double>(N);
  const auto se = [&](double s2, double m) { return std::sqrt((s2 / n - m * m) / n); };
  const double var = var_sum / n;
  EXPECT_NEAR(var, (2 * s + 1) / (4 * pi), 5 * se(var_sq, var));
  EXPECT_NEAR(std::abs(same / n - k.at(3)(0, 1)), 0.0, 5 * std::sqrt(same_sq / n / n));
  EXPECT_NEAR(std::abs(cross / n), 0.0, 5 * std::sqrt(cross_sq / n / n));
  EXPECT_NEAR(std::abs(other / n), 0.0, 5 * std::sqrt(other_sq / n / n));
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& q = pairs[p];
    const auto ref = spin_correlation(k, q[0], theta[q[1]], phi[q[2]], q[3], theta[q[4]], phi[q[5]]);
    const auto mean = sum[p] / n;
    EXPECT_NEAR(mean.real(), ref.real(), 5 * se(sq_re[p].real(), mean.real())) << p;
    EXPECT_NEAR(mean.imag(), ref.imag(), 5 * se(sq_im[p].real(), mean.imag())) << p;
  }
}

TEST(LensingLadder, MultiplierExamples) {
  for (auto o : {LensingObservable::convergence, LensingObservable::flexion_F, LensingObservable::shear,
                 LensingObservable::flexion_G})
    EXPECT_EQ(lensing_multiplier(o, 0).value(), 0.0);
  EXPECT_EQ(lensing_multiplier(LensingObservable::convergence, 1).value(), -1.0);
  EXPECT_EQ(lensing_multiplier(LensingObservable::shear, 1).value(), 0.0);
  EXPECT_EQ(lensing_multiplier(LensingObservable::flexion_G, 1).value(), 0.0);
  EXPECT_DOUBLE_EQ(lensing_multiplier(LensingObservable::shear, 2).value(), 0.5 * std::sqrt(24.0));
  // Against the open-model prefactor 2 sqrt(pi), the convergence term is -sqrt(pi) l(l+1).
  for (int l = 1; l <= 5; ++l)
    EXPECT_NEAR(2 * std::sqrt(pi) * lensing_multiplier(LensingObservable::convergence, l).value(),
                -std::sqrt(pi) * l * (l + 1), 1e-12);
}

TEST(LensingLadder, MultipliersMatchFactorialProducts) {
  using oracle::BigInt;
  for (int l = 0; l <= 32; ++l) {
    const BigInt L = l;
    const BigInt lap = L * (L + 1);
    // 4 * multiplier^2 for each observable.
    const BigInt kappa = lap * lap;
    const BigInt F = lap * lap * lap;
    const BigInt gamma = l >= 2 ? oracle::big_factorial(l + 2) / oracle::big_factorial(l - 2) : BigInt(0);
    const BigInt G = l >= 3 ? lap * (L - 1) * (L + 2) * (L - 2) * (L + 3) : BigInt(0);
    const std::pair<LensingObservable, BigInt> cases[] = {{LensingObservable::convergence, kappa},
                                                           {LensingObservable::flexion_F, F},
                                                           {LensingObservable::shear, gamma},
                                                           {LensingObservable::flexion_G, G}};
    for (const auto& [o, ref] : cases) {
      const auto m = lensing_multiplier(o, l);
      EXPECT_EQ(BigInt(m.factor) * m.factor * m.radicand, ref) << l;
      if (ref != 0) {
        const bool negative = o == LensingObservable::convergence || o == LensingObservable::flexion_F;
        EXPECT_EQ(m.sign, negative ? -1 : 1);
      }
    }
    EXPECT_EQ(lensing_multiplier(LensingObservable::convergence, l).value(), -l * (l + 1) / 2.0);
  }
}

TEST(LensingLadder, AppliesMultipliers) {
  auto psi = SpinCoefficients::zeros(0, 6, 2);
  std::mt19937_64 gen(14);
  std::normal_distribution<double> z;
  for (auto& v : psi.values) v = {z(gen), z(gen)};
  const auto set = lensing_ladder(psi);
  for (auto o : {LensingObservable::convergence, LensingObservable::flexion_F, LensingObservable::shear,
                 LensingObservable::flexion_G}) {
    const auto& c = set.get(o);
    EXPECT_EQ(c.s, spin_of(o));
    for (int l = 0; l <= 6; ++l)
      for (int m = -l; m <= l; ++m)
        for (std::size_t i = 0; i < 2; ++i) {
          const auto expect = l < spin_of(o) ? 0.0 : lensing_multiplier(o, l).value() * psi.at(l, m, i);
          EXPECT_EQ(c.at(l, m, i), expect);
        }
  }
  auto bad = SpinCoefficients::zeros(1, 3, 1);
  EXPECT_THROW(lensing_ladder(bad), domain_error);
  psi.at(3, 0, 0) = INFINITY;
  EXPECT_THROW(lensing_ladder(psi), convergence_error);
}

TEST(LensingLadder, KernelsScaleBySquaredMultiplier) {
  std::mt19937_64 gen(15);
  const auto psi = random_kernels(0, 8, 2, gen);
  const auto shear = ladder_kernels(psi, LensingObservable::shear);
  EXPECT_EQ(shear.s, 2);
  for (int l = 2; l <= 8; ++l) {
    const double m = lensing_multiplier(LensingObservable::shear, l).value();
    EXPECT_LT((shear.at(l) - m * m * psi.at(l)).cwiseAbs().maxCoeff(), 1e-12 * m * m);
  }
  EXPECT_THROW(ladder_kernels(random_kernels(1, 4, 1, gen), LensingObservable::shear), domain_error);
}

TEST(Analyze, InvertsEvaluate) {
  std::mt19937_64 gen(16);
  std::normal_distribution<double> z;
  for (int s = -2; s <= 3; ++s) {
    const int L = 9;
    auto a = SpinCoefficients::zeros(s, L, 2);
    for (int l = std::abs(s); l <= L; ++l)
      for (int m = -l; m <= l; ++m)
        for (std::size_t i = 0; i < 2; ++i) a.at(l, m, i) = {z(gen), z(gen)};
    const auto rule = beta_quadrature(L + 1);
    const std::size_t n_phi = 2 * L + 1;
    std::vector<double> phi;
    for (std::size_t k = 0; k < n_phi; ++k) phi.push_back(2 * pi * k / n_phi);
    const auto values = evaluate(a, rule.nodes, phi);
    const auto back = analyze(s, L, 2, values, rule, n_phi);
    double err = 0.0;
    for (std::size_t q = 0; q < a.values.size(); ++q) err = std::max(err, std::abs(a.values[q] - back.values[q]));
    EXPECT_LT(err, 1e-12) << s;
  }
  EXPECT_THROW(analyze(0, 4, 1, std::vector<std::complex<double>>(5 * 8), beta_quadrature(5), 8), domain_error);
}
