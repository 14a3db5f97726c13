// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "curvedfield/cli/commands.hpp"
#include "curvedfield/cosmology.hpp"
#include "curvedfield/randfield/correlation.hpp"
#include "curvedfield/randfield/estimate.hpp"
#include "curvedfield/randfield/synthesis.hpp"
#include "curvedfield/sft.hpp"
#include "curvedfield/specfun/harmonics.hpp"
#include "curvedfield/specfun/radial.hpp"
#include "curvedfield/specfun/wigner.hpp"
#include "curvedfield/spinfield.hpp"
#include "oracles.hpp"

using namespace curvedfield;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

Outcome radial_residuals() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> wave(0.2, 5.0);
  std::uniform_int_distribution<int> degree(0, 8), shift(0, 10);
  const auto flat = Geometry::flat(), open = Geometry::open(-1.0), closed = Geometry::closed(1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int l = degree(gen);
    const double k = wave(gen);
    worst = std::max(worst, oracle::helmholtz_residual(0.0, k, l, [&](double x) { return specfun::radial(flat, k, l, x); },
                                                       0.1, 10.0));
    worst = std::max(worst, oracle::helmholtz_residual(-1.0, k, l, [&](double x) { return specfun::radial(open, k, l, x); },
                                                       0.1, 5.0));
    const double kc = closed.closed_wavenumber(l + shift(gen));
    worst = std::max(worst, oracle::helmholtz_residual(1.0, kc, l, [&](double x) { return specfun::radial(closed, kc, l, x); },
                                                       0.1, pi - 0.1));
  }
  const double t = seconds_since(t0);
  return {worst < 1e-6 && t < 10.0, "max relative residual " + fmt(worst) + ", " + fmt(t) + " s"};
}

Outcome closed_forms() {
  double flat = 0.0, open = 0.0, closed = 0.0;
  for (double k : {0.05, 0.7, 3.0, 12.0})
    for (double chi : {0.01, 0.4, 2.0, 9.0}) {
      flat = std::max(flat, std::abs(specfun::radial(Geometry::flat(), k, 0, chi) -
                                     std::sqrt(2 / pi) * oracle::spherical_bessel(0, k * chi)));
      for (double K : {-1.0, -0.3}) {
        const double a = std::sqrt(-K);
        open = std::max(open, std::abs(specfun::radial(Geometry::open(K), k, 0, chi) -
                                       a * std::sin(k * chi) / (k * std::sinh(a * chi))));
      }
    }
  for (double K : {1.0, 2.5}) {
    const auto g = Geometry::closed(K);
    for (int w = 0; w <= 20; ++w)
      for (double u : {0.05, 0.3, 0.6, 0.95}) {
        const double chi = u * g.chi_max();
        const double r = std::sqrt(K) * chi;
        closed = std::max(closed, std::abs(specfun::radial(g, g.closed_wavenumber(w), 0, chi) -
                                           std::sin((w + 1) * r) / ((w + 1) * std::sin(r))));
      }
  }
  return {flat < 1e-12 && open < 1e-10 && closed < 1e-10,
          "flat " + fmt(flat) + ", open " + fmt(open) + ", closed " + fmt(closed)};
}

double eth_error(int s, int l, int m, int n) {
  std::vector<double> theta;
  for (int j = 0; j < n; ++j) theta.push_back(pi * (j + 0.5) / n);
  const auto in = specfun::SpinSection::sample(s, theta, n, [&](double t, double p) { return specfun::spin_harmonic(s, l, m, t, p); });
  const auto out = specfun::eth_numeric(in, l);
  const double c = specfun::eth_ladder(s, l, specfun::Ladder::raise);
  double worst = 0.0;
  for (std::size_t j = 0; j < out.theta.size(); ++j)
    for (std::size_t k = 0; k < out.n_phi; ++k)
      worst = std::max(worst, std::abs(out.at(j, k) - c * specfun::spin_harmonic(s + 1, l, m, out.theta[j], out.phi(k))));
  return worst;
}

Outcome harmonic_algebra() {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> angle(0.0, 2 * pi);
  double unitary = 0.0;
  for (int l = 0; l <= 8; ++l)
    for (int trial = 0; trial < 3; ++trial) {
      const double a = angle(gen), b = angle(gen) / 2, c = angle(gen);
      Eigen::MatrixXcd D(2 * l + 1, 2 * l + 1);
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n) D(m + l, n + l) = specfun::wigner_D(l, m, n, a, b, c);
      unitary = std::max(unitary, (D * D.adjoint() - Eigen::MatrixXcd::Identity(2 * l + 1, 2 * l + 1)).cwiseAbs().maxCoeff());
    }
  // Gram matrix of all (l, m), l <= 16, on a product rule exact for the products.
  const auto rule = quad::gauss_legendre(24);
  const int n_phi = 40;
  double ortho = 0.0;
  for (int s = -3; s <= 3; ++s) {
    const int L = 16, l0 = std::abs(s);
    const int count = (L + 1) * (L + 1) - l0 * l0;
    Eigen::MatrixXcd M(static_cast<Eigen::Index>(rule.size()) * n_phi, count);
    Eigen::VectorXd w(M.rows());
    for (std::size_t j = 0; j < rule.size(); ++j)
      for (int k = 0; k < n_phi; ++k) {
        const auto row = static_cast<Eigen::Index>(j) * n_phi + k;
        w(row) = rule.weights[j] * 2 * pi / n_phi;
        int col = 0;
        for (int l = l0; l <= L; ++l)
          for (int m = -l; m <= l; ++m)
            M(row, col++) = specfun::spin_harmonic(s, l, m, std::acos(rule.nodes[j]), 2 * pi * k / n_phi);
      }
    const Eigen::MatrixXcd G = M.adjoint() * w.asDiagonal() * M;
    ortho = std::max(ortho, (G - Eigen::MatrixXcd::Identity(count, count)).cwiseAbs().maxCoeff());
  }
  double order = INFINITY;
  for (const auto& c : {std::array{0, 1, 0}, std::array{0, 2, 1}, std::array{1, 3, -2}, std::array{-1, 2, 2}}) {
    const double e1 = eth_error(c[0], c[1], c[2], 64), e2 = eth_error(c[0], c[1], c[2], 128),
                 e3 = eth_error(c[0], c[1], c[2], 256);
    order = std::min({order, std::log2(e1 / e2), std::log2(e2 / e3)});
  }
  return {unitary < 1e-10 && ortho < 1e-10 && order >= 1.9,
          "unitarity " + fmt(unitary) + ", orthonormality " + fmt(ortho) + ", eth order " + fmt(order)};
}

Outcome transform_roundtrip() {
  struct Case {
    Geometry g;
    double chi_max, k_max, width;
    int omega_max;
    std::vector<std::size_t> panels;
  };
  const std::size_t order = 2;
  const Case cases[] = {{Geometry::flat(), 10.0, 9.0, 1.0, 0, {20, 22, 24, 26}},
                        {Geometry::open(-1.0), 10.0, 9.0, 1.0, 0, {20, 22, 24, 26}},
                        {Geometry::closed(1.0), pi, 0.0, 0.3, 40, {28, 32, 36}}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    std::vector<double> err;
    for (auto n : c.panels) {
      const auto chi = quad::gauss_legendre_panels(0.0, c.chi_max, n, order);
      const auto p = sft::sample_profile(c.g, chi, [&](double x) { return std::exp(-0.5 * x * x / (c.width * c.width)); });
      const auto grid = c.g.kind() == CurvatureKind::closed
                            ? sft::SpectralGrid::modes(c.omega_max)
                            : sft::SpectralGrid::continuous(quad::gauss_legendre_panels(0.0, c.k_max, n, order));
      sft::TransformOptions opt;
      opt.tail_tolerance = 1.0;
      const auto back = sft::inverse_isotropic(sft::forward_isotropic(p, grid, opt), chi, opt);
      double e = 0.0;
      for (std::size_t i = 0; i < chi.size(); ++i) e = std::max(e, std::abs(back.values[i] - p.values[i]));
      err.push_back(e);
    }
    double rate = INFINITY;
    for (std::size_t i = 1; i < err.size(); ++i)
      rate = std::min(rate, std::log(err[i - 1] / err[i]) / std::log(double(c.panels[i]) / c.panels[i - 1]));
    ok = ok && err.back() < 1e-6 && rate >= 2.0 * order;
    detail += std::string(detail.empty() ? "" : "; ") + to_string(c.g.kind()) + " " + fmt(err.back()) + " (order " +
              fmt(rate) + ")";
  }
  return {ok, detail};
}

Outcome monte_carlo_scalar() {
  using namespace randfield;
  const auto t0 = std::chrono::steady_clock::now();
  const auto run = [](const PowerSpectrum& P, const SynthesisConfig& c, const FieldGrid& grid, std::uint64_t seed,
                      double& worst_z) {
    const Synthesizer s(P, c, grid);
    std::vector<PointPair> pairs;
    for (std::size_t j = 1; j < grid.theta.size(); ++j) pairs.push_back({{0, 0, 0}, {0, j, 0}});
    const auto est = estimate_correlation([&](std::uint64_t q) { return s.realize(q); }, pairs, 2000, seed);
    bool ok = true;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double ref = analytic_correlation(P, grid_distance(P.geometry(), grid, pairs[p]));
      const double z = std::abs(est.mean[p].real() - ref) / est.stderr_re[p];
      worst_z = std::max(worst_z, z);
      ok = ok && z < 5.0;
    }
    return ok;
  };
  SynthesisConfig flat;
  flat.l_max = 24;
  flat.k_order = 16;
  flat.k_panels = 4;
  flat.k_max = 3.0;
  flat.field_kind = FieldKind::real;
  double z_flat = 0.0, z_closed = 0.0;
  const bool ok_flat = run(PowerSpectrum(Geometry::flat(), GaussianBump{1.0, 1.0, 0.25}), flat,
                           {{1.5}, {0.0, 0.3, 0.6, 1.0, 1.5, 2.2}, {0.0}}, 1000, z_flat);
  SynthesisConfig closed;
  closed.l_max = 8;
  closed.omega_max = 8;
  closed.field_kind = FieldKind::real;
  const bool ok_closed =
      run(PowerSpectrum(Geometry::closed(1.0), DiscreteModes{{1, 0.5, 0.3, 0.2, 0.1, 0.08, 0.05, 0.03, 0.02}}), closed,
          {{1.2}, {0.0, 0.4, 0.9, 1.5, 2.3, 3.0}, {0.0}}, 5000, z_closed);
  const double t = seconds_since(t0);
  return {ok_flat && ok_closed && t < 300.0,
          "max |z| flat " + fmt(z_flat) + ", closed " + fmt(z_closed) + " over 5 lags, " + fmt(t) + " s"};
}

Outcome spin_roundtrip() {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> z;
  double worst = 0.0;
  for (int s = 0; s <= 3; ++s) {
    const int L = 16;
    auto k = spinfield::SpinKernelSet::zeros(s, L, {0.5, 1.0, 1.5});
    for (int l = s; l <= L; ++l) {
      Eigen::MatrixXd A(3, 3);
      for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = z(gen);
      k.at(l) = A * A.transpose() / (1.0 + l);
    }
    const auto beta = spinfield::beta_quadrature(2 * L + 2);
    const auto back = spinfield::recover_kernels(spinfield::sample_zonal_correlation(k, beta), beta, s, L, k.chi);
    for (int l = s; l <= L; ++l) worst = std::max(worst, (back.at(l) - k.at(l)).cwiseAbs().maxCoeff());
  }
  // Kernels vanishing at chi = 0 for l != 0: the coefficients there must be exactly zero.
  bool boundary = true;
  for (int s = 0; s <= 3; ++s) {
    auto k = spinfield::SpinKernelSet::zeros(s, 8, {0.0, 0.7, 1.4});
    for (int l = s; l <= 8; ++l) {
      const auto h = [&](double x) { return l == 0 ? 1.0 : 1.0 - std::exp(-x); };
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          k.at(l)(i, j) = h(k.chi[i]) * h(k.chi[j]) * std::exp(-0.5 * std::pow(k.chi[i] - k.chi[j], 2)) / (1.0 + l);
    }
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto f = spinfield::synthesize_spin(k, {0.3, 1.5, 2.8}, {0.0, 2.0}, seed);
      for (int l = std::max(1, s); l <= 8; ++l)
        for (int m = -l; m <= l; ++m) boundary = boundary && f.coefficients.at(l, m, 0) == std::complex<double>(0.0);
      if (s > 0)
        for (std::size_t q = 0; q < 6; ++q) boundary = boundary && f.values[q] == std::complex<double>(0.0);
    }
  }
  return {worst < 1e-8 && boundary,
          "max kernel error " + fmt(worst) + ", chi=0 boundary " + (boundary ? "exact" : "violated")};
}

Outcome ladder_integers() {
  using oracle::BigInt;
  using spinfield::LensingObservable;
  int mismatches = 0;
  for (int l = 0; l <= 32; ++l) {
    const BigInt L = l, lap = L * (L + 1);
    const std::pair<LensingObservable, BigInt> cases[] = {
        {LensingObservable::convergence, lap * lap},
        {LensingObservable::flexion_F, lap * lap * lap},
        {LensingObservable::shear, l >= 2 ? oracle::big_factorial(l + 2) / oracle::big_factorial(l - 2) : BigInt(0)},
        {LensingObservable::flexion_G, l >= 3 ? lap * (L - 1) * (L + 2) * (L - 2) * (L + 3) : BigInt(0)}};
    for (const auto& [o, ref] : cases) {
      const auto m = spinfield::lensing_multiplier(o, l);
      if (BigInt(m.factor) * m.factor * m.radicand != ref) ++mismatches;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 4 observables, l <= 32"};
}

Outcome background() {
  const auto t = cosmology::reference_params();
  const double residual = t.closure_residual();
  const double expect = 1.0 - (0.315 + 0.685 + 4.9e-5 - 0.0010);
  const auto eds = cosmology::make_params(70.0, 1.0, 0.0, 0.0);
  const double dh = cosmology::speed_of_light / 70.0;
  double worst = 0.0;
  for (int i = 1; i <= 200; ++i) {
    const double z = 100.0 * i / 200.0;
    const double chi = 2 * dh * (1 - 1 / std::sqrt(1 + z));
    const double tl = 2.0 / 3.0 * (1 - std::pow(1 + z, -1.5));
    worst = std::max(worst, std::abs(cosmology::comoving_distance(eds, z, {1e-12, 0.0}) / chi - 1));
    worst = std::max(worst, std::abs(cosmology::lookback_time(eds, z, {1e-12, 0.0}).hubble_units / tl - 1));
  }
  const bool zero = cosmology::comoving_distance(eds, 0.0) == 0.0 && cosmology::lookback_time(eds, 0.0).hubble_units == 0.0;
  return {std::abs(residual - expect) < 1e-15 && worst < 1e-10 && zero,
          "reference closure residual " + fmt(residual) + ", EdS max relative error " + fmt(worst)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("curvedfield_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const fs::path cfg = dir / "synth.conf";
  std::ofstream(cfg) << "geometry.K = 0\nspectrum.type = gaussian_bump\nspectrum.k0 = 1\nspectrum.sigma = 0.25\n"
                        "synthesis.l_max = 24\nsynthesis.k_max = 3\nsynthesis.field = real\n"
                        "grid.chi = 0, 0.5, 1, 1.5, 2\ngrid.n_theta = 16\ngrid.n_phi = 32\nrun.seed = 7\n";
  std::vector<std::string> payloads;
  std::string errors;
  for (unsigned threads : {1u, 2u, 8u}) {
    cli::Options opt;
    opt.command = "synthesize";
    opt.config_path = cfg.string();
    opt.out_dir = (dir / std::to_string(threads)).string();
    opt.threads = threads;
    std::ostringstream log, err;
    if (cli::run(opt, log, err) != cli::exit_ok) errors += err.str();
    std::ifstream in(fs::path(opt.out_dir) / "field.cfield", std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    payloads.push_back(bytes.str().size() > cli::header_size ? bytes.str().substr(cli::header_size) : "");
  }
  fs::remove_all(dir);
  const bool same = errors.empty() && !payloads[0].empty() && payloads[0] == payloads[1] && payloads[0] == payloads[2];
  return {same, errors.empty() ? std::to_string(payloads[0].size()) + "-byte payloads at 1/2/8 threads " +
                                     (same ? "identical" : "differ")
                               : errors};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"radial ODE residuals", radial_residuals},
      {"radial closed forms", closed_forms},
      {"harmonic algebra", harmonic_algebra},
      {"transform roundtrip", transform_roundtrip},
      {"Monte Carlo scalar field", monte_carlo_scalar},
      {"spin kernel roundtrip", spin_roundtrip},
      {"lensing ladder", ladder_integers},
      {"background", background},
      {"determinism", determinism},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
