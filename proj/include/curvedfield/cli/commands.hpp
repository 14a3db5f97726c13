#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "curvedfield/cli/config.hpp"
#include "curvedfield/cli/fieldfile.hpp"
#include "curvedfield/cosmology.hpp"
#include "curvedfield/hash.hpp"
#include "curvedfield/parallel.hpp"
#include "curvedfield/randfield/correlation.hpp"
#include "curvedfield/randfield/estimate.hpp"
#include "curvedfield/randfield/spectrum.hpp"
#include "curvedfield/randfield/synthesis.hpp"
#include "curvedfield/sft.hpp"
#include "curvedfield/spinfield.hpp"

namespace curvedfield::cli {

inline constexpr const char* library_version = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numeric = 3, exit_io = 4 };

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  unsigned threads = 1;
  std::optional<double> tolerance;
};

namespace detail {

inline std::string num(double v) { return exact_text(v); }

inline std::string provenance_line(std::uint64_t config_hash, std::uint64_t seed) {
  return std::string("# curvedfield v") + library_version + " config_hash=" + hex64(config_hash) +
         " seed=" + std::to_string(seed) + "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw io_error("write to '" + path.string() + "' failed");
}

inline std::filesystem::path output_dir(const Options& opt) {
  std::error_code ec;
  std::filesystem::create_directories(opt.out_dir, ec);
  if (ec) throw io_error("cannot create output directory '" + opt.out_dir + "': " + ec.message());
  return opt.out_dir;
}

/// Creation time stored in field files; SOURCE_DATE_EPOCH pins it for reproducible output.
inline std::int64_t timestamp_now() {
  if (const char* fixed = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(fixed, &end, 10);
    if (end != fixed && *end == '\0') return v;
  }
  return static_cast<std::int64_t>(std::time(nullptr));
}

inline std::uint64_t config_hash(const Config& cfg) { return fnv1a(cfg.canonical()); }

inline std::uint64_t run_seed(Config& cfg, const Options& opt) {
  if (opt.seed) cfg.set("run.seed", std::to_string(*opt.seed));
  const long long s = cfg.integer_or("run.seed", 0);
  if (s < 0) cfg.fail("run.seed", "must be >= 0");
  return static_cast<std::uint64_t>(s);
}

inline double run_tolerance(Config& cfg, const Options& opt, double fallback) {
  if (opt.tolerance) cfg.set("run.tolerance", exact_text(*opt.tolerance));
  const double t = cfg.number_or("run.tolerance", fallback);
  if (!(t > 0.0) || !std::isfinite(t)) cfg.fail("run.tolerance", "must be positive and finite");
  return t;
}

inline Geometry load_geometry(const Config& cfg) {
  const double K = cfg.number_or("geometry.K", 0.0);
  return cfg.validated("geometry", [&] { return Geometry::from_curvature(K); });
}

inline randfield::PowerSpectrum load_spectrum(const Config& cfg, const Geometry& g) {
  using namespace randfield;
  const std::string type =
      cfg.choice("spectrum.type", "", {"power_law", "gaussian_bump", "tabulated", "modes", "zero"});
  return cfg.validated("spectrum", [&]() -> PowerSpectrum {
    if (type == "power_law") {
      return {g, PowerLaw{cfg.number_or("spectrum.A", 1.0), cfg.number("spectrum.index"),
                          cfg.number_or("spectrum.k_low", 0.0),
                          cfg.number_or("spectrum.k_high", std::numeric_limits<double>::infinity())}};
    }
    if (type == "gaussian_bump") {
      return {g, GaussianBump{cfg.number_or("spectrum.A", 1.0), cfg.number("spectrum.k0"), cfg.number("spectrum.sigma")}};
    }
    if (type == "tabulated") return {g, Tabulated{cfg.numbers("spectrum.k"), cfg.numbers("spectrum.values")}};
    if (type == "modes") return {g, DiscreteModes{cfg.numbers("spectrum.values")}};
    return PowerSpectrum::zero(g);
  });
}

inline randfield::SynthesisConfig load_synthesis(const Config& cfg) {
  randfield::SynthesisConfig s;
  s.l_max = static_cast<int>(cfg.integer_in("synthesis.l_max", s.l_max, 0, specfun::max_degree));
  s.k_order = static_cast<std::size_t>(cfg.integer_in("synthesis.k_order", 16, 1, 256));
  s.k_panels = static_cast<std::size_t>(cfg.integer_in("synthesis.k_panels", 4, 1, 4096));
  s.k_min = cfg.number_or("synthesis.k_min", 0.0);
  s.k_max = cfg.number_or("synthesis.k_max", 0.0);
  s.omega_max = static_cast<int>(cfg.integer_in("synthesis.omega_max", s.omega_max, 0, 100000));
  s.field_kind = cfg.choice("synthesis.field", "complex", {"complex", "real"}) == "real" ? randfield::FieldKind::real
                                                                                         : randfield::FieldKind::complex;
  s.closed_weight = cfg.choice("synthesis.closed_weight", "shifted", {"shifted", "unshifted"}) == "unshifted"
                        ? randfield::ClosedModeWeight::unshifted
                        : randfield::ClosedModeWeight::shifted;
  return s;
}

struct LoadedGrid {
  randfield::FieldGrid grid;
  ThetaRule theta_rule = ThetaRule::gauss_legendre;
};

/// grid.chi is a list; theta is either grid.theta (explicit list) or grid.n_theta
/// Gauss-Legendre nodes in cos(theta); phi has grid.n_phi equispaced nodes.
inline LoadedGrid load_grid(const Config& cfg, const Geometry& g) {
  LoadedGrid out;
  out.grid.chi = cfg.numbers("grid.chi");
  if (cfg.has("grid.theta")) {
    if (cfg.has("grid.n_theta")) cfg.fail("grid.n_theta", "give either grid.theta or grid.n_theta, not both");
    out.grid.theta = cfg.numbers("grid.theta");
    out.theta_rule = ThetaRule::explicit_list;
  } else {
    const auto n = static_cast<std::size_t>(cfg.integer_in("grid.n_theta", 8, 1, 4096));
    out.grid.theta = spinfield::beta_quadrature(n).nodes;
  }
  const auto n_phi = static_cast<std::size_t>(cfg.integer_in("grid.n_phi", 16, 1, 65536));
  for (std::size_t k = 0; k < n_phi; ++k) out.grid.phi.push_back(2.0 * std::numbers::pi * k / n_phi);
  cfg.validated("grid", [&] {
    randfield::detail::check_grid(g, out.grid);
    return 0;
  });
  return out;
}

inline FieldFile to_file(const Geometry& g, const LoadedGrid& lg, const std::vector<std::complex<double>>& values,
                         int spin, std::uint64_t seed, std::uint64_t provenance, bool real_field, int l_max) {
  FieldFile f;
  f.kind = g.kind();
  f.K = g.K();
  f.spin = spin;
  f.seed = seed;
  f.provenance = provenance;
  f.timestamp = timestamp_now();
  f.theta_rule = lg.theta_rule;
  f.real_field = real_field;
  f.l_max = static_cast<std::uint32_t>(l_max);
  f.chi = lg.grid.chi;
  f.theta = lg.grid.theta;
  f.phi = lg.grid.phi;
  f.values = values;
  return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// z, H(z), chi(z), t_L(z) table.
inline void cmd_background(Config& cfg, const Options& opt, std::ostream& log) {
  const cosmology::CosmologyParams table = cosmology::reference_params();
  const double H0 = cfg.number_or("cosmology.H0", table.H0);
  const double omega_M = cfg.number_or("cosmology.omega_M", table.omega_M);
  const double omega_L = cfg.number_or("cosmology.omega_L", table.omega_L);
  const double omega_R = cfg.number_or("cosmology.omega_R", table.omega_R);
  const std::string closure = cfg.choice("cosmology.closure", "solve", {"solve", "exact"});
  const double stated_K = cfg.number_or("cosmology.omega_K", closure == "solve" ? table.omega_K : 0.0);
  if (!(H0 > 0.0) || !std::isfinite(H0)) cfg.fail("cosmology.H0", "must be positive and finite");
  if (!(omega_M >= 0.0) || !std::isfinite(omega_M)) cfg.fail("cosmology.omega_M", "must be finite and >= 0");
  if (!(omega_R >= 0.0) || !std::isfinite(omega_R)) cfg.fail("cosmology.omega_R", "must be finite and >= 0");
  if (!std::isfinite(omega_L)) cfg.fail("cosmology.omega_L", "must be finite");
  if (!std::isfinite(stated_K)) cfg.fail("cosmology.omega_K", "must be finite");
  const double stated_residual = 1.0 - (omega_R + omega_M + stated_K + omega_L);
  const cosmology::CosmologyParams p = cfg.validated("cosmology", [&] {
    return closure == "exact" ? cosmology::make_params(H0, omega_M, omega_L, omega_R, cosmology::ExactCurvature{stated_K})
                              : cosmology::make_params(H0, omega_M, omega_L, omega_R);
  });

  std::vector<double> z;
  if (cfg.has("background.z")) {
    z = cfg.numbers("background.z");
  } else {
    const double z_max = cfg.number_or("background.z_max", 3.0);
    const auto n = cfg.integer_in("background.n_z", 31, 1, 1000000);
    for (long long i = 0; i < n; ++i) z.push_back(n == 1 ? 0.0 : z_max * static_cast<double>(i) / (n - 1));
  }
  for (double v : z)
    if (!(v >= 0.0) || !std::isfinite(v)) cfg.fail("background.z", "redshifts must be finite and >= 0");
  const cosmology::Tolerance tol{detail::run_tolerance(cfg, opt, 1e-10), 0.0};
  cfg.reject_unknown();

  std::ostringstream csv;
  csv << detail::provenance_line(detail::config_hash(cfg), 0);
  csv << "# omega_K=" << detail::num(p.omega_K) << " closure_residual=" << detail::num(stated_residual) << "\n";
  csv << "z,H,chi,t_L\n";
  for (double zi : z) {
    csv << detail::num(zi) << "," << detail::num(cosmology::hubble(p, zi)) << ","
        << detail::num(cosmology::comoving_distance(p, zi, tol)) << ","
        << detail::num(cosmology::lookback_time(p, zi, tol).gyr) << "\n";
  }
  detail::write_text(detail::output_dir(opt) / "background.csv", csv.str());
  log << "background: " << z.size() << " redshifts, Omega_K=" << detail::num(p.omega_K)
      << ", closure residual of the stated parameters " << detail::num(stated_residual) << "\n";
}

/// Isotropic transform of a Gaussian profile and its inverse on the chi grid.
inline void cmd_transform(Config& cfg, const Options& opt, std::ostream& log) {
  using namespace sft;
  const Geometry g = detail::load_geometry(cfg);
  cfg.choice("transform.profile", "gaussian", {"gaussian"});
  const double A = cfg.number_or("transform.amplitude", 1.0);
  const double width = cfg.number_or("transform.width", 1.0);
  if (!(width > 0.0)) cfg.fail("transform.width", "must be positive");
  const double chi_max = cfg.number_or("transform.chi_max", g.kind() == CurvatureKind::closed ? g.chi_max() : 9.0);
  const auto chi_panels = static_cast<std::size_t>(cfg.integer_in("transform.chi_panels", 16, 1, 100000));
  const auto chi_order = static_cast<std::size_t>(cfg.integer_in("transform.chi_order", 8, 1, 256));
  SpectralGrid spectral;
  if (g.kind() == CurvatureKind::closed) {
    spectral = SpectralGrid::modes(static_cast<int>(cfg.integer_in("transform.omega_max", 30, 0, 100000)));
  } else {
    const double k_max = cfg.number_or("transform.k_max", 8.5);
    if (!(k_max > 0.0)) cfg.fail("transform.k_max", "must be positive");
    const auto k_panels = static_cast<std::size_t>(cfg.integer_in("transform.k_panels", 16, 1, 100000));
    const auto k_order = static_cast<std::size_t>(cfg.integer_in("transform.k_order", 8, 1, 256));
    spectral = SpectralGrid::continuous(quad::gauss_legendre_panels(0.0, k_max, k_panels, k_order));
  }
  TransformOptions topt;
  topt.tail_tolerance = detail::run_tolerance(cfg, opt, 1e-8);
  topt.threads = opt.threads;
  const std::uint64_t seed = detail::run_seed(cfg, opt);
  cfg.reject_unknown();

  const quad::Rule chi_rule = cfg.validated("transform", [&] {
    curvedfield::detail::require(chi_max > 0.0 && chi_max <= g.chi_max() * (1.0 + 1e-15),
                                 "chi_max must lie in (0, chi range]");
    return quad::gauss_legendre_panels(0.0, chi_max, chi_panels, chi_order);
  });
  const auto f = [&](double chi) { return A * std::exp(-0.5 * chi * chi / (width * width)); };
  const RadialProfile profile = sample_profile(g, chi_rule, f);
  const Spectrum spectrum = forward_isotropic(profile, spectral, topt);
  const RadialProfile back = inverse_isotropic(spectrum, chi_rule, topt);

  const std::string prov = detail::provenance_line(detail::config_hash(cfg), seed);
  std::ostringstream spec_csv;
  spec_csv << prov << (g.kind() == CurvatureKind::closed ? "omega" : "k") << ",f00\n";
  for (std::size_t q = 0; q < spectrum.k.size(); ++q)
    spec_csv << detail::num(spectrum.k[q]) << "," << detail::num(spectrum.values[q]) << "\n";
  std::ostringstream round_csv;
  round_csv << prov << "chi,f,roundtrip,abs_error\n";
  double max_err = 0.0;
  double max_f = 0.0;
  for (std::size_t i = 0; i < chi_rule.size(); ++i) {
    const double err = std::abs(back.values[i] - profile.values[i]);
    max_err = std::max(max_err, err);
    max_f = std::max(max_f, std::abs(profile.values[i]));
    round_csv << detail::num(chi_rule.nodes[i]) << "," << detail::num(profile.values[i]) << ","
              << detail::num(back.values[i]) << "," << detail::num(err) << "\n";
  }
  const auto dir = detail::output_dir(opt);
  detail::write_text(dir / "transform_spectrum.csv", spec_csv.str());
  detail::write_text(dir / "transform_roundtrip.csv", round_csv.str());
  log << "transform: " << to_string(g.kind()) << " geometry, " << spectrum.k.size()
      << " spectral nodes, roundtrip relative error " << detail::num(max_f > 0.0 ? max_err / max_f : max_err) << "\n";
}

/// Gaussian realization written as a field file, plus an optional analytic
/// correlation table.
inline void cmd_synthesize(Config& cfg, const Options& opt, std::ostream& log) {
  const Geometry g = detail::load_geometry(cfg);
  const randfield::PowerSpectrum P = detail::load_spectrum(cfg, g);
  randfield::SynthesisConfig sc = detail::load_synthesis(cfg);
  const detail::LoadedGrid lg = detail::load_grid(cfg, g);
  sc.seed = detail::run_seed(cfg, opt);
  sc.moment_tolerance = detail::run_tolerance(cfg, opt, 1e-6);
  sc.threads = opt.threads;
  std::vector<double> lags;
  if (cfg.has("synthesize.correlation_lags")) lags = cfg.numbers("synthesize.correlation_lags");
  for (double d : lags)
    if (!(d >= 0.0) || !std::isfinite(d)) cfg.fail("synthesize.correlation_lags", "lags must be finite and >= 0");
  const std::string name = cfg.text_or("synthesize.output", "field.cfield");
  cfg.reject_unknown();

  const randfield::Synthesizer synth = cfg.validated("synthesis", [&] { return randfield::Synthesizer(P, sc, lg.grid); });
  const randfield::FieldRealization f = synth.realize(sc.seed);
  const std::uint64_t hash = detail::config_hash(cfg);
  const auto dir = detail::output_dir(opt);
  write_field_file((dir / name).string(), detail::to_file(g, lg, f.values, 0, sc.seed, hash,
                                                         sc.field_kind == randfield::FieldKind::real, sc.l_max));
  if (!lags.empty()) {
    std::ostringstream csv;
    csv << detail::provenance_line(hash, sc.seed) << "lag,analytic\n";
    for (double d : lags) csv << detail::num(d) << "," << detail::num(randfield::analytic_correlation(P, d)) << "\n";
    detail::write_text(dir / "correlation.csv", csv.str());
  }
  log << "synthesize: seed " << sc.seed << ", " << f.values.size() << " values, " << synth.mode_count()
      << " spectral modes -> " << (dir / name).string() << "\n";
}

/// Monte Carlo correlation estimate between an anchor node and every theta node
/// on the same chi shell and phi meridian.
inline void cmd_estimate(Config& cfg, const Options& opt, std::ostream& log) {
  using namespace randfield;
  std::vector<FieldRealization> loaded;
  std::optional<PowerSpectrum> P;
  std::optional<Synthesizer> synth;
  std::size_t N = 0;
  std::uint64_t first_seed = 0;
  Geometry g = Geometry::flat();
  FieldGrid grid;
  if (cfg.has("estimate.inputs")) {
    const std::string list = cfg.text("estimate.inputs");
    std::stringstream ss(list);
    std::string path;
    while (std::getline(ss, path, ',')) {
      path = cli::detail::trim(path);
      if (path.empty()) cfg.fail("estimate.inputs", "empty path in list");
      const FieldFile file = read_field_file(path);
      FieldRealization r;
      r.geometry = file.geometry();
      r.grid = {file.chi, file.theta, file.phi};
      r.values = file.values;
      loaded.push_back(std::move(r));
    }
    g = loaded.front().geometry;
    grid = loaded.front().grid;
    N = loaded.size();
    if (cfg.has("spectrum.type")) P = detail::load_spectrum(cfg, g);
  } else {
    g = detail::load_geometry(cfg);
    P = detail::load_spectrum(cfg, g);
    SynthesisConfig sc = detail::load_synthesis(cfg);
    grid = detail::load_grid(cfg, g).grid;
    sc.moment_tolerance = detail::run_tolerance(cfg, opt, 1e-6);
    N = static_cast<std::size_t>(cfg.integer_in("estimate.realizations", 200, 2, 100000000));
    first_seed = detail::run_seed(cfg, opt);
    synth.emplace(cfg.validated("synthesis", [&] { return Synthesizer(*P, sc, grid); }));
  }
  const auto chi_index = static_cast<std::size_t>(cfg.integer_in("estimate.chi_index", 0, 0, 1 << 30));
  const auto phi_index = static_cast<std::size_t>(cfg.integer_in("estimate.phi_index", 0, 0, 1 << 30));
  const auto anchor = static_cast<std::size_t>(cfg.integer_in("estimate.anchor_theta", 0, 0, 1 << 30));
  if (chi_index >= grid.chi.size()) cfg.fail("estimate.chi_index", "outside the chi grid");
  if (phi_index >= grid.phi.size()) cfg.fail("estimate.phi_index", "outside the phi grid");
  if (anchor >= grid.theta.size()) cfg.fail("estimate.anchor_theta", "outside the theta grid");
  cfg.reject_unknown();

  std::vector<PointPair> pairs;
  for (std::size_t j = 0; j < grid.theta.size(); ++j)
    pairs.push_back({{chi_index, anchor, phi_index}, {chi_index, j, phi_index}});
  CorrelationEstimate est;
  if (!loaded.empty()) {
    if (N < 2) cfg.fail("estimate.inputs", "need at least two realizations");
    CorrelationAccumulator acc(pairs);
    for (const auto& r : loaded) acc.add(r);
    est = acc.result();
  } else {
    const Synthesizer& s = *synth;
    est = estimate_correlation([&](std::uint64_t seed) { return s.realize(seed); }, pairs, N, first_seed, opt.threads);
  }

  std::ostringstream csv;
  csv << detail::provenance_line(detail::config_hash(cfg), first_seed) << "lag,estimate,stderr,analytic\n";
  std::size_t within = 0;
  std::size_t scored = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const double lag = grid_distance(g, grid, pairs[p]);
    const double analytic = P ? analytic_correlation(*P, lag) : std::numeric_limits<double>::quiet_NaN();
    csv << detail::num(lag) << "," << detail::num(est.mean[p].real()) << "," << detail::num(est.stderr_re[p]) << ","
        << detail::num(analytic) << "\n";
    if (P && est.stderr_re[p] > 0.0) {
      ++scored;
      if (std::abs(est.mean[p].real() - analytic) <= 2.0 * est.stderr_re[p]) ++within;
    }
  }
  detail::write_text(detail::output_dir(opt) / "estimate.csv", csv.str());
  log << "estimate: " << est.count << " realizations, " << pairs.size() << " lags";
  if (scored > 0) log << ", " << within << "/" << scored << " within 2 stderr of the analytic value";
  log << "\n";
}

namespace detail {

inline void write_kernels(const std::filesystem::path& path, const spinfield::SpinKernelSet& k,
                          const std::string& provenance) {
  std::ostringstream csv;
  csv << provenance << "l,i,j,chi_i,chi_j,value\n";
  for (int l = k.l_min(); l <= k.l_max; ++l)
    for (std::size_t i = 0; i < k.chi.size(); ++i)
      for (std::size_t j = 0; j < k.chi.size(); ++j)
        csv << l << "," << i << "," << j << "," << num(k.chi[i]) << "," << num(k.chi[j]) << ","
            << num(k.at(l)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) << "\n";
  write_text(path, csv.str());
}

inline spinfield::SpinKernelSet read_kernels(const std::string& path, int s, int l_max, const std::vector<double>& chi) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot read kernel file '" + path + "'");
  spinfield::SpinKernelSet k = spinfield::SpinKernelSet::zeros(s, l_max, chi);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#' || line.rfind("l,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    const auto bad = [&](const std::string& why) {
      return config_error(path + ":" + std::to_string(row) + ": " + why);
    };
    if (cells.size() != 6) throw bad("expected 6 columns l,i,j,chi_i,chi_j,value");
    long long l = 0, i = 0, j = 0;
    double ci = 0.0, cj = 0.0, v = 0.0;
    try {
      l = std::stoll(cells[0]);
      i = std::stoll(cells[1]);
      j = std::stoll(cells[2]);
      ci = std::stod(cells[3]);
      cj = std::stod(cells[4]);
      v = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw bad("unparsable number");
    }
    if (l < k.l_min() || l > l_max) continue;  // degrees outside the requested band are ignored
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= chi.size() || static_cast<std::size_t>(j) >= chi.size()) {
      throw bad("chi index outside the grid");
    }
    if (std::abs(ci - chi[i]) > 1e-12 * std::max(1.0, std::abs(chi[i])) ||
        std::abs(cj - chi[j]) > 1e-12 * std::max(1.0, std::abs(chi[j]))) {
      throw bad("chi value does not match grid.chi");
    }
    k.at(static_cast<int>(l))(i, j) = v;
  }
  return k;
}

/// C_l(chi1, chi2) = A (l+1)^-index h_l(chi1) h_l(chi2) exp(-(chi1-chi2)^2 / (2 c^2)),
/// h_0 = 1, h_l(chi) = 1 - exp(-chi / c) for l >= 1 (vanishes at the origin).
inline spinfield::SpinKernelSet parametric_kernels(int s, int l_max, const std::vector<double>& chi, double A,
                                                   double index, double corr, std::optional<int> only_l) {
  spinfield::SpinKernelSet k = spinfield::SpinKernelSet::zeros(s, l_max, chi);
  for (int l = k.l_min(); l <= l_max; ++l) {
    if (only_l && *only_l != l) continue;
    const double amp = A * std::pow(l + 1.0, -index);
    const auto h = [&](double x) { return l == 0 ? 1.0 : 1.0 - std::exp(-x / corr); };
    for (std::size_t i = 0; i < chi.size(); ++i)
      for (std::size_t j = 0; j < chi.size(); ++j) {
        const double d = chi[i] - chi[j];
        k.at(l)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            amp * h(chi[i]) * h(chi[j]) * std::exp(-0.5 * d * d / (corr * corr));
      }
  }
  return k;
}

}  // namespace detail

/// Spin-field synthesis from kernels (with optional kernel-recovery roundtrip), or the
/// lensing ladder applied to a spin-0 potential field file.
inline void cmd_spin(Config& cfg, const Options& opt, std::ostream& log) {
  const std::string mode = cfg.choice("spin.mode", "synthesize", {"synthesize", "ladder"});
  const auto dir_of = [&] { return detail::output_dir(opt); };
  if (mode == "ladder") {
    const std::string psi_path = cfg.text("spin.psi_file");
    const std::uint64_t seed = detail::run_seed(cfg, opt);
    const FieldFile psi = read_field_file(psi_path);
    const int l_max = static_cast<int>(cfg.integer_in("spin.l_max", psi.l_max, 0, specfun::max_degree));
    cfg.reject_unknown();
    if (psi.spin != 0) {
      throw config_error(psi_path + ": the potential must be a spin-0 field (file has s=" + std::to_string(psi.spin) +
                         ", so it has no l < s content to start from)");
    }
    if (psi.theta_rule != ThetaRule::gauss_legendre) {
      throw config_error(psi_path + ": ladder analysis needs a Gauss-Legendre theta grid");
    }
    if (psi.phi.size() <= static_cast<std::size_t>(2 * l_max) || psi.theta.size() <= static_cast<std::size_t>(l_max)) {
      throw config_error(psi_path + ": grid too coarse for l_max=" + std::to_string(l_max));
    }
    const quad::Rule rule = spinfield::beta_quadrature(psi.theta.size());
    const spinfield::SpinCoefficients a =
        spinfield::analyze(0, l_max, psi.chi.size(), psi.values, rule, psi.phi.size());
    const spinfield::LensingCoefficientSet set = spinfield::lensing_ladder(a);
    const std::uint64_t hash = detail::config_hash(cfg);
    const auto dir = dir_of();
    const detail::LoadedGrid lg{{psi.chi, psi.theta, psi.phi}, psi.theta_rule};
    const std::pair<spinfield::LensingObservable, const char*> outputs[] = {
        {spinfield::LensingObservable::convergence, "kappa.cfield"},
        {spinfield::LensingObservable::flexion_F, "flexion_F.cfield"},
        {spinfield::LensingObservable::shear, "shear.cfield"},
        {spinfield::LensingObservable::flexion_G, "flexion_G.cfield"}};
    for (const auto& [obs, name] : outputs) {
      const auto values = spinfield::evaluate(set.get(obs), psi.theta, psi.phi, opt.threads);
      write_field_file((dir / name).string(),
                       detail::to_file(psi.geometry(), lg, values, spinfield::spin_of(obs), psi.seed, hash, false, l_max));
    }
    std::ostringstream csv;
    csv << detail::provenance_line(hash, seed) << "l,observable,spin,sign,factor,radicand,multiplier\n";
    for (int l = 0; l <= l_max; ++l)
      for (const auto& [obs, name] : outputs) {
        const auto m = spinfield::lensing_multiplier(obs, l);
        csv << l << "," << std::string(name).substr(0, std::string(name).find('.')) << "," << spinfield::spin_of(obs)
            << "," << m.sign << "," << m.factor << "," << m.radicand << "," << detail::num(m.value()) << "\n";
      }
    detail::write_text(dir / "ladder.csv", csv.str());
    log << "spin ladder: psi l_max " << l_max << " -> kappa, flexion_F, shear, flexion_G\n";
    return;
  }

  const int s = static_cast<int>(cfg.integer_in("spin.s", 0, -specfun::max_degree, specfun::max_degree));
  const int l_max = static_cast<int>(cfg.integer_in("spin.l_max", 8, std::abs(s), specfun::max_degree));
  const Geometry g = detail::load_geometry(cfg);
  const detail::LoadedGrid lg = detail::load_grid(cfg, g);
  spinfield::SpinKernelSet kernels;
  if (cfg.has("spin.kernel_file")) {
    kernels = detail::read_kernels(cfg.text("spin.kernel_file"), s, l_max, lg.grid.chi);
  } else {
    const double A = cfg.number_or("spin.amplitude", 1.0);
    const double index = cfg.number_or("spin.index", 2.0);
    const double corr = cfg.number_or("spin.corr_length", 0.5);
    if (!(A >= 0.0) || !std::isfinite(A)) cfg.fail("spin.amplitude", "must be finite and >= 0");
    if (!std::isfinite(index)) cfg.fail("spin.index", "must be finite");
    if (!(corr > 0.0) || !std::isfinite(corr)) cfg.fail("spin.corr_length", "must be positive");
    std::optional<int> only;
    if (cfg.has("spin.only_l")) only = static_cast<int>(cfg.integer_in("spin.only_l", 0, std::abs(s), l_max));
    kernels = detail::parametric_kernels(s, l_max, lg.grid.chi, A, index, corr, only);
  }
  const bool recover = cfg.flag_or("spin.recover", false);
  const auto n_beta = static_cast<std::size_t>(cfg.integer_in("spin.n_beta", 2 * l_max + 2, 1, 100000));
  const double tolerance = detail::run_tolerance(cfg, opt, 1e-8);
  const std::uint64_t seed = detail::run_seed(cfg, opt);
  cfg.reject_unknown();
  cfg.validated("spin kernels", [&] {
    spinfield::validate(kernels);
    return 0;
  });

  const spinfield::SpinFieldRealization f =
      spinfield::synthesize_spin(kernels, lg.grid.theta, lg.grid.phi, seed, opt.threads);
  const std::uint64_t hash = detail::config_hash(cfg);
  const std::string prov = detail::provenance_line(hash, seed);
  const auto dir = dir_of();
  write_field_file((dir / "spin.cfield").string(), detail::to_file(g, lg, f.values, s, seed, hash, false, l_max));
  detail::write_kernels(dir / "kernels.csv", kernels, prov);
  log << "spin: s=" << s << ", l_max " << l_max << ", seed " << seed << " -> " << (dir / "spin.cfield").string() << "\n";
  if (recover) {
    const quad::Rule beta = spinfield::beta_quadrature(n_beta);
    const auto samples = spinfield::sample_zonal_correlation(kernels, beta);
    const spinfield::SpinKernelSet back = spinfield::recover_kernels(samples, beta, s, l_max, kernels.chi);
    double err = 0.0;
    for (int l = kernels.l_min(); l <= l_max; ++l) err = std::max(err, (back.at(l) - kernels.at(l)).cwiseAbs().maxCoeff());
    detail::write_kernels(dir / "recovered_kernels.csv", back, prov);
    log << "spin: kernel roundtrip max error " << detail::num(err) << "\n";
    if (!(err <= tolerance)) {
      throw convergence_error("spin: kernel roundtrip error " + detail::num(err) + " exceeds tolerance " +
                              detail::num(tolerance));
    }
  }
}

/// Runs one subcommand and maps failures to exit codes.
inline int run(const Options& opt, std::ostream& log, std::ostream& err) {
  try {
    Config cfg = Config::load(opt.config_path);
    if (opt.command == "background") {
      cmd_background(cfg, opt, log);
    } else if (opt.command == "transform") {
      cmd_transform(cfg, opt, log);
    } else if (opt.command == "synthesize") {
      cmd_synthesize(cfg, opt, log);
    } else if (opt.command == "estimate") {
      cmd_estimate(cfg, opt, log);
    } else if (opt.command == "spin") {
      cmd_spin(cfg, opt, log);
    } else {
      err << "error: unknown command '" << opt.command << "'\n";
      return exit_config;
    }
    return exit_ok;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const io_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return exit_io;
  } catch (const domain_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return exit_config;
  } catch (const std::exception& e) {
    err << "numeric error: " << e.what() << "\n";
    return exit_numeric;
  }
}

}  // namespace curvedfield::cli
