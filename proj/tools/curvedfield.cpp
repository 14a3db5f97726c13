#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "curvedfield/cli/commands.hpp"

int main(int argc, char** argv) {
  using curvedfield::cli::Options;
  CLI::App app{"Homogeneous random fields on curved FLRW slices"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", curvedfield::cli::library_version);

  Options opt;
  opt.threads = curvedfield::threads_from_environment(1);
  unsigned long long seed = 0;
  double tolerance = 0.0;
  unsigned threads = 0;

  const char* commands[][2] = {
      {"background", "Friedmann background table: z, H(z), chi(z), t_L(z)"},
      {"transform", "Isotropic spherical Fourier transform and inverse of a radial profile"},
      {"synthesize", "Draw one realization of a homogeneous random field"},
      {"estimate", "Monte Carlo correlation estimate with analytic overlay"},
      {"spin", "Spin-field synthesis, kernel roundtrip and lensing ladder"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "Configuration file (key = value)")->required();
    sub->add_option("--seed", seed, "Seed (overrides run.seed)");
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--threads", threads, "Worker threads (default: $CURVEDFIELD_THREADS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tolerance", tolerance, "Numeric tolerance (overrides run.tolerance)")
        ->check(CLI::PositiveNumber);
    sub->callback([&, sub, name = std::string(name)] {
      opt.command = name;
      if (sub->count("--seed")) opt.seed = seed;
      if (sub->count("--tolerance")) opt.tolerance = tolerance;
      if (sub->count("--threads")) opt.threads = threads;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : curvedfield::cli::exit_config;
  }
  return curvedfield::cli::run(opt, std::cout, std::cerr);
}
