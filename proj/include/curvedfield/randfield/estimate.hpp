#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "curvedfield/errors.hpp"
#include "curvedfield/geometry.hpp"
#include "curvedfield/parallel.hpp"
#include "curvedfield/randfield/synthesis.hpp"

namespace curvedfield::randfield {

struct GridPoint {
  std::size_t chi = 0;
  std::size_t theta = 0;
  std::size_t phi = 0;
};

struct PointPair {
  GridPoint first;
  GridPoint second;
};

/// Monte Carlo estimate of E[f(x) conj f(y)] per pair, with jackknife standard
/// errors of the real and imaginary parts.
struct CorrelationEstimate {
  std::vector<std::complex<double>> mean;
  std::vector<double> stderr_re;
  std::vector<double> stderr_im;
  std::size_t count = 0;
};

/// Geodesic distance between two nodes of a field grid.
inline double grid_distance(const Geometry& g, const FieldGrid& grid, const PointPair& pair) {
  const auto dir = [&](const GridPoint& p) {
    const double t = grid.theta[p.theta];
    const double f = grid.phi[p.phi];
    return std::array<double, 3>{std::sin(t) * std::cos(f), std::sin(t) * std::sin(f), std::cos(t)};
  };
  const auto a = dir(pair.first);
  const auto b = dir(pair.second);
  // Angle from the chord length, accurate for nearby directions.
  const double chord = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                                 (a[2] - b[2]) * (a[2] - b[2]));
  const double beta = 2.0 * std::asin(std::min(1.0, 0.5 * chord));
  return geodesic_distance(g, grid.chi[pair.first.chi], grid.chi[pair.second.chi], beta);
}

/// Accumulates products f(x) conj f(y) realization by realization; all added
/// realizations must share geometry and grid.
class CorrelationAccumulator {
 public:
  explicit CorrelationAccumulator(std::vector<PointPair> pairs) : pairs_(std::move(pairs)) {}

  void add(const FieldRealization& f) {
    if (samples_.empty()) {
      geometry_ = f.geometry;
      grid_ = f.grid;
      for (const auto& p : pairs_) {
        for (const GridPoint* q : {&p.first, &p.second}) {
          if (q->chi >= grid_.chi.size() || q->theta >= grid_.theta.size() || q->phi >= grid_.phi.size()) {
            throw domain_error("estimate_correlation: point index outside the grid");
          }
        }
      }
    } else if (!(f.geometry == geometry_) || !(f.grid == grid_)) {
      throw domain_error("estimate_correlation: realization " + std::to_string(samples_.size() / pairs_.size()) +
                         " has a different grid or geometry");
    }
    for (const auto& p : pairs_) {
      samples_.push_back(f.at(p.first.chi, p.first.theta, p.first.phi) *
                         std::conj(f.at(p.second.chi, p.second.theta, p.second.phi)));
    }
  }

  std::size_t count() const { return pairs_.empty() ? 0 : samples_.size() / pairs_.size(); }

  CorrelationEstimate result() const {
    const std::size_t n = count();
    if (n < 2) throw domain_error("estimate_correlation: need at least two realizations");
    CorrelationEstimate out;
    out.count = n;
    const std::size_t P = pairs_.size();
    out.mean.assign(P, 0.0);
    out.stderr_re.assign(P, 0.0);
    out.stderr_im.assign(P, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
      std::complex<double> sum = 0.0;
      for (std::size_t r = 0; r < n; ++r) sum += samples_[r * P + p];
      const std::complex<double> mean = sum / static_cast<double>(n);
      // Jackknife: leave-one-out means theta_i = (sum - x_i)/(n-1).
      double var_re = 0.0;
      double var_im = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const std::complex<double> loo = (sum - samples_[r * P + p]) / static_cast<double>(n - 1);
        var_re += std::pow(loo.real() - mean.real(), 2);
        var_im += std::pow(loo.imag() - mean.imag(), 2);
      }
      const double factor = static_cast<double>(n - 1) / static_cast<double>(n);
      out.mean[p] = mean;
      out.stderr_re[p] = std::sqrt(factor * var_re);
      out.stderr_im[p] = std::sqrt(factor * var_im);
    }
    return out;
  }

 private:
  std::vector<PointPair> pairs_;
  Geometry geometry_ = Geometry::flat();
  FieldGrid grid_;
  std::vector<std::complex<double>> samples_;
};

using RealizationStream = std::function<FieldRealization(std::uint64_t seed)>;

/// Draws realizations for seeds first_seed .. first_seed+N-1 (in parallel when
/// threads > 1) and estimates the pair correlations. Results do not depend on the
/// thread count: products are stored per seed and reduced in seed order.
inline CorrelationEstimate estimate_correlation(const RealizationStream& stream, const std::vector<PointPair>& pairs,
                                                std::size_t N, std::uint64_t first_seed = 0, unsigned threads = 1) {
  if (N < 2) throw domain_error("estimate_correlation: need N >= 2 realizations");
  std::vector<FieldRealization> reduced(N);
  parallel_for(N, threads, [&](std::size_t r) {
    FieldRealization f = stream(first_seed + r);
    // Keep only what the accumulator reads.
    f.coefficients = {};
    reduced[r] = std::move(f);
  });
  CorrelationAccumulator acc(pairs);
  for (const auto& f : reduced) acc.add(f);
  return acc.result();
}

}  // namespace curvedfield::randfield
