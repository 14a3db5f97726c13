#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "curvedfield/errors.hpp"

namespace curvedfield::quad {

/// Nodes and weights of a quadrature rule for an integral over one variable.
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }

  template <class F>
  double apply(F&& f) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
inline Rule gauss_legendre(std::size_t n) {
  curvedfield::detail::require(n >= 1, "gauss_legendre: need at least one node");
  Rule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      derivative = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / derivative;
      x -= step;
      if (std::abs(step) < 1e-16) break;
    }
    {
      // Final derivative at the converged node.
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      derivative = n == 1 ? 1.0 : static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  if (n == 1) rule.weights[0] = 2.0;
  return rule;
}

inline Rule gauss_legendre(std::size_t n, double a, double b) {
  Rule rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

/// Composite rule: `panels` equal panels on [a, b], each with an `order`-point
/// Gauss-Legendre rule. Exact for piecewise polynomials of degree 2*order-1.
inline Rule gauss_legendre_panels(double a, double b, std::size_t panels, std::size_t order) {
  curvedfield::detail::require(panels >= 1 && order >= 1, "gauss_legendre_panels: empty rule");
  curvedfield::detail::require(std::isfinite(a) && std::isfinite(b) && b > a,
                  "gauss_legendre_panels: need finite a < b");
  const Rule base = gauss_legendre(order);
  Rule rule;
  rule.nodes.reserve(panels * order);
  rule.weights.reserve(panels * order);
  const double width = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + width * static_cast<double>(p);
    for (std::size_t i = 0; i < order; ++i) {
      rule.nodes.push_back(lo + 0.5 * width * (base.nodes[i] + 1.0));
      rule.weights.push_back(0.5 * width * base.weights[i]);
    }
  }
  return rule;
}

/// Trapezoid weights for arbitrary strictly increasing nodes.
inline Rule trapezoid(std::span<const double> nodes) {
  curvedfield::detail::require(!nodes.empty(), "trapezoid: no nodes");
  Rule rule;
  rule.nodes.assign(nodes.begin(), nodes.end());
  rule.weights.assign(nodes.size(), 0.0);
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double h = nodes[i] - nodes[i - 1];
    curvedfield::detail::require(h > 0.0, "trapezoid: nodes must be strictly increasing");
    rule.weights[i - 1] += 0.5 * h;
    rule.weights[i] += 0.5 * h;
  }
  return rule;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
};

namespace detail {

// Kronrod 15-point nodes (non-negative half) and weights; embedded 7-point Gauss
// weights on the odd-indexed nodes.
inline constexpr std::array<double, 8> kronrod_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss7_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double fc = f(mid);
  double kronrod = fc * kronrod_weights[7];
  double gauss = fc * gauss7_weights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kronrod_nodes[j];
    const double sum = f(mid - dx) + f(mid + dx);
    kronrod += kronrod_weights[j] * sum;
    if (j % 2 == 1) gauss += gauss7_weights[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (G7/K15) integration with bisection of the segment
/// carrying the largest error estimate. Stops once the summed estimate is below
/// max(abs_tol, rel_tol*|value|); throws convergence_error otherwise.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                                  std::size_t max_intervals = 4096) {
  curvedfield::detail::require(std::isfinite(a) && std::isfinite(b),
                               "integrate_adaptive: limits must be finite");
  if (a == b) return {};
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::kronrod15(f, a, b));
  double value = heap.top().value;
  double error = heap.top().error;
  while (error > std::max(abs_tol, rel_tol * std::abs(value))) {
    if (heap.size() >= max_intervals) {
      throw convergence_error("integrate_adaptive: no convergence on [" + std::to_string(a) + ", " +
                              std::to_string(b) + "], error estimate " + std::to_string(error));
    }
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const detail::Segment left = detail::kronrod15(f, worst.a, mid);
    const detail::Segment right = detail::kronrod15(f, mid, worst.b);
    heap.push(left);
    heap.push(right);
    // Re-sum from scratch to keep the total well defined under cancellation.
    value = 0.0;
    error = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      value += copy.top().value;
      error += copy.top().error;
      copy.pop();
    }
    if (!std::isfinite(value)) throw convergence_error("integrate_adaptive: non-finite integrand");
  }
  return {sign * value, error, heap.size()};
}

}  // namespace curvedfield::quad
