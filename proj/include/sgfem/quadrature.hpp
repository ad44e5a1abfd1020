#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "sgfem/error.hpp"
#include "sgfem/mesh.hpp"

namespace sgfem {

/// Gauss-Legendre rule on the reference interval [0, 1].
struct QuadRule {
  std::vector<double> points;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
};

inline constexpr int kMaxGaussPoints = 32;

namespace detail {

inline QuadRule compute_gauss_rule(int n) {
  // Newton iteration on P_n from the Chebyshev-like initial guess; symmetric
  // nodes are filled in pairs.
  QuadRule rule;
  rule.points.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // One more evaluation at the converged root for the weight.
    double p0 = 1.0;
    double p1 = 0.0;
    for (int k = 1; k <= n; ++k) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
    }
    dp = n * (z * p0 - p1) / (z * z - 1.0);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.points[lo] = 0.5 * (1.0 - z);
    rule.points[hi] = 0.5 * (1.0 + z);
    rule.weights[lo] = 0.5 * w;
    rule.weights[hi] = 0.5 * w;
  }
  if (n % 2 == 1) rule.points[static_cast<std::size_t>(n / 2)] = 0.5;
  return rule;
}

}  // namespace detail

/// n-point Gauss-Legendre rule mapped to [0, 1]; exact for degree 2n-1.
/// Rules are computed once and shared.
inline const QuadRule& gauss_rule(int n) {
  if (n < 1 || n > kMaxGaussPoints) {
    throw Error(ErrorCode::UnsupportedOrder, "Gauss rule with " + std::to_string(n) + " points");
  }
  static const std::array<QuadRule, kMaxGaussPoints> rules = [] {
    std::array<QuadRule, kMaxGaussPoints> r;
    for (int k = 1; k <= kMaxGaussPoints; ++k) r[static_cast<std::size_t>(k - 1)] = detail::compute_gauss_rule(k);
    return r;
  }();
  return rules[static_cast<std::size_t>(n - 1)];
}

/// Smooth sub-piece of an element: the whole element, or one side of its
/// interface. `side` tells integrands which one-sided branch applies.
struct ElementPiece {
  Interval span;
  Side side;
};

inline std::vector<ElementPiece> element_pieces(const Mesh& mesh, int e) {
  const Interval el = mesh.element(e);
  if (auto g = mesh.element_interface(e)) {
    return {{Interval(el.left, *g), Side::Left}, {Interval(*g, el.right), Side::Right}};
  }
  return {{el, Side::Right}};
}

/// Integral of f over element e, split at its interface when present. The
/// integrand is called as f(x, side) and never at the interface itself.
template <class F>
double integrate_element(const Mesh& mesh, int e, F&& f, const QuadRule& rule) {
  double sum = 0.0;
  for (const auto& piece : element_pieces(mesh, e)) {
    const double a = piece.span.left;
    const double len = piece.span.length();
    double part = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      part += rule.weights[q] * f(a + len * rule.points[q], piece.side);
    }
    sum += len * part;
  }
  return sum;
}

/// Integral of f over an arbitrary subinterval of the domain, split at every
/// node and interface inside it so each piece is smooth for discrete fields.
template <class F>
double integrate_interval(const Mesh& mesh, const Interval& span, F&& f, const QuadRule& rule) {
  std::vector<double> breaks{span.left};
  for (double x : mesh.nodes()) {
    if (span.contains_open(x)) breaks.push_back(x);
  }
  for (double g : mesh.interfaces()) {
    if (span.contains_open(g)) breaks.push_back(g);
  }
  breaks.push_back(span.right);
  std::sort(breaks.begin(), breaks.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double len = breaks[i + 1] - a;
    if (len <= 0.0) continue;
    double part = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) part += rule.weights[q] * f(a + len * rule.points[q]);
    sum += len * part;
  }
  return sum;
}

}  // namespace sgfem
