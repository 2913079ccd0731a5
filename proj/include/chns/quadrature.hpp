#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chns/mesh.hpp"

namespace chns {

/// Points on the reference cell [-1, 1]^dim with positive weights.
struct QuadratureRule {
  int dim = 1;
  std::vector<Point> points;
  std::vector<double> weights;
  int exactness_degree = 0;  // per coordinate direction

  std::size_t size() const { return weights.size(); }
};

namespace detail {

/// Legendre polynomial P_n and its derivative at x.
inline std::pair<double, double> legendre_and_derivative(int n, double x) {
  if (n == 0) return {1.0, 0.0};
  double p0 = 1.0, p1 = x, d0 = 0.0, d1 = 1.0;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    const double d2 = d0 + (2.0 * k - 1.0) * p1;
    p0 = p1;
    p1 = p2;
    d0 = d1;
    d1 = d2;
  }
  return {p1, d1};
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1], exact for degree 2n-1.
inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
  QuadratureRule rule;
  rule.dim = 1;
  rule.points.assign(n, Point{0.0, 0.0, 0.0});
  rule.weights.assign(n, 0.0);
  rule.exactness_degree = 2 * n - 1;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre_and_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = detail::legendre_and_derivative(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.points[i][0] = -x;
    rule.points[n - 1 - i][0] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.points[n / 2][0] = 0.0;
  return rule;
}

/// Tensor-product Gauss-Legendre rule on [-1, 1]^dim, x fastest.
inline QuadratureRule tensor_gauss_legendre(int dim, int n) {
  const QuadratureRule g = gauss_legendre(n);
  QuadratureRule rule;
  rule.dim = dim;
  rule.exactness_degree = g.exactness_degree;
  const int nz = dim > 2 ? n : 1;
  const int ny = dim > 1 ? n : 1;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < n; ++i) {
        Point p{g.points[i][0], dim > 1 ? g.points[j][0] : 0.0, dim > 2 ? g.points[k][0] : 0.0};
        double w = g.weights[i];
        if (dim > 1) w *= g.weights[j];
        if (dim > 2) w *= g.weights[k];
        rule.points.push_back(p);
        rule.weights.push_back(w);
      }
  return rule;
}

/// Points per direction used for a degree-k space: integrates Q_{2k+2}
/// exactly and the cubic potential terms exactly for k <= 2.
inline int default_quadrature_points(int degree) { return std::max(degree + 2, 2 * degree); }

}  // namespace chns
