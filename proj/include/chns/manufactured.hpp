#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

#include "chns/mesh.hpp"

namespace chns {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  // m[i][j] = d u_i / d x_j

/// Closed-form exact solution with every derivative the forcing needs. The
/// order parameter is e^{-t} prod_i sin(2 pi x_i) in both dimensions; the
/// velocity and pressure are dimension specific.
class ExactSolution {
 public:
  ExactSolution(int dim, double kappa, double mu_s) : dim_(dim), kappa_(kappa), mu_s_(mu_s) {
    if (dim != 2 && dim != 3) throw std::invalid_argument("ExactSolution: dim must be 2 or 3");
  }
  virtual ~ExactSolution() = default;

  int dim() const { return dim_; }
  double kappa() const { return kappa_; }
  double mu_s() const { return mu_s_; }

  // order parameter
  double c(double t, const Point& x) const {
    double v = std::exp(-t);
    for (int i = 0; i < dim_; ++i) v *= std::sin(two_pi * x[i]);
    return v;
  }
  Vec3 grad_c(double t, const Point& x) const {
    Vec3 g{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) {
      double v = std::exp(-t) * two_pi * std::cos(two_pi * x[i]);
      for (int j = 0; j < dim_; ++j)
        if (j != i) v *= std::sin(two_pi * x[j]);
      g[i] = v;
    }
    return g;
  }
  /// Laplacian eigenvalue: Delta c = -lambda c.
  double lambda() const { return two_pi * two_pi * dim_; }
  double laplacian_c(double t, const Point& x) const { return -lambda() * c(t, x); }
  double dc_dt(double t, const Point& x) const { return -c(t, x); }

  // chemical potential mu = c^3 - c - kappa Delta c = c^3 + beta c
  double beta() const { return kappa_ * lambda() - 1.0; }
  double mu(double t, const Point& x) const {
    const double cv = c(t, x);
    return cv * cv * cv + beta() * cv;
  }
  Vec3 grad_mu(double t, const Point& x) const {
    const double cv = c(t, x);
    Vec3 g = grad_c(t, x);
    for (double& gi : g) gi *= 3.0 * cv * cv + beta();
    return g;
  }
  double laplacian_mu(double t, const Point& x) const {
    const double cv = c(t, x);
    const Vec3 g = grad_c(t, x);
    const double g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    return 6.0 * cv * g2 + (3.0 * cv * cv + beta()) * laplacian_c(t, x);
  }

  // velocity and pressure
  virtual Vec3 u(double t, const Point& x) const = 0;
  virtual Mat3 grad_u(double t, const Point& x) const = 0;
  virtual Vec3 laplacian_u(double t, const Point& x) const = 0;
  virtual Vec3 du_dt(double t, const Point& x) const = 0;
  virtual double p(double t, const Point& x) const = 0;
  virtual Vec3 grad_p(double t, const Point& x) const = 0;

  double div_u(double t, const Point& x) const {
    const Mat3 g = grad_u(t, x);
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += g[i][i];
    return s;
  }

  /// f_c = dc/dt - Delta mu + div(c u).
  double forcing_c(double t, const Point& x) const {
    const Vec3 uv = u(t, x);
    const Vec3 gc = grad_c(t, x);
    double adv = c(t, x) * div_u(t, x);
    for (int i = 0; i < dim_; ++i) adv += uv[i] * gc[i];
    return dc_dt(t, x) - laplacian_mu(t, x) + adv;
  }

  /// f_u = du/dt + (u.grad) u - mu_s Delta u + grad p + c grad mu.
  Vec3 forcing_u(double t, const Point& x) const {
    const Vec3 uv = u(t, x);
    const Mat3 gu = grad_u(t, x);
    const Vec3 lu = laplacian_u(t, x);
    const Vec3 ut = du_dt(t, x);
    const Vec3 gp = grad_p(t, x);
    const Vec3 gm = grad_mu(t, x);
    const double cv = c(t, x);
    Vec3 f{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) {
      double conv = 0.0;
      for (int j = 0; j < dim_; ++j) conv += uv[j] * gu[i][j];
      f[i] = ut[i] + conv - mu_s_ * lu[i] + gp[i] + cv * gm[i];
    }
    return f;
  }

  /// Boundary flux for the c equation: grad mu . n - c u . n.
  double flux_c(double t, const Point& x, const Point& n) const {
    const Vec3 gm = grad_mu(t, x);
    const Vec3 uv = u(t, x);
    const double cv = c(t, x);
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += (gm[i] - cv * uv[i]) * n[i];
    return s;
  }

  /// Boundary flux for the mu equation: kappa grad c . n.
  double flux_mu(double t, const Point& x, const Point& n) const {
    const Vec3 gc = grad_c(t, x);
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) s += gc[i] * n[i];
    return kappa_ * s;
  }

  static constexpr double two_pi = 2.0 * std::numbers::pi;

 private:
  int dim_;
  double kappa_;
  double mu_s_;
};

/// u = e^{-t} (sin^2(pi x) sin(2 pi y), -sin(2 pi x) sin^2(pi y)),
/// p = e^{-t} cos(pi x) cos(pi y).
class Manufactured2D final : public ExactSolution {
 public:
  Manufactured2D(double kappa = 1.0, double mu_s = 1.0) : ExactSolution(2, kappa, mu_s) {}

  Vec3 u(double t, const Point& x) const override {
    const double e = std::exp(-t);
    const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
    return {e * sx * sx * std::sin(two_pi * x[1]), -e * std::sin(two_pi * x[0]) * sy * sy, 0.0};
  }
  Mat3 grad_u(double t, const Point& x) const override {
    const double e = std::exp(-t);
    const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
    const double s2x = std::sin(two_pi * x[0]), s2y = std::sin(two_pi * x[1]);
    const double c2x = std::cos(two_pi * x[0]), c2y = std::cos(two_pi * x[1]);
    Mat3 g{};
    g[0][0] = e * pi * s2x * s2y;
    g[0][1] = e * sx * sx * two_pi * c2y;
    g[1][0] = -e * two_pi * c2x * sy * sy;
    g[1][1] = -e * s2x * pi * s2y;
    return g;
  }
  Vec3 laplacian_u(double t, const Point& x) const override {
    // d2/dx2 sin^2(pi x) = 2 pi^2 cos(2 pi x); d2/dx2 sin(2 pi x) = -4 pi^2 sin(2 pi x)
    const double e = std::exp(-t);
    const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
    const double s2x = std::sin(two_pi * x[0]), s2y = std::sin(two_pi * x[1]);
    const double c2x = std::cos(two_pi * x[0]), c2y = std::cos(two_pi * x[1]);
    const double pi2 = pi * pi;
    return {e * (2.0 * pi2 * c2x * s2y - 4.0 * pi2 * sx * sx * s2y),
            -e * (-4.0 * pi2 * s2x * sy * sy + 2.0 * pi2 * s2x * c2y), 0.0};
  }
  Vec3 du_dt(double t, const Point& x) const override {
    Vec3 v = u(t, x);
    for (double& vi : v) vi = -vi;
    return v;
  }
  double p(double t, const Point& x) const override {
    return std::exp(-t) * std::cos(pi * x[0]) * std::cos(pi * x[1]);
  }
  Vec3 grad_p(double t, const Point& x) const override {
    const double e = std::exp(-t);
    return {-e * pi * std::sin(pi * x[0]) * std::cos(pi * x[1]), -e * pi * std::cos(pi * x[0]) * std::sin(pi * x[1]),
            0.0};
  }

 private:
  static constexpr double pi = std::numbers::pi;
};

/// Beltrami velocity and pressure on the unit cube.
class Manufactured3D final : public ExactSolution {
 public:
  static constexpr double p_bar = 7.63958172715414;

  Manufactured3D(double kappa = 1.0, double mu_s = 1.0) : ExactSolution(3, kappa, mu_s) {}

  Vec3 u(double t, const Point& q) const override {
    const double x = q[0], y = q[1], z = q[2];
    const double e = std::exp(-t);
    return {-e * (std::exp(x) * std::sin(y + z) + std::exp(z) * std::cos(x + y)),
            -e * (std::exp(y) * std::sin(x + z) + std::exp(x) * std::cos(y + z)),
            -e * (std::exp(z) * std::sin(x + y) + std::exp(y) * std::cos(x + z))};
  }
  Mat3 grad_u(double t, const Point& q) const override {
    const double x = q[0], y = q[1], z = q[2];
    const double e = -std::exp(-t);
    const double ex = std::exp(x), ey = std::exp(y), ez = std::exp(z);
    const double sxy = std::sin(x + y), syz = std::sin(y + z), sxz = std::sin(x + z);
    const double cxy = std::cos(x + y), cyz = std::cos(y + z), cxz = std::cos(x + z);
    Mat3 g{};
    g[0] = {e * (ex * syz - ez * sxy), e * (ex * cyz - ez * sxy), e * (ex * cyz + ez * cxy)};
    g[1] = {e * (ey * cxz + ex * cyz), e * (ey * sxz - ex * syz), e * (ey * cxz - ex * syz)};
    g[2] = {e * (ez * cxy - ey * sxz), e * (ez * cxy + ey * cxz), e * (ez * sxy - ey * sxz)};
    return g;
  }
  /// Each component is a sum of e^{x_i} trig(x_j + x_k) terms, all with
  /// Laplacian equal to minus themselves.
  Vec3 laplacian_u(double t, const Point& x) const override {
    Vec3 v = u(t, x);
    for (double& vi : v) vi = -vi;
    return v;
  }
  Vec3 du_dt(double t, const Point& x) const override {
    Vec3 v = u(t, x);
    for (double& vi : v) vi = -vi;
    return v;
  }
  /// The bracket of the pressure before the -e^{-2t} prefactor and without
  /// the constant p_bar.
  static double pressure_bracket(const Point& q) {
    const double x = q[0], y = q[1], z = q[2];
    return std::exp(x + z) * std::sin(y + z) * std::cos(x + y) + std::exp(x + y) * std::sin(x + z) * std::cos(y + z) +
           std::exp(y + z) * std::sin(x + y) * std::cos(x + z) + 0.5 * std::exp(2.0 * x) + 0.5 * std::exp(2.0 * y) +
           0.5 * std::exp(2.0 * z);
  }
  double p(double t, const Point& q) const override { return -std::exp(-2.0 * t) * (pressure_bracket(q) - p_bar); }
  Vec3 grad_p(double t, const Point& q) const override {
    const double x = q[0], y = q[1], z = q[2];
    const double sxy = std::sin(x + y), syz = std::sin(y + z), sxz = std::sin(x + z);
    const double cxy = std::cos(x + y), cyz = std::cos(y + z), cxz = std::cos(x + z);
    const double exz = std::exp(x + z), exy = std::exp(x + y), eyz = std::exp(y + z);
    // T1 = e^{x+z} sin(y+z) cos(x+y), T2 = e^{x+y} sin(x+z) cos(y+z), T3 = e^{y+z} sin(x+y) cos(x+z)
    const Vec3 d1{exz * (syz * cxy - syz * sxy), exz * (cyz * cxy - syz * sxy), exz * (syz * cxy + cyz * cxy)};
    const Vec3 d2{exy * (sxz * cyz + cxz * cyz), exy * (sxz * cyz - sxz * syz), exy * (cxz * cyz - sxz * syz)};
    const Vec3 d3{eyz * (cxy * cxz - sxy * sxz), eyz * (sxy * cxz + cxy * cxz), eyz * (sxy * cxz - sxy * sxz)};
    const double s = -std::exp(-2.0 * t);
    return {s * (d1[0] + d2[0] + d3[0] + std::exp(2.0 * x)), s * (d1[1] + d2[1] + d3[1] + std::exp(2.0 * y)),
            s * (d1[2] + d2[2] + d3[2] + std::exp(2.0 * z))};
  }
};

inline std::unique_ptr<ExactSolution> make_manufactured(int dim, double kappa, double mu_s) {
  if (dim == 2) return std::make_unique<Manufactured2D>(kappa, mu_s);
  if (dim == 3) return std::make_unique<Manufactured3D>(kappa, mu_s);
  throw std::invalid_argument("make_manufactured: dim must be 2 or 3");
}

}  // namespace chns
