#pragma once

#include <cmath>
#include <functional>
#include <optional>

#include "chns/ch_step.hpp"
#include "chns/forms.hpp"
#include "chns/params.hpp"

namespace chns {

/// Discrete fields at one time level. p, phi, S and zeta live in the degree
/// k-1 space; everything else in degree k.
struct SimState {
  int step = 0;
  double time = 0.0;
  Vector c, mu, u, v, p, phi, S, zeta;
};

struct DissipationCheck {
  double lhs_decrease = 0.0;    // E^n - E^{n-1}
  double rhs_dissipation = 0.0; // the (non-positive) right-hand side
  bool satisfied = true;
};

struct DiagnosticsRecord {
  int step = 0;
  double time = 0.0;
  double mass = 0.0;
  double energy = 0.0;  // F_h
  double modified_energy = 0.0;
  double dissipation_lhs_decrease = 0.0;
  double dissipation_rhs = 0.0;
  bool dissipation_ok = true;
  double dg_seminorm_mu = 0.0;
  double dg_norm_v = 0.0;
  int newton_iterations = 0;
  double newton_residual = 0.0;
};

/// (c, 1).
inline double mass(const Discretization& d, const Vector& c) { return d.weights_scalar.dot(c); }

/// F_h = 1/2 (u, u) + (Phi(c), 1) + kappa/2 a_diff(c, c).
inline double discrete_energy(const Discretization& d, const Vector& c, const Vector& u, const SchemeParams& p) {
  return 0.5 * u.dot(d.mass_vector * u) + integrate_pointwise(d.scalar, c, Potential::value) +
         0.5 * p.kappa * c.dot(d.a_diff_scalar * c);
}

/// F_h + tau/(2 sigma_chi mu_s) ||S||^2 + tau^2/2 a_diff(zeta, zeta), with the
/// pressure-space a_diff penalty.
inline double modified_energy(const Discretization& d, const SimState& s, const SchemeParams& p) {
  return discrete_energy(d, s.c, s.u, p) + p.tau / (2.0 * p.sigma_chi * p.mu_s) * s.S.dot(d.mass_pressure * s.S) +
         0.5 * p.tau * p.tau * s.zeta.dot(d.a_diff_pressure * s.zeta);
}

inline double dg_seminorm(const Discretization& d, const Vector& w) { return std::sqrt(std::max(0.0, w.dot(d.norm_scalar * w))); }
inline double dg_norm_vector(const Discretization& d, const Vector& v) {
  return std::sqrt(std::max(0.0, v.dot(d.norm_vector * v)));
}

inline constexpr double K_alpha = 0.5;
inline constexpr double K_D = 0.5;

/// Modified-energy decrease between consecutive states and the dissipation
/// bound -(K_alpha tau/2)|mu|^2 - (K_D mu_s tau/2)||v||^2 - 1/4 ||v - u_prev||^2.
/// Satisfied when the energy does not increase by more than `rel_tol` times
/// its previous magnitude.
inline DissipationCheck dissipation_check(const Discretization& d, const SimState& prev, const SimState& next,
                                          const SchemeParams& p, double rel_tol = 1e-10) {
  const double e0 = modified_energy(d, prev, p);
  const double e1 = modified_energy(d, next, p);
  DissipationCheck out;
  out.lhs_decrease = e1 - e0;
  const double mu2 = next.mu.dot(d.norm_scalar * next.mu);
  const double v2 = next.v.dot(d.norm_vector * next.v);
  const Vector dv = next.v - prev.u;
  out.rhs_dissipation =
      -(K_alpha * p.tau / 2.0) * mu2 - (K_D * p.mu_s * p.tau / 2.0) * v2 - 0.25 * dv.dot(d.mass_vector * dv);
  out.satisfied = out.lhs_decrease <= rel_tol * std::abs(e0);
  return out;
}

/// Tables of a space's basis on a refined volume rule (n_quad + extra points
/// per direction), for error norms.
struct ErrorQuadrature {
  QuadratureRule rule;
  BasisTable table;

  ErrorQuadrature(const DgSpace& s, int extra = 2)
      : rule(tensor_gauss_legendre(s.dim(), s.n_quad() + extra)), table(s.reference().basis.tabulate(rule.points)) {}
};

struct ErrorNorms {
  double l2 = 0.0;
  std::optional<double> dg;
};

/// L2 error of a scalar or vector field against `exact` (returning a double
/// or an array). With `exact_grad` (scalar fields only), also the DG error
/// |e|_DG using the space's interior-face penalty `penalty`/h.
template <class F>
ErrorNorms error_norms(const DgSpace& s, const Vector& field, const F& exact,
                       const std::function<std::array<double, 3>(const Point&)>& exact_grad = {}, double penalty = 1.0,
                       double h = 1.0) {
  const ErrorQuadrature eq(s);
  const auto nq = static_cast<Eigen::Index>(eq.rule.size());
  double l2 = 0.0, grad2 = 0.0;
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const double J = s.det_jacobian(e);
    for (int c = 0; c < s.n_components(); ++c) {
      const Vector vals = eq.table.phi * local_coeffs(s, field, e, c);
      std::array<Vector, 3> grads;
      if (exact_grad)
        for (int a = 0; a < s.dim(); ++a) grads[a] = s.grad_scale(e, a) * (eq.table.dphi[a] * local_coeffs(s, field, e, c));
      for (Eigen::Index q = 0; q < nq; ++q) {
        const Point x = s.mesh().to_physical(e, eq.rule.points[q]);
        double ex;
        if constexpr (detail::returns_scalar<F>) {
          ex = exact(x);
        } else {
          ex = exact(x)[c];
        }
        const double diff = vals[q] - ex;
        l2 += J * eq.rule.weights[q] * diff * diff;
        if (exact_grad) {
          const auto g = exact_grad(x);
          for (int a = 0; a < s.dim(); ++a) {
            const double dg = grads[a][q] - g[a];
            grad2 += J * eq.rule.weights[q] * dg * dg;
          }
        }
      }
    }
  }
  ErrorNorms out;
  out.l2 = std::sqrt(l2);
  if (exact_grad) {
    // The exact solution has no jumps, so the jump of the error is the jump
    // of the discrete field.
    const SparseMatrix J = detail::sipg(s, penalty, 0.0, h, false, false);
    const SparseMatrix V = detail::sipg(s, 0.0, 0.0, h, false, false);  // volume part only
    const double jumps = field.dot((J - V) * field);
    out.dg = std::sqrt(grad2 + std::max(0.0, jumps));
  }
  return out;
}

}  // namespace chns
