#pragma once

#include <stdexcept>

#include "chns/forms.hpp"
#include "chns/params.hpp"
#include "chns/sparse_linalg.hpp"

namespace chns {

/// Data entering the velocity step. Empty members mean zero.
struct VelocitySources {
  Vector f_u;                 // load vector (f_u, theta)
  VectorFunction g;           // velocity boundary datum at the new time
  VectorFunction g_prev;      // boundary datum of the advecting velocity
};

/// Velocity step solver: (M/tau + A_C(u_prev, u_prev) + mu_s A_D) v =
///   M u_prev / tau + b_P(., p_prev) + b_I(c_prev, mu_new, .) + boundary lifting + f_u.
/// The operator pattern is fixed, so the symbolic factorization is reused.
class VelocitySolver {
 public:
  Vector solve(const Discretization& d, const Vector& u_prev, const Vector& p_prev, const Vector& c_prev,
               const Vector& mu_new, const VelocitySources& src, const SchemeParams& p) {
    const ConvectionSystem conv = assemble_a_C(d.vector, u_prev, u_prev, src.g, src.g_prev);
    const SparseMatrix A = d.mass_vector / p.tau + conv.matrix + p.mu_s * d.a_D;
    Vector rhs = d.mass_vector * u_prev / p.tau + d.b_P.transpose() * p_prev +
                 b_I_load(d.scalar, c_prev, mu_new, d.vector) + conv.rhs;
    if (src.g) rhs += p.mu_s * dirichlet_rhs_a_D(d.vector, src.g, d.penalties.sigma_bdy, d.h);
    if (src.f_u.size() != 0) rhs += src.f_u;
    lu_.factorize(A, nullptr, lu_.ready() && lu_.size() == A.rows());
    return lu_.solve(rhs);
  }

 private:
  LuSolver lu_;
};

inline Vector velocity_step(const Discretization& d, const Vector& u_prev, const Vector& p_prev, const Vector& c_prev,
                            const Vector& mu_new, const VelocitySources& src, const SchemeParams& p) {
  VelocitySolver solver;
  return solver.solve(d, u_prev, p_prev, c_prev, mu_new, src, p);
}

/// Boundary part of b_P(v, q) when the exterior trace of v is g: the
/// functional q -> int_{boundary} q g.n, with its constant component removed
/// so that it vanishes on q = 1 exactly.
inline Vector pressure_boundary_lift(const Discretization& d, const VectorFunction& g) {
  Vector lift = dirichlet_rhs_b_P(d.pressure, g);
  if (!g) return lift;
  const Vector one = constant_field(d.pressure, 1.0);
  const double volume = d.weights_pressure.dot(one);
  lift -= (lift.dot(one) / volume) * d.weights_pressure;
  return lift;
}

/// Factorized zero-mean pressure Poisson operator a_diff on the degree k-1
/// space, reused every step.
class PressureSolver {
 public:
  explicit PressureSolver(const Discretization& d) : lu_(d.a_diff_pressure, &d.weights_pressure) {}

  /// a_diff(phi, q) = -(1/tau) (b_P(v, q) + lift(q)), (phi, 1) = 0.
  Vector solve(const Discretization& d, const Vector& v, const Vector& lift, double tau) const {
    Vector rhs = d.b_P * v;
    if (lift.size() != 0) rhs += lift;
    return lu_.solve(-rhs / tau, 0.0);
  }

 private:
  LuSolver lu_;
};

inline Vector pressure_poisson_step(const Discretization& d, const PressureSolver& solver, const Vector& v,
                                    const SchemeParams& p, const Vector& lift = {}) {
  return solver.solve(d, v, lift, p.tau);
}

struct PressureUpdate {
  Vector p;
  Vector S_increment;
};

/// (p, chi) = (p_prev, chi) + (phi, chi) - sigma_chi mu_s b_P(v, chi). The
/// increment of S is sigma_chi mu_s (div_h v - R_h[v]) = sigma_chi mu_s M^{-1} B v.
inline PressureUpdate pressure_update(const Discretization& d, const Vector& p_prev, const Vector& phi,
                                      const Vector& v, const SchemeParams& p, const Vector& lift = {}) {
  Vector bv = d.b_P * v;
  if (lift.size() != 0) bv += lift;
  PressureUpdate out;
  out.S_increment = p.sigma_chi * p.mu_s * (d.inv_mass_pressure * bv);
  out.p = p_prev + phi - out.S_increment;
  return out;
}

/// (u, theta) = (v, theta) + tau b_P(theta, phi).
inline Vector velocity_update(const Discretization& d, const Vector& v, const Vector& phi, const SchemeParams& p) {
  return v + p.tau * (d.inv_mass_vector * (d.b_P.transpose() * phi));
}

}  // namespace chns
