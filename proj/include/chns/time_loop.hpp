#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "chns/ch_step.hpp"
#include "chns/diagnostics.hpp"
#include "chns/forms.hpp"
#include "chns/manufactured.hpp"
#include "chns/ns_step.hpp"
#include "chns/params.hpp"

namespace chns {

using TimeScalarFunction = std::function<double(double, const Point&)>;
using TimeVectorFunction = std::function<std::array<double, 3>(double, const Point&)>;
using TimeBoundaryFunction = std::function<double(double, const Point&, const Point&)>;

/// Initial data and optional time-dependent data. Empty members mean zero.
struct Problem {
  std::string name = "custom";
  std::function<Vector(const Discretization&)> initial_c;
  std::function<Vector(const Discretization&)> initial_u;
  TimeScalarFunction f_c;
  TimeVectorFunction f_u;
  TimeVectorFunction g;            // velocity boundary datum
  TimeBoundaryFunction flux_c;     // prescribed grad(mu).n - c u.n on the boundary
  TimeBoundaryFunction flux_mu;    // prescribed kappa grad(c).n on the boundary
};

/// Failure in one stage of a time step.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, int step, const std::string& what)
      : std::runtime_error("step " + std::to_string(step) + ", " + stage + ": " + what), stage_(stage), step_(step) {}
  const std::string& stage() const { return stage_; }
  int step() const { return step_; }

 private:
  std::string stage_;
  int step_;
};

/// c constant, u = 0, no data.
inline Problem stationary_problem(double c_value) {
  Problem pr;
  pr.name = "stationary";
  pr.initial_c = [c_value](const Discretization& d) { return constant_field(d.scalar, c_value); };
  return pr;
}

/// Elementwise-constant field with values drawn independently and uniformly
/// from {-1, +1}, one draw per element in element order.
inline Vector spinodal_initial_field(const DgSpace& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double phi0 = std::pow(0.5, 0.5 * s.dim());
  Vector c = Vector::Zero(s.size());
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) c[s.dof(e, 0, 0)] = ((rng() >> 63) ? 1.0 : -1.0) / phi0;
  return c;
}

inline Problem spinodal_problem(std::uint64_t seed) {
  Problem pr;
  pr.name = "spinodal";
  pr.initial_c = [seed](const Discretization& d) { return spinodal_initial_field(d.scalar, seed); };
  return pr;
}

/// Manufactured problem: elliptic projection of c(0), L2 projection of u(0),
/// forcing in the c and velocity equations, Neumann flux data for c and mu,
/// and (3D only) Dirichlet velocity data.
inline Problem manufactured_problem(std::shared_ptr<const ExactSolution> ex) {
  Problem pr;
  pr.name = ex->dim() == 2 ? "manufactured-2d" : "manufactured-3d";
  pr.initial_c = [ex](const Discretization& d) {
    return elliptic_project(
        d.scalar, [&](const Point& x) { return ex->c(0.0, x); }, [&](const Point& x) { return ex->grad_c(0.0, x); },
        d.a_diff_scalar);
  };
  pr.initial_u = [ex](const Discretization& d) {
    return l2_project(d.vector, [&](const Point& x) { return ex->u(0.0, x); });
  };
  pr.f_c = [ex](double t, const Point& x) { return ex->forcing_c(t, x); };
  pr.f_u = [ex](double t, const Point& x) { return ex->forcing_u(t, x); };
  if (ex->dim() == 3) pr.g = [ex](double t, const Point& x) { return ex->u(t, x); };
  pr.flux_c = [ex](double t, const Point& x, const Point& n) { return ex->flux_c(t, x, n); };
  pr.flux_mu = [ex](double t, const Point& x, const Point& n) { return ex->flux_mu(t, x, n); };
  return pr;
}

/// Time stepper holding the discretization, the factorized pressure
/// operator and the reusable Newton and velocity solvers.
class Simulation {
 public:
  Simulation(std::shared_ptr<const Mesh> mesh, const SchemeParams& params, Problem problem, NewtonConfig newton = {})
      : params_(checked(params, *mesh)),
        problem_(std::move(problem)),
        disc_(mesh, params.degree, params.penalties),
        pressure_(disc_),
        ch_(newton) {
    initialize();
  }

  const Discretization& discretization() const { return disc_; }
  const SchemeParams& params() const { return params_; }
  const Problem& problem() const { return problem_; }
  const SimState& state() const { return state_; }
  const NewtonReport& last_newton() const { return last_newton_; }

  /// Diagnostics of the current state; the dissipation fields compare it
  /// with the previous one.
  DiagnosticsRecord record() const {
    DiagnosticsRecord r;
    r.step = state_.step;
    r.time = state_.time;
    r.mass = mass(disc_, state_.c);
    r.energy = discrete_energy(disc_, state_.c, state_.u, params_);
    r.modified_energy = modified_energy(disc_, state_, params_);
    r.dg_seminorm_mu = dg_seminorm(disc_, state_.mu);
    r.dg_norm_v = dg_norm_vector(disc_, state_.v);
    r.newton_iterations = last_newton_.iterations;
    r.newton_residual = last_newton_.residual;
    if (state_.step > 0) {
      const DissipationCheck dc = dissipation_check(disc_, previous_, state_, params_);
      r.dissipation_lhs_decrease = dc.lhs_decrease;
      r.dissipation_rhs = dc.rhs_dissipation;
      r.dissipation_ok = dc.satisfied;
    }
    return r;
  }

  /// One full step: Cahn-Hilliard, velocity, pressure Poisson, updates.
  void advance() {
    const Discretization& d = disc_;
    const int n = state_.step + 1;
    const double t_new = n * params_.tau;
    const double t_old = state_.step * params_.tau;

    ChSources ch_src;
    try {
      ch_src = ch_sources(t_new);
    } catch (const std::exception& e) {
      throw StageError("cahn-hilliard data", n, e.what());
    }
    ChResult ch;
    try {
      ch = ch_.solve(d, state_.c, state_.u, state_.c, state_.mu, ch_src, params_);
    } catch (const std::exception& e) {
      throw StageError("cahn-hilliard", n, e.what());
    }

    SimState next;
    next.step = n;
    next.time = t_new;
    next.c = std::move(ch.c);
    next.mu = std::move(ch.mu);
    VelocitySources vsrc;
    Vector lift;
    try {
      if (problem_.f_u) {
        const auto& f = problem_.f_u;
        vsrc.f_u = load_vector(d.vector, [&](const Point& x) { return f(t_new, x); });
      }
      if (problem_.g) {
        const auto& g = problem_.g;
        vsrc.g = [&g, t_new](const Point& x) { return g(t_new, x); };
        vsrc.g_prev = [&g, t_old](const Point& x) { return g(t_old, x); };
      }
      next.v = velocity_.solve(d, state_.u, state_.p, state_.c, next.mu, vsrc, params_);
    } catch (const std::exception& e) {
      throw StageError("velocity", n, e.what());
    }
    try {
      lift = pressure_boundary_lift(d, vsrc.g);
      next.phi = pressure_poisson_step(d, pressure_, next.v, params_, lift);
    } catch (const std::exception& e) {
      throw StageError("pressure poisson", n, e.what());
    }
    const PressureUpdate pu = pressure_update(d, state_.p, next.phi, next.v, params_, lift);
    next.p = pu.p;
    next.S = state_.S + pu.S_increment;
    next.zeta = next.p + next.S;
    next.u = velocity_update(d, next.v, next.phi, params_);

    last_newton_ = ch.report;
    previous_ = std::move(state_);
    state_ = std::move(next);
  }

 private:
  static const SchemeParams& checked(const SchemeParams& p, const Mesh& mesh) {
    p.validate();
    if (p.dim != mesh.dim()) throw std::invalid_argument("Simulation: params.dim does not match the mesh");
    return p;
  }

  ChSources ch_sources(double t) const {
    ChSources src;
    const Discretization& d = disc_;
    if (problem_.f_c) {
      const auto& f = problem_.f_c;
      src.f_c = load_vector(d.scalar, [&](const Point& x) { return f(t, x); });
    }
    if (problem_.flux_c) {
      const auto& g = problem_.flux_c;
      const Vector b = boundary_load(d.scalar, [&](const Point& x, const Point& nrm) { return g(t, x, nrm); });
      src.f_c = src.f_c.size() ? Vector(src.f_c + b) : b;
    }
    if (problem_.flux_mu) {
      const auto& g = problem_.flux_mu;
      src.f_mu = boundary_load(d.scalar, [&](const Point& x, const Point& nrm) { return g(t, x, nrm); });
    }
    return src;
  }

  void initialize() {
    const Discretization& d = disc_;
    state_.step = 0;
    state_.time = 0.0;
    state_.c = problem_.initial_c ? problem_.initial_c(d) : Vector(Vector::Zero(d.scalar.size()));
    state_.u = problem_.initial_u ? problem_.initial_u(d) : Vector(Vector::Zero(d.vector.size()));
    state_.v = state_.u;
    state_.p = Vector::Zero(d.pressure.size());
    state_.phi = state_.p;
    state_.S = state_.p;
    state_.zeta = state_.p;
    state_.mu = initial_chemical_potential(d, state_.c, params_, ch_sources(0.0).f_mu);
    previous_ = state_;
  }

  SchemeParams params_;
  Problem problem_;
  Discretization disc_;
  PressureSolver pressure_;
  ChSolver ch_;
  VelocitySolver velocity_;
  SimState state_;
  SimState previous_;
  NewtonReport last_newton_;
};

using StepObserver = std::function<void(int, const SimState&, const DiagnosticsRecord&)>;

struct RunResult {
  SimState final_state;
  std::vector<DiagnosticsRecord> series;  // starts with the initial state
  std::string error;                      // empty on success

  bool ok() const { return error.empty(); }
};

/// Runs N_T = T / tau steps. Errors stop the run and are returned together
/// with the partial time series.
inline RunResult run(Simulation& sim, const StepObserver& observer = {}) {
  RunResult out;
  out.series.push_back(sim.record());
  if (observer) observer(0, sim.state(), out.series.back());
  const int n_steps = sim.params().n_steps();
  try {
    for (int n = 1; n <= n_steps; ++n) {
      sim.advance();
      out.series.push_back(sim.record());
      if (observer) observer(n, sim.state(), out.series.back());
    }
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  out.final_state = sim.state();
  return out;
}

inline RunResult run(std::shared_ptr<const Mesh> mesh, const SchemeParams& params, const Problem& problem,
                     const StepObserver& observer = {}, const NewtonConfig& newton = {}) {
  Simulation sim(std::move(mesh), params, problem, newton);
  return run(sim, observer);
}

}  // namespace chns
