#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "chns/forms.hpp"
#include "chns/params.hpp"
#include "chns/sparse_linalg.hpp"

namespace chns {

/// Ginzburg-Landau double well 1/4 (1-c)^2 (1+c)^2 and its convex/concave
/// split Phi_+ = (1 + c^4)/4, Phi_- = -c^2/2.
struct Potential {
  static double value(double c) {
    const double a = 1.0 - c * c;
    return 0.25 * a * a;
  }
  static double derivative(double c) { return c * c * c - c; }
  static double second_derivative(double c) { return 3.0 * c * c - 1.0; }
  static double convex_value(double c) { return 0.25 * (1.0 + c * c * c * c); }
  static double concave_value(double c) { return -0.5 * c * c; }
  static double convex_derivative(double c) { return c * c * c; }
  static double concave_derivative(double c) { return -c; }
  static double convex_second_derivative(double c) { return 3.0 * c * c; }
};

struct NewtonConfig {
  double abs_tolerance = 1e-11;  // on the residual infinity norm
  int max_iterations = 50;
  int max_halvings = 20;
  /// Keep the factorized Jacobian across iterations and steps while each
  /// update reduces the residual by at least `reuse_contraction`; otherwise
  /// refactorize at the current iterate.
  bool reuse_jacobian = true;
  double reuse_contraction = 0.25;

  void validate() const {
    if (!(abs_tolerance > 0.0)) throw std::invalid_argument("NewtonConfig: abs_tolerance must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("NewtonConfig: max_iterations must be >= 1");
    if (max_halvings < 0) throw std::invalid_argument("NewtonConfig: max_halvings must be >= 0");
  }
};

struct NewtonReport {
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> history;  // residual infinity norm, starting with the initial guess
};

class NewtonError : public std::runtime_error {
 public:
  NewtonError(const std::string& what, Vector c, Vector mu, NewtonReport report)
      : std::runtime_error(what), c_(std::move(c)), mu_(std::move(mu)), report_(std::move(report)) {}
  const Vector& last_c() const { return c_; }
  const Vector& last_mu() const { return mu_; }
  const NewtonReport& report() const { return report_; }

 private:
  Vector c_, mu_;
  NewtonReport report_;
};

/// Load vectors added to the two Cahn-Hilliard equations: `f_c` on the
/// right of the c equation and `f_mu` on the right of the mu equation.
/// Empty vectors mean zero.
struct ChSources {
  Vector f_c;
  Vector f_mu;
};

namespace detail {

inline void subtract_if(Vector& r, const Vector& f) {
  if (f.size() != 0) r -= f;
}

/// Residual with the explicit advection load precomputed.
inline Vector ch_residual_with(const Discretization& d, const Vector& c, const Vector& mu, const Vector& c_prev,
                               const Vector& advection, const ChSources& src, const SchemeParams& p) {
  const Eigen::Index n = d.scalar.size();
  Vector r(2 * n);
  Vector r1 = d.mass_scalar * (c - c_prev) / p.tau + d.a_diff_scalar * mu + advection;
  subtract_if(r1, src.f_c);
  Vector r2 = nonlinear_load(d.scalar, c, Potential::convex_derivative) - d.mass_scalar * c_prev +
              p.kappa * (d.a_diff_scalar * c) - d.mass_scalar * mu;
  subtract_if(r2, src.f_mu);
  r.head(n) = r1;
  r.tail(n) = r2;
  return r;
}

}  // namespace detail

/// Block residual of the convex-split Cahn-Hilliard step at (c, mu).
inline Vector ch_residual(const Discretization& d, const Vector& c, const Vector& mu, const Vector& c_prev,
                          const Vector& u_prev, const ChSources& src, const SchemeParams& p) {
  const Vector adv = a_adv_load(d.scalar, c_prev, d.vector, u_prev);
  return detail::ch_residual_with(d, c, mu, c_prev, adv, src, p);
}

/// [[M/tau, A], [W(3c^2) + kappa A, -M]] with unknown ordering (c, mu).
inline SparseMatrix ch_jacobian(const Discretization& d, const Vector& c, const SchemeParams& p) {
  const Eigen::Index n = d.scalar.size();
  const SparseMatrix W = assemble_weighted_mass(d.scalar, c, Potential::convex_second_derivative);
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(2 * d.a_diff_scalar.nonZeros() + W.nonZeros() + 2 * n));
  auto put = [&](const SparseMatrix& A, Eigen::Index r0, Eigen::Index c0, double s) {
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) t.emplace_back(r0 + it.row(), c0 + it.col(), s * it.value());
  };
  put(d.mass_scalar, 0, 0, 1.0 / p.tau);
  put(d.a_diff_scalar, 0, n, 1.0);
  put(W, n, 0, 1.0);
  put(d.a_diff_scalar, n, 0, p.kappa);
  put(d.mass_scalar, n, n, -1.0);
  SparseMatrix J(2 * n, 2 * n);
  J.setFromTriplets(t.begin(), t.end());
  J.makeCompressed();
  return J;
}

/// mu solving the second equation with c on both sides set to c:
/// (mu, phi) = (Phi'(c), phi) + kappa a_diff(c, phi) - f_mu(phi).
inline Vector initial_chemical_potential(const Discretization& d, const Vector& c, const SchemeParams& p,
                                         const Vector& f_mu = {}) {
  Vector rhs = nonlinear_load(d.scalar, c, Potential::derivative) + p.kappa * (d.a_diff_scalar * c);
  detail::subtract_if(rhs, f_mu);
  return d.inv_mass_scalar * rhs;
}

struct ChResult {
  Vector c;
  Vector mu;
  NewtonReport report;
};

/// Newton solver for the Cahn-Hilliard step. The Jacobian pattern never
/// changes, so the symbolic LU analysis is kept between calls.
class ChSolver {
 public:
  explicit ChSolver(NewtonConfig config = {}) : config_(config) {
    config_.validate();
    // Newton absorbs the small linear-solve error.
    lu_.set_refinement_steps(0);
  }

  ChResult solve(const Discretization& d, const Vector& c_prev, const Vector& u_prev, const Vector& c_guess,
                 const Vector& mu_guess, const ChSources& src, const SchemeParams& p) {
    const Eigen::Index n = d.scalar.size();
    const Vector adv = a_adv_load(d.scalar, c_prev, d.vector, u_prev);
    Vector x(2 * n);
    x.head(n) = c_guess;
    x.tail(n) = mu_guess;
    auto residual = [&](const Vector& y) {
      return detail::ch_residual_with(d, y.head(n), y.tail(n), c_prev, adv, src, p);
    };
    Vector r = residual(x);
    NewtonReport report;
    report.history.push_back(r.lpNorm<Eigen::Infinity>());
    bool stale = !config_.reuse_jacobian || !lu_.ready() || lu_.size() != 2 * n || factor_tau_ != p.tau;
    for (int it = 1; it <= config_.max_iterations; ++it) {
      const double rnorm = r.lpNorm<Eigen::Infinity>();
      Vector trial, rt;
      bool accepted = false;
      for (;;) {
        if (stale) {
          lu_.factorize(ch_jacobian(d, x.head(n), p), nullptr, lu_.ready() && lu_.size() == 2 * n);
          factor_tau_ = p.tau;
          stale = false;
          fresh_ = true;
        }
        const Vector delta = lu_.solve(-r);
        double lambda = 1.0;
        const int halvings = fresh_ ? config_.max_halvings : 0;
        for (int h = 0; h <= halvings; ++h) {
          trial = x + lambda * delta;
          rt = residual(trial);
          const double tn = rt.lpNorm<Eigen::Infinity>();
          const bool good = fresh_ ? (tn < rnorm || tn <= config_.abs_tolerance)
                                   : (tn <= config_.reuse_contraction * rnorm || tn <= config_.abs_tolerance);
          if (good) {
            accepted = true;
            break;
          }
          lambda *= 0.5;
        }
        if (accepted || fresh_) break;
        stale = true;  // old Jacobian not good enough here
      }
      report.iterations = it;
      if (!accepted) {
        report.residual = rnorm;
        throw NewtonError("Newton: no residual decrease after damping", x.head(n), x.tail(n), report);
      }
      x = trial;
      r = rt;
      fresh_ = false;
      stale = !config_.reuse_jacobian;
      report.residual = r.lpNorm<Eigen::Infinity>();
      report.history.push_back(report.residual);
      if (report.residual <= config_.abs_tolerance) return {x.head(n), x.tail(n), report};
    }
    throw NewtonError("Newton: not converged in " + std::to_string(config_.max_iterations) + " iterations",
                      x.head(n), x.tail(n), report);
  }

  const NewtonConfig& config() const { return config_; }

 private:
  NewtonConfig config_;
  LuSolver lu_;
  double factor_tau_ = 0.0;
  bool fresh_ = false;  // factorization taken at the current iterate
};

/// One Cahn-Hilliard step from the initial guess (c_prev, mu_guess).
inline ChResult ch_step(const Discretization& d, const Vector& c_prev, const Vector& u_prev, const Vector& mu_guess,
                        const ChSources& src, const SchemeParams& p, const NewtonConfig& config = {}) {
  ChSolver solver(config);
  return solver.solve(d, c_prev, u_prev, c_prev, mu_guess, src, p);
}

}  // namespace chns
