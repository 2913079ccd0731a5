#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/UmfPackSupport>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace chns {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Thrown when an iterative method fails to reach its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolveMethod { DirectLU, CG, GMRES };

/// Enforces weights^T x = target during a solve.
struct MeanConstraint {
  Vector weights;
  double target = 0.0;
};

struct LinearSolveSpec {
  SolveMethod method = SolveMethod::DirectLU;
  double rel_tolerance = 1e-12;
  int max_iterations = 5000;
  std::optional<MeanConstraint> mean_constraint;

  void validate() const {
    if (!(rel_tolerance > 0.0)) throw std::invalid_argument("LinearSolveSpec: rel_tolerance must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("LinearSolveSpec: max_iterations must be >= 1");
  }
};

inline double max_abs(const SparseMatrix& A) {
  double m = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

/// max |A_ij - A_ji| <= rel_tol * max |A|.
inline bool is_symmetric(const SparseMatrix& A, double rel_tol = 1e-12) {
  if (A.rows() != A.cols()) return false;
  const SparseMatrix At = A.transpose();
  const SparseMatrix D = A - At;
  return max_abs(D) <= rel_tol * std::max(max_abs(A), 1e-300);
}

/// [[A, w], [w^T, 0]]: one Lagrange multiplier for the constraint w^T x = m.
inline SparseMatrix bordered(const SparseMatrix& A, const Vector& w) {
  const Eigen::Index n = A.rows();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(A.nonZeros() + 2 * n));
  for (int k = 0; k < A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i)
    if (w[i] != 0.0) {
      t.emplace_back(i, n, w[i]);
      t.emplace_back(n, i, w[i]);
    }
  SparseMatrix B(n + 1, n + 1);
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

/// Reusable sparse LU factorization (UMFPACK), optionally of the bordered
/// system. Movable; the factored matrix lives on the heap because UMFPACK
/// solves read it again.
class LuSolver {
 public:
  LuSolver() = default;
  explicit LuSolver(const SparseMatrix& A, const Vector* constraint = nullptr) { factorize(A, constraint); }

  /// With `same_pattern`, the symbolic analysis of the previous call is kept.
  void factorize(const SparseMatrix& A, const Vector* constraint = nullptr, bool same_pattern = false) {
    if (A.rows() != A.cols()) throw std::invalid_argument("LuSolver: matrix must be square");
    if (!impl_) {
      impl_ = std::make_unique<Impl>();
      same_pattern = false;
    }
    impl_->lu.umfpackControl()(UMFPACK_IRSTEP) = refinement_steps_;
    n_ = A.rows();
    constrained_ = constraint != nullptr;
    if (constrained_) {
      if (constraint->size() != n_) throw std::invalid_argument("LuSolver: constraint length mismatch");
      impl_->matrix = bordered(A, *constraint);
    } else {
      impl_->matrix = A;
    }
    impl_->matrix.makeCompressed();
    if (!same_pattern) impl_->lu.analyzePattern(impl_->matrix);
    impl_->lu.factorize(impl_->matrix);
    if (impl_->lu.info() != Eigen::Success)
      throw SingularMatrixError("LuSolver: factorization failed (singular matrix)");
  }

  /// Solves A x = b (and w^T x = target when constrained).
  Vector solve(const Vector& b, double target = 0.0) const {
    if (!impl_) throw std::logic_error("LuSolver: not factorized");
    if (b.size() != n_) throw std::invalid_argument("LuSolver: right-hand side length mismatch");
    Vector x;
    if (!constrained_) {
      x = impl_->lu.solve(b);
    } else {
      Vector rhs(n_ + 1);
      rhs.head(n_) = b;
      rhs[n_] = target;
      x = impl_->lu.solve(rhs).head(n_);
    }
    if (!x.allFinite()) throw SingularMatrixError("LuSolver: non-finite solution (singular matrix)");
    return x;
  }

  Eigen::Index size() const { return n_; }
  bool ready() const { return impl_ != nullptr; }

  /// Iterative refinement steps inside each solve (UMFPACK default 2).
  void set_refinement_steps(int steps) { refinement_steps_ = steps; }

 private:
  struct Impl {
    SparseMatrix matrix;
    Eigen::UmfPackLU<SparseMatrix> lu;
  };
  std::unique_ptr<Impl> impl_;
  Eigen::Index n_ = 0;
  bool constrained_ = false;
  int refinement_steps_ = 2;
};

namespace detail {

/// Jacobi-preconditioned CG on op(x) = A x + rho w (w^T x), which is SPD when
/// A is positive semidefinite with a null space not orthogonal to w.
inline Vector constrained_cg(const SparseMatrix& A, const Vector& b, const LinearSolveSpec& spec, const Vector* x0) {
  const Eigen::Index n = A.rows();
  Vector w = Vector::Zero(n);
  double target = 0.0;
  double rho = 0.0;
  if (spec.mean_constraint) {
    w = spec.mean_constraint->weights;
    target = spec.mean_constraint->target;
    rho = max_abs(A) / std::max(w.squaredNorm(), 1e-300);
  }
  auto apply = [&](const Vector& x) -> Vector { return A * x + rho * w * w.dot(x); };
  const Vector rhs = b + rho * w * target;
  Vector diag = A.diagonal() + rho * w.cwiseAbs2();
  for (Eigen::Index i = 0; i < n; ++i)
    if (diag[i] <= 0.0) diag[i] = 1.0;

  Vector x = x0 ? *x0 : Vector::Zero(n);
  Vector r = rhs - apply(x);
  const double bnorm = std::max(rhs.norm(), 1e-300);
  Vector z = r.cwiseQuotient(diag);
  Vector p = z;
  double rz = r.dot(z);
  int it = 0;
  while (r.norm() > spec.rel_tolerance * bnorm) {
    if (++it > spec.max_iterations)
      throw SolverError("CG did not converge, residual " + std::to_string(r.norm() / bnorm), r.norm() / bnorm,
                        spec.max_iterations);
    const Vector Ap = apply(p);
    const double alpha = rz / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    z = r.cwiseQuotient(diag);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return x;
}

}  // namespace detail

/// Solves A x = b per `spec`. With a mean constraint, A may be singular along
/// the constrained direction.
inline Vector solve(const SparseMatrix& A, const Vector& b, const LinearSolveSpec& spec = {},
                    const Vector* initial_guess = nullptr) {
  spec.validate();
  if (A.rows() != A.cols() || A.rows() != b.size()) throw std::invalid_argument("solve: dimension mismatch");
  const Vector* w = spec.mean_constraint ? &spec.mean_constraint->weights : nullptr;
  const double target = spec.mean_constraint ? spec.mean_constraint->target : 0.0;
  switch (spec.method) {
    case SolveMethod::DirectLU: {
      LuSolver lu(A, w);
      return lu.solve(b, target);
    }
    case SolveMethod::CG:
      return detail::constrained_cg(A, b, spec, initial_guess);
    case SolveMethod::GMRES: {
      const SparseMatrix M = w ? bordered(A, *w) : A;
      Vector rhs = b;
      Vector guess = initial_guess ? *initial_guess : Vector::Zero(b.size());
      if (w) {
        rhs.conservativeResize(b.size() + 1);
        rhs[b.size()] = target;
        guess.conservativeResize(b.size() + 1);
        guess[b.size()] = 0.0;
      }
      Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<double>> gmres;
      gmres.setTolerance(spec.rel_tolerance);
      gmres.setMaxIterations(spec.max_iterations);
      gmres.set_restart(200);
      gmres.compute(M);
      Vector x = gmres.solveWithGuess(rhs, guess);
      if (gmres.info() != Eigen::Success) {
        const double res = (M * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
        throw SolverError("GMRES did not converge, residual " + std::to_string(res), res,
                          static_cast<int>(gmres.iterations()));
      }
      return x.head(b.size());
    }
  }
  throw std::invalid_argument("solve: unknown method");
}

/// Minimum Rayleigh quotient of symmetric A over {x : w^T x = 0} (the whole
/// space when w = 0). Shifted inverse iteration on the constrained operator,
/// with the shift kept below the Gershgorin lower bound until the iterate has
/// settled and then moved close to the estimate.
inline double smallest_eigenvalue_on_subspace(const SparseMatrix& A, const Vector& w, double rel_tol = 1e-10,
                                              int max_iterations = 20000) {
  if (!is_symmetric(A, 1e-12)) throw std::invalid_argument("smallest_eigenvalue_on_subspace: matrix not symmetric");
  const Eigen::Index n = A.rows();
  if (w.size() != n) throw std::invalid_argument("smallest_eigenvalue_on_subspace: weight length mismatch");
  const double wnorm = w.norm();
  const bool constrained = wnorm > 0.0;
  const Vector wu = constrained ? Vector(w / wnorm) : Vector::Zero(n);
  auto project = [&](Vector& x) {
    if (constrained) x -= wu * wu.dot(x);
  };

  double gersh_lo = 0.0, scale = 0.0;
  {
    Vector radius = Vector::Zero(n);
    Vector diag = Vector::Zero(n);
    for (int k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
        if (it.row() == it.col())
          diag[it.row()] += it.value();
        else
          radius[it.row()] += std::abs(it.value());
      }
    gersh_lo = (diag - radius).minCoeff();
    scale = std::max((diag + radius).maxCoeff(), std::abs(gersh_lo));
  }
  if (scale == 0.0) return 0.0;

  SparseMatrix I(n, n);
  I.setIdentity();
  auto factor = [&](double shift) {
    const SparseMatrix S = A - shift * I;
    return constrained ? LuSolver(S, &wu) : LuSolver(S);
  };

  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  project(x);
  x.normalize();

  double shift = gersh_lo - 1e-3 * scale;
  LuSolver lu = factor(shift);
  double rq = x.dot(A * x);
  bool refined = false;
  for (int it = 0; it < max_iterations; ++it) {
    Vector y = lu.solve(x);
    project(y);
    x = y / y.norm();
    rq = x.dot(A * x);
    Vector r = A * x - rq * x;
    project(r);
    const double res = r.norm();
    if (res <= 1e-4 * scale && !refined) {
      // Close to an eigenpair reached from below: move the shift next to it.
      shift = rq - std::max(10.0 * res, 1e-8 * scale);
      lu = factor(shift);
      refined = true;
      continue;
    }
    if (refined && res <= rel_tol * scale) return rq;
  }
  throw SolverError("smallest_eigenvalue_on_subspace: inverse iteration did not converge", 0.0, max_iterations);
}

}  // namespace chns
