#include <gtest/gtest.h>

#include "chns/forms.hpp"
#include "chns/sparse_linalg.hpp"
#include "oracle.hpp"

using namespace chns;

namespace {

SparseMatrix dense_to_sparse(const Eigen::MatrixXd& D) { return D.sparseView(); }

SparseMatrix path_laplacian() {
  Eigen::MatrixXd L(3, 3);
  L << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  return dense_to_sparse(L);
}

const SolveMethod kMethods[] = {SolveMethod::DirectLU, SolveMethod::CG, SolveMethod::GMRES};

}  // namespace

TEST(Solve, IdentityReturnsRhs) {
  SparseMatrix I(5, 5);
  I.setIdentity();
  const Vector b = oracle::random_vector(5, 3);
  for (SolveMethod m : kMethods) {
    LinearSolveSpec spec;
    spec.method = m;
    EXPECT_LT((solve(I, b, spec) - b).norm(), 1e-13);
  }
}

TEST(Solve, PathLaplacianWithMeanConstraint) {
  const Vector b = Vector::Map(std::vector<double>{1, 0, -1}.data(), 3);
  for (SolveMethod m : kMethods) {
    LinearSolveSpec spec;
    spec.method = m;
    spec.mean_constraint = MeanConstraint{Vector::Ones(3), 0.0};
    const Vector x = solve(path_laplacian(), b, spec);
    EXPECT_NEAR(x[0], 1.0, 1e-10);
    EXPECT_NEAR(x[1], 0.0, 1e-10);
    EXPECT_NEAR(x[2], -1.0, 1e-10);
  }
}

TEST(Solve, ConstrainedCgOnADiff) {
  const auto mesh = std::make_shared<const Mesh>(build_structured_mesh(Box::unit(2), 6));
  const DgSpace s(mesh, 1);
  const SparseMatrix A = assemble_a_diff(s, 2.0, mesh->edge_length());
  const Vector w = integral_weights(s);
  Vector b = oracle::random_vector(s.size(), 11);
  b -= (b.sum() / s.size()) * Vector::Ones(s.size());
  // remove the component along the constant function's load
  const Vector one = constant_field(s, 1.0);
  b -= (b.dot(one) / w.dot(one)) * w;
  LinearSolveSpec spec;
  spec.method = SolveMethod::CG;
  spec.rel_tolerance = 1e-10;
  spec.mean_constraint = MeanConstraint{w, 0.0};
  const Vector x = solve(A, b, spec);
  EXPECT_LT((A * x - b).norm(), 1e-9 * b.norm());
  EXPECT_NEAR(w.dot(x), 0.0, 1e-12);
}

TEST(Solve, GuessDoesNotChangeAnswer) {
  const Vector b = Vector::Map(std::vector<double>{1, 0, -1}.data(), 3);
  LinearSolveSpec spec;
  spec.method = SolveMethod::GMRES;
  spec.mean_constraint = MeanConstraint{Vector::Ones(3), 0.0};
  const Vector g = oracle::random_vector(3, 4);
  EXPECT_LT((solve(path_laplacian(), b, spec, &g) - solve(path_laplacian(), b, spec)).norm(), 1e-10);
}

TEST(Solve, RejectsBadSpec) {
  LinearSolveSpec spec;
  spec.rel_tolerance = 0.0;
  EXPECT_THROW(solve(path_laplacian(), Vector::Ones(3), spec), std::invalid_argument);
  spec = {};
  spec.max_iterations = 0;
  EXPECT_THROW(solve(path_laplacian(), Vector::Ones(3), spec), std::invalid_argument);
  EXPECT_THROW(solve(path_laplacian(), Vector::Ones(4)), std::invalid_argument);
}

TEST(Solve, SingularWithoutConstraintThrows) {
  EXPECT_THROW(solve(path_laplacian(), Vector::Ones(3)), std::exception);
}

TEST(Eigen, DiagonalMatrix) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 2;
  D(1, 1) = 5;
  EXPECT_NEAR(smallest_eigenvalue_on_subspace(dense_to_sparse(D), Vector::Zero(2)), 2.0, 1e-9);
}

TEST(Eigen, ZeroMatrix) {
  SparseMatrix Z(4, 4);
  EXPECT_EQ(smallest_eigenvalue_on_subspace(Z, Vector::Zero(4)), 0.0);
}

TEST(Eigen, ADiffTwoByTwoMatchesDenseOracle) {
  const auto mesh = std::make_shared<const Mesh>(build_structured_mesh(Box::unit(2), 2));
  const DgSpace s(mesh, 1);
  const SparseMatrix A = assemble_a_diff(s, 4.0, mesh->edge_length());
  const Vector w = integral_weights(s);
  const double lam = smallest_eigenvalue_on_subspace(A, w);
  EXPECT_GT(lam, 0.0);
  // The dense oracle works on the Euclidean complement of w, as does the
  // iteration.
  EXPECT_NEAR(lam, oracle::min_eig_dense(Eigen::MatrixXd(A), w), 1e-8 * std::abs(lam) + 1e-10);
}

TEST(Eigen, IndefiniteMatrix) {
  Eigen::MatrixXd D(3, 3);
  D << 1, 2, 0, 2, 1, 0, 0, 0, 4;
  EXPECT_NEAR(smallest_eigenvalue_on_subspace(dense_to_sparse(D), Vector::Zero(3)), -1.0, 1e-8);
}

TEST(SparseHelpers, Symmetry) {
  EXPECT_TRUE(is_symmetric(path_laplacian()));
  Eigen::MatrixXd D(2, 2);
  D << 1, 2, 3, 4;
  EXPECT_FALSE(is_symmetric(dense_to_sparse(D)));
  EXPECT_DOUBLE_EQ(max_abs(dense_to_sparse(D)), 4.0);
}

TEST(SparseHelpers, AssembledMatricesHaveNoDuplicates) {
  const auto mesh = std::make_shared<const Mesh>(build_structured_mesh(Box::unit(2), 3));
  const DgSpace s(mesh, 2);
  const SparseMatrix A = assemble_a_diff(s, 4.0, mesh->edge_length());
  EXPECT_TRUE(A.isCompressed());
  for (int k = 0; k < A.outerSize(); ++k) {
    int last = -1;
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
      EXPECT_GT(it.row(), last);
      last = static_cast<int>(it.row());
    }
  }
}

TEST(LuSolver, ReusesSymbolicAnalysis) {
  LuSolver lu;
  SparseMatrix A = path_laplacian();
  SparseMatrix I(3, 3);
  I.setIdentity();
  lu.factorize(A + I);
  const Vector b = Vector::Ones(3);
  EXPECT_LT(((A + I) * lu.solve(b) - b).norm(), 1e-14);
  lu.factorize(A + 2.0 * I, nullptr, true);
  EXPECT_LT(((A + 2.0 * I) * lu.solve(b) - b).norm(), 1e-14);
}
