#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "chns/forms.hpp"
#include "oracle.hpp"

using namespace chns;
using std::numbers::pi;

namespace {

std::shared_ptr<const Mesh> unit_mesh(int dim, int n) {
  return std::make_shared<const Mesh>(build_structured_mesh(Box::unit(dim), n));
}

double monomial_integral(int p) { return p % 2 ? 0.0 : 2.0 / (p + 1); }  // over [-1, 1]

}  // namespace

TEST(Quadrature, ExactForTensorPolynomials) {
  for (int dim : {2, 3})
    for (int n = 1; n <= 6; ++n) {
      const QuadratureRule r = tensor_gauss_legendre(dim, n);
      EXPECT_EQ(r.exactness_degree, 2 * n - 1);
      for (int px = 0; px <= r.exactness_degree; ++px)
        for (int py = 0; py <= r.exactness_degree; py += 2) {
          const int pz = dim == 3 ? r.exactness_degree - px % 2 : 0;
          double q = 0.0;
          for (std::size_t i = 0; i < r.size(); ++i)
            q += r.weights[i] * std::pow(r.points[i][0], px) * std::pow(r.points[i][1], py) *
                 (dim == 3 ? std::pow(r.points[i][2], pz) : 1.0);
          const double exact =
              monomial_integral(px) * monomial_integral(py) * (dim == 3 ? monomial_integral(pz) : 1.0);
          EXPECT_NEAR(q, exact, 1e-13 * std::max(1.0, std::abs(exact))) << dim << " " << n << " " << px << py << pz;
        }
    }
}

TEST(Quadrature, WeightsSumToReferenceVolume) {
  for (int dim : {2, 3})
    for (int n = 1; n <= 5; ++n) {
      const QuadratureRule r = tensor_gauss_legendre(dim, n);
      double s = 0.0;
      for (double w : r.weights) s += w;
      EXPECT_NEAR(s, std::pow(2.0, dim), 1e-13);
    }
}

TEST(Quadrature, MatchesGolubWelschNodes) {
  for (int n = 1; n <= 8; ++n) {
    const QuadratureRule r = gauss_legendre(n);
    const oracle::Gauss g = oracle::gauss(n);
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(r.points[i][0], g.x[i], 1e-14);
      EXPECT_NEAR(r.weights[i], g.w[i], 1e-14);
    }
  }
}

TEST(DgSpace, DofCount) {
  for (int dim : {2, 3})
    for (int k : {0, 1, 2, 3})
      for (int nc : {1, dim}) {
        const DgSpace s(unit_mesh(dim, 2), k, nc);
        EXPECT_EQ(s.size(), static_cast<Eigen::Index>(s.mesh().n_elements() * nc * std::pow(k + 1, dim)));
      }
}

TEST(DgSpace, BasisSpansQk) {
  // Every monomial x^a y^b with a, b <= k is reproduced by L2 projection.
  for (int k : {1, 2, 3}) {
    const DgSpace s(unit_mesh(2, 2), k);
    for (int a = 0; a <= k; ++a)
      for (int b = 0; b <= k; ++b) {
        const auto f = [&](const Point& x) { return std::pow(x[0], a) * std::pow(x[1], b); };
        const Vector u = l2_project(s, f);
        for (const Point& x : {Point{0.1, 0.7, 0}, Point{0.63, 0.2, 0}, Point{0.5, 0.5, 0}})
          EXPECT_NEAR(evaluate_at(s, u, x)[0], f(x), 1e-13);
      }
    // and x^{k+1} is not
    const Vector u = l2_project(s, [&](const Point& x) { return std::pow(x[0], k + 1); });
    double worst = 0.0;
    for (double t = 0.01; t < 1.0; t += 0.07) worst = std::max(worst, std::abs(evaluate_at(s, u, {t, 0.3, 0})[0] - std::pow(t, k + 1)));
    EXPECT_GT(worst, 1e-6);
  }
}

TEST(DgSpace, ConstantAndLinearReproduction) {
  const DgSpace s(unit_mesh(3, 2), 2, 3);
  const Vector three = constant_field(s, 3.0);
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
    const auto v = evaluate(s, three, e, {0.3, -0.2, 0.9});
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(v[c], 3.0, 1e-14);
  }
  const DgSpace sc(unit_mesh(2, 3), 1);
  const Vector x = l2_project(sc, [](const Point& p) { return p[0]; });
  for (const Point& p : {Point{0.05, 0.9, 0}, Point{0.5, 0.1, 0}, Point{0.99, 0.99, 0}})
    EXPECT_NEAR(evaluate_at(sc, x, p)[0], p[0], 1e-14);
}

TEST(DgSpace, EvaluateMatchesBasisSumOracle) {
  for (int dim : {2, 3}) {
    const DgSpace s(unit_mesh(dim, 2), 2, dim);
    const Vector u = oracle::random_vector(s.size(), 7);
    for (std::size_t e = 0; e < s.mesh().n_elements(); ++e) {
      const Point xi{0.31, -0.77, 0.4};
      const Point x = s.mesh().to_physical(e, xi);
      const auto a = evaluate(s, u, e, xi);
      const auto b = oracle::value(s, u, e, x);
      for (int c = 0; c < dim; ++c) EXPECT_NEAR(a[c], b[c], 1e-14 * 10);
    }
  }
}

TEST(DgSpace, L2ProjectExamples) {
  const DgSpace s(unit_mesh(2, 3), 2);
  EXPECT_LT((l2_project(s, [](const Point&) { return 1.0; }) - constant_field(s, 1.0)).lpNorm<Eigen::Infinity>(), 1e-14);
  const Vector xy = l2_project(s, [](const Point& x) { return x[0] * x[1]; });
  for (const Point& p : {Point{0.2, 0.4, 0}, Point{0.8, 0.55, 0}}) EXPECT_NEAR(evaluate_at(s, xy, p)[0], p[0] * p[1], 1e-13);
}

TEST(DgSpace, L2ProjectRate) {
  const auto f = [](const Point& x) { return std::sin(2 * pi * x[0]); };
  double prev = 0.0;
  for (int n : {8, 16, 32}) {
    const DgSpace s(unit_mesh(2, n), 1);
    const Vector u = l2_project(s, f);
    double err2 = 0.0;
    for (std::size_t e = 0; e < s.mesh().n_elements(); ++e)
      oracle::volume(s, e, 6, [&](const Point& x, double w) {
        const double d = oracle::value(s, u, e, x)[0] - f(x);
        err2 += w * d * d;
      });
    const double err = std::sqrt(err2);
    if (prev > 0.0) EXPECT_NEAR(std::log2(prev / err), 2.0, 0.2);
    prev = err;
  }
}

namespace {

double dg_seminorm_error(const DgSpace& s, const Vector& u, const std::function<std::array<double, 3>(const Point&)>& grad,
                         double sigma, double h) {
  double sum = 0.0;
  for (std::size_t e = 0; e < s.mesh().n_elements(); ++e)
    oracle::volume(s, e, s.degree() + 4, [&](const Point& x, double w) {
      const auto g = oracle::gradient(s, u, e, x)[0];
      const auto ge = grad(x);
      for (int a = 0; a < s.dim(); ++a) sum += w * (g[a] - ge[a]) * (g[a] - ge[a]);
    });
  for (const auto& fc : oracle::faces(s)) {
    if (fc.plus < 0) continue;
    oracle::face_quad(s, fc, s.degree() + 4, [&](const Point& x, double w) {
      const auto t = oracle::traces(s, u, fc, x);
      sum += w * sigma / h * (t.in[0] - t.out[0]) * (t.in[0] - t.out[0]);
    });
  }
  return std::sqrt(sum);
}

}  // namespace

TEST(EllipticProjection, ConstantIsReproduced) {
  const DgSpace s(unit_mesh(2, 3), 2);
  const SparseMatrix A = assemble_a_diff(s, 4.0, s.mesh().edge_length());
  const Vector u = elliptic_project(
      s, [](const Point&) { return 0.7; }, [](const Point&) { return std::array<double, 3>{0, 0, 0}; }, A);
  EXPECT_LT((u - constant_field(s, 0.7)).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(EllipticProjection, LinearIsReproduced) {
  const DgSpace s(unit_mesh(2, 4), 1);
  const SparseMatrix A = assemble_a_diff(s, 2.0, s.mesh().edge_length());
  const Vector u = elliptic_project(
      s, [](const Point& x) { return x[0] + x[1]; }, [](const Point&) { return std::array<double, 3>{1, 1, 0}; }, A);
  const Vector ref = l2_project(s, [](const Point& x) { return x[0] + x[1]; });
  EXPECT_LT((u - ref).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(EllipticProjection, MeanMatchesIntegral) {
  const DgSpace s(unit_mesh(2, 4), 2);
  const SparseMatrix A = assemble_a_diff(s, 4.0, s.mesh().edge_length());
  const auto f = [](const Point& x) { return std::exp(x[0]) * x[1]; };
  const auto g = [](const Point& x) { return std::array<double, 3>{std::exp(x[0]) * x[1], std::exp(x[0]), 0}; };
  const Vector u = elliptic_project(s, f, g, A);
  EXPECT_NEAR(integral_weights(s).dot(u), (std::exp(1.0) - 1.0) * 0.5, 1e-12);
}

TEST(EllipticProjection, DgSeminormRateIsOne) {
  const auto f = [](const Point& x) { return std::cos(pi * x[0]) * std::cos(pi * x[1]); };
  const auto g = [](const Point& x) {
    return std::array<double, 3>{-pi * std::sin(pi * x[0]) * std::cos(pi * x[1]),
                                 -pi * std::cos(pi * x[0]) * std::sin(pi * x[1]), 0};
  };
  std::vector<double> err;
  for (int n : {4, 8, 16}) {
    const DgSpace s(unit_mesh(2, n), 1);
    const double h = s.mesh().edge_length();
    const Vector u = elliptic_project(s, f, g, assemble_a_diff(s, 2.0, h));
    err.push_back(dg_seminorm_error(s, u, g, 2.0, h));
  }
  EXPECT_NEAR(std::log2(err[0] / err[1]), 1.0, 0.2);
  EXPECT_NEAR(std::log2(err[1] / err[2]), 1.0, 0.15);
}
