#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chns/manufactured.hpp"
#include "oracle.hpp"

using namespace chns;

namespace {

constexpr double kStep = 1e-6;

struct Sampler {
  std::mt19937_64 rng{2024};
  std::uniform_real_distribution<double> unit{0.0, 1.0};
  std::pair<double, Point> next(int dim) {
    Point x{0.0, 0.0, 0.0};
    for (int i = 0; i < dim; ++i) x[i] = unit(rng);
    return {unit(rng), x};
  }
};

Point shifted(Point x, int axis, double h) {
  x[axis] += h;
  return x;
}

void expect_close(double got, double ref, double rel, const char* what) {
  EXPECT_LE(std::abs(got - ref), rel * (1.0 + std::abs(ref))) << what << ": " << got << " vs " << ref;
}

class Manufactured : public ::testing::TestWithParam<int> {
 protected:
  std::unique_ptr<ExactSolution> ex = make_manufactured(GetParam(), 1.0, 1.0);
  int dim() const { return GetParam(); }
};

}  // namespace

TEST_P(Manufactured, DerivativesMatchFiniteDifferences) {
  const ExactSolution& e = *ex;
  Sampler s;
  for (int n = 0; n < 100; ++n) {
    const auto [t, x] = s.next(dim());
    const auto d = [&](auto f, int axis) { return (f(shifted(x, axis, kStep)) - f(shifted(x, axis, -kStep))) / (2 * kStep); };
    expect_close((e.c(t + kStep, x) - e.c(t - kStep, x)) / (2 * kStep), e.dc_dt(t, x), 1e-5, "dc/dt");
    const Vec3 ut = e.du_dt(t, x);
    for (int i = 0; i < dim(); ++i)
      expect_close((e.u(t + kStep, x)[i] - e.u(t - kStep, x)[i]) / (2 * kStep), ut[i], 1e-5, "du/dt");

    const Vec3 gc = e.grad_c(t, x), gm = e.grad_mu(t, x), gp = e.grad_p(t, x);
    const Mat3 gu = e.grad_u(t, x);
    double lap_c = 0.0, lap_mu = 0.0;
    Vec3 lap_u{0.0, 0.0, 0.0};
    for (int a = 0; a < dim(); ++a) {
      expect_close(d([&](const Point& y) { return e.c(t, y); }, a), gc[a], 1e-5, "grad c");
      expect_close(d([&](const Point& y) { return e.mu(t, y); }, a), gm[a], 1e-5, "grad mu");
      expect_close(d([&](const Point& y) { return e.p(t, y); }, a), gp[a], 1e-5, "grad p");
      for (int i = 0; i < dim(); ++i)
        expect_close(d([&](const Point& y) { return e.u(t, y)[i]; }, a), gu[i][a], 1e-5, "grad u");
      lap_c += d([&](const Point& y) { return e.grad_c(t, y)[a]; }, a);
      lap_mu += d([&](const Point& y) { return e.grad_mu(t, y)[a]; }, a);
      for (int i = 0; i < dim(); ++i) lap_u[i] += d([&](const Point& y) { return e.grad_u(t, y)[i][a]; }, a);
    }
    expect_close(lap_c, e.laplacian_c(t, x), 1e-5, "laplacian c");
    expect_close(lap_mu, e.laplacian_mu(t, x), 1e-5, "laplacian mu");
    const Vec3 lu = e.laplacian_u(t, x);
    for (int i = 0; i < dim(); ++i) expect_close(lap_u[i], lu[i], 1e-5, "laplacian u");

    const double cv = e.c(t, x);
    expect_close(e.mu(t, x), cv * cv * cv - cv - e.kappa() * lap_c, 1e-5, "mu definition");
  }
}

TEST_P(Manufactured, StrongResidualVanishes) {
  const ExactSolution& e = *ex;
  Sampler s;
  for (int n = 0; n < 50; ++n) {
    const auto [t, x] = s.next(dim());
    const double cv = e.c(t, x);
    const Vec3 uv = e.u(t, x), gc = e.grad_c(t, x), gm = e.grad_mu(t, x), gp = e.grad_p(t, x);
    const Mat3 gu = e.grad_u(t, x);
    const Vec3 lu = e.laplacian_u(t, x), ut = e.du_dt(t, x);
    double div_cu = 0.0;
    for (int a = 0; a < dim(); ++a) div_cu += gc[a] * uv[a] + cv * gu[a][a];
    const double rc = e.dc_dt(t, x) + div_cu - e.laplacian_mu(t, x) - e.forcing_c(t, x);
    expect_close(rc, 0.0, 1e-10 * (1 + std::abs(e.forcing_c(t, x))), "c equation");
    const Vec3 fu = e.forcing_u(t, x);
    for (int i = 0; i < dim(); ++i) {
      double conv = 0.0;
      for (int j = 0; j < dim(); ++j) conv += uv[j] * gu[i][j];
      const double ru = ut[i] + conv - lu[i] + gp[i] + cv * gm[i] - fu[i];
      expect_close(ru, 0.0, 1e-10 * (1 + std::abs(fu[i])), "u equation");
    }
  }
}

TEST_P(Manufactured, DivergenceFree) {
  Sampler s;
  for (int n = 0; n < 20; ++n) {
    const auto [t, x] = s.next(dim());
    EXPECT_LT(std::abs(ex->div_u(t, x)), 1e-12);
  }
}

// Exact mean of the 3D pressure bracket over the unit cube (symbolic
// integration). The normalization constant in the formula differs from it by
// about 1.66e-8, so the 3D mean pressure is -e^{-2t} (kBracketMean - p_bar).
constexpr double kBracketMean = 7.6395817105610355533;

TEST_P(Manufactured, ZeroMeanPressure) {
  const oracle::Gauss g = oracle::gauss(20);
  for (double t : {0.0, 0.37, 1.0}) {
    double sum = 0.0;
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j)
        for (int k = 0; k < (dim() == 3 ? 20 : 1); ++k) {
          const Point x{0.5 * (g.x[i] + 1), 0.5 * (g.x[j] + 1), dim() == 3 ? 0.5 * (g.x[k] + 1) : 0.0};
          const double w = g.w[i] * g.w[j] * (dim() == 3 ? g.w[k] : 2.0) / 8.0;
          sum += w * ex->p(t, x);
        }
    const double expected = dim() == 3 ? -std::exp(-2 * t) * (kBracketMean - Manufactured3D::p_bar) : 0.0;
    EXPECT_NEAR(sum, expected, 1e-12) << "t = " << t;
    EXPECT_LT(std::abs(sum), 2e-8);
  }
}

TEST_P(Manufactured, DecaysAtLateTimes) {
  Sampler s;
  double f0 = 0.0;
  for (int n = 0; n < 50; ++n) f0 = std::max(f0, std::abs(ex->forcing_c(0.0, s.next(dim()).second)));
  for (int n = 0; n < 20; ++n) {
    const Point x = s.next(dim()).second;
    EXPECT_LT(std::abs(ex->c(30.0, x)), 1e-12);
    EXPECT_LT(std::abs(ex->p(30.0, x)), 1e-12);
    for (double v : ex->u(30.0, x)) EXPECT_LT(std::abs(v), 1e-12);
    // the forcing carries the e^{-t} prefactor of its linear terms
    EXPECT_LT(std::abs(ex->forcing_c(30.0, x)), 1e-12 * (1.0 + f0));
    for (double v : ex->forcing_u(30.0, x)) EXPECT_LT(std::abs(v), 1e-12 * (1.0 + f0));
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, Manufactured, ::testing::Values(2, 3));

TEST(Manufactured3D, OrderParameterAtQuarterPoint) {
  const Manufactured3D e;
  EXPECT_NEAR(e.c(0.0, Point{0.25, 0.25, 0.25}), 1.0, 1e-15);
}

TEST(Manufactured3D, PressureNormalizationConstant) {
  const oracle::Gauss g = oracle::gauss(20);
  double mean = 0.0;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      for (int k = 0; k < 20; ++k)
        mean += g.w[i] * g.w[j] * g.w[k] / 8.0 *
                Manufactured3D::pressure_bracket(Point{0.5 * (g.x[i] + 1), 0.5 * (g.x[j] + 1), 0.5 * (g.x[k] + 1)});
  EXPECT_NEAR(mean, kBracketMean, 1e-12);
  EXPECT_EQ(Manufactured3D::p_bar, 7.63958172715414);
  EXPECT_NEAR(mean - Manufactured3D::p_bar, -1.6593078e-8, 1e-14);
}

TEST(Manufactured3D, ForcingMatchesSymbolicValues) {
  // Reference values: symbolic differentiation of the closed-form fields at
  // t = 0.4, (x, y, z) = (0.3, 0.6, 0.2), kappa = mu_s = 1, evaluated to 20
  // digits.
  const Manufactured3D e(1.0, 1.0);
  const Point x{0.3, 0.6, 0.2};
  EXPECT_NEAR(e.forcing_c(0.4, x), -4945.7038756931074947, 1e-9);
  const Vec3 f = e.forcing_u(0.4, x);
  EXPECT_NEAR(f[0], -30.548386412730996753, 1e-10);
  EXPECT_NEAR(f[1], 129.40504144725944923, 1e-10);
  EXPECT_NEAR(f[2], 30.548386412730996753, 1e-10);
}

TEST(Manufactured2D, ForcingMatchesSymbolicValues) {
  // t = 0.4, (x, y) = (0.3, 0.7), kappa = mu_s = 1
  const auto e = make_manufactured(2, 1.0, 1.0);
  const Point x{0.3, 0.7, 0.0};
  EXPECT_NEAR(e->forcing_c(0.4, x), -3773.0170790196929695, 1e-9);
  const Vec3 f = e->forcing_u(0.4, x);
  EXPECT_NEAR(f[0], -77.126029712010558123, 1e-10);
  EXPECT_NEAR(f[1], 37.237905511510188568, 1e-10);
}

TEST(Manufactured2D, VelocityVanishesOnBoundary) {
  const auto e = make_manufactured(2, 1.0, 1.0);
  for (int i = 0; i <= 10; ++i) {
    const double s = 0.1 * i;
    for (const Point& x : {Point{0.0, s, 0.0}, Point{1.0, s, 0.0}, Point{s, 0.0, 0.0}, Point{s, 1.0, 0.0}})
      for (double v : e->u(0.3, x)) EXPECT_LT(std::abs(v), 1e-15);
  }
}

TEST(Manufactured, BoundaryFluxes) {
  const auto e = make_manufactured(2, 0.5, 1.0);
  const Point x{0.0, 0.3, 0.0}, n{-1.0, 0.0, 0.0};
  EXPECT_NEAR(e->flux_mu(0.2, x, n), -0.5 * e->grad_c(0.2, x)[0], 1e-14);
  EXPECT_NEAR(e->flux_c(0.2, x, n), -e->grad_mu(0.2, x)[0], 1e-12);
  EXPECT_THROW(make_manufactured(4, 1.0, 1.0), std::invalid_argument);
}
