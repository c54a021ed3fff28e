#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "medge/errors.hpp"
#include "medge/gauss.hpp"
#include "medge/model_io.hpp"
#include "medge/quadrature.hpp"
#include "support.hpp"

using namespace medge;
using medge::test::kInvSqrt2Pi;
using medge::test::normal_pdf;
using medge::test::scalar_model;

TEST(FrozenParams, ConstantIntegrand) {
  auto spec = builtin_model("constant");
  auto p = frozen_params(spec, 0.0, 1.0, 0.3);
  EXPECT_NEAR(p.cov(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(p.mean_shift[0], 0.0, 1e-14);
}

TEST(FrozenParams, LinearInTimeCovariance) {
  auto spec = scalar_model("lin", [](double, double) { return 0.0; }, [](double t, double) { return t; });
  auto p = frozen_params(spec, 0.0, 1.0, 0.0);
  EXPECT_NEAR(p.cov(0, 0), 0.5, 1e-14);
}

TEST(FrozenParams, StateDependentDriftAtFreezePoint) {
  auto spec = scalar_model("my", [](double, double y) { return y; }, [](double, double) { return 1.0; });
  for (double y : {-1.3, 0.0, 2.0}) EXPECT_NEAR(frozen_params(spec, 0.0, 0.5, y).mean_shift[0], 0.5 * y, 1e-14);
}

TEST(FrozenParams, LostDefinitenessIsReported) {
  auto spec = scalar_model("neg", [](double, double) { return 0.0; }, [](double, double) { return -1.0; });
  EXPECT_THROW(frozen_params(spec, 0.0, 1.0, 0.0), NonSPDIntegratedCov);
}

TEST(Ptilde, StandardValues) {
  auto spec = builtin_model("constant");
  auto p = frozen_params(spec, 0.0, 1.0, 0.0);
  EXPECT_NEAR(ptilde(p, 0.0), kInvSqrt2Pi, 1e-15);
  auto half = make_frozen_params(Vec::Zero(1), Mat::Constant(1, 1, 0.5), Vec::Zero(1), 0.0, 1.0);
  EXPECT_NEAR(ptilde(half, 0.0), 1.0 / std::sqrt(std::numbers::pi), 1e-15);
}

TEST(Ptilde, SymmetricWithoutDrift) {
  auto spec = scalar_model("c", [](double, double) { return 0.0; }, [](double, double) { return 1.3; });
  for (double x : {-0.7, 0.2})
    for (double y : {-1.0, 0.9}) {
      const double a = ptilde(frozen_params(spec, 0.0, 0.6, y), x);
      const double b = ptilde(frozen_params(spec, 0.0, 0.6, x), y);
      EXPECT_NEAR(a, b, 1e-15);
    }
}

TEST(PtildeDeriv, SpecialValues) {
  auto p = make_frozen_params(Vec::Zero(1), Mat::Identity(1, 1), Vec::Zero(1), 0.0, 1.0);
  EXPECT_NEAR(ptilde_deriv(p, 0.0, 0), ptilde(p, 0.0), 1e-15);
  EXPECT_NEAR(ptilde_deriv(p, 0.0, 1), 0.0, 1e-15);
  EXPECT_NEAR(ptilde_deriv(p, 0.0, 2), -kInvSqrt2Pi, 1e-15);
  // 4th-order central FD with step 1e-3
  const double e = 1e-3;
  auto f = [&](double x) { return ptilde(p, x); };
  const double fd = (-f(2 * e) + 16 * f(e) - 30 * f(0) + 16 * f(-e) - f(-2 * e)) / (12 * e * e);
  EXPECT_NEAR(fd, -kInvSqrt2Pi, 1e-8);
  EXPECT_THROW(ptilde_deriv(p, Vec::Zero(1), MultiIndex{7}), UnsupportedOrder);
}

TEST(PtildeDeriv, AgreesWithFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.5, 1.5), v(0.4, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const double var = v(rng), shift = u(rng) * 0.3;
    auto p = make_frozen_params(Vec::Constant(1, shift), Mat::Constant(1, 1, var), Vec::Constant(1, u(rng)), 0.0, 1.0);
    const double x = u(rng);
    for (int k = 1; k <= 4; ++k) {
      // FD of the analytic (k-1)th derivative, step scaled to the spread
      const double e = 1e-3 * std::sqrt(var);
      auto g = [&](double z) { return ptilde_deriv(p, z, k - 1); };
      const double fd = (-g(x + 2 * e) + 8 * g(x + e) - 8 * g(x - e) + g(x - 2 * e)) / (12 * e);
      const double an = ptilde_deriv(p, x, k);
      EXPECT_NEAR(fd, an, 1e-5 * std::max(1.0, std::abs(an))) << trial << " k=" << k;
    }
  }
}

TEST(PtildeDeriv, TwoDimensionalMixedPartials) {
  Mat cov(2, 2);
  cov << 1.0, 0.3, 0.3, 0.8;
  auto p = make_frozen_params(Vec::Zero(2), cov, Vec::Zero(2), 0.0, 1.0);
  Vec x(2);
  x << 0.3, -0.2;
  const double e = 1e-3;
  auto g = [&](const Vec& z) { return ptilde_deriv(p, z, MultiIndex{1, 1}); };
  Vec xp = x, xm = x;
  xp[0] += e;
  xm[0] -= e;
  Vec xp2 = x, xm2 = x;
  xp2[0] += 2 * e;
  xm2[0] -= 2 * e;
  const double fd = (-g(xp2) + 8 * g(xp) - 8 * g(xm) + g(xm2)) / (12 * e);
  const double an = ptilde_deriv(p, x, MultiIndex{2, 1});
  EXPECT_NEAR(fd, an, 1e-6 * std::max(1.0, std::abs(an)));
}

TEST(DiscreteMoments, Examples) {
  auto spec = builtin_model("constant");
  TimeGrid tg{1.0, 8};
  auto same = discrete_frozen_moments(spec, 3, 3, 0.0, tg);
  EXPECT_EQ(same.mu[0], 0.0);
  EXPECT_EQ(same.V(0, 0), 0.0);
  EXPECT_NEAR(discrete_frozen_moments(spec, 0, 8, 0.0, tg).V(0, 0), 1.0, 1e-15);

  auto lin = scalar_model("lin", [](double, double) { return 0.0; }, [](double t, double) { return t; });
  TimeGrid t4{1.0, 4};
  EXPECT_NEAR(discrete_frozen_moments(lin, 0, 4, 0.0, t4).V(0, 0), 0.375, 1e-15);
  EXPECT_THROW(discrete_frozen_moments(spec, 4, 2, 0.0, tg), IndexOrder);
}

TEST(PtildeH, OneStepIsTheChangeOfVariables) {
  auto spec = builtin_model("sin_sigma");
  TimeGrid tg{1.0, 16};
  const double h = tg.h(), x = 0.2, yf = 0.5;
  auto grid = SpaceGrid::from_bounds(-3, 3, 1201);
  auto k = ptilde_h(spec, 3, 4, x, yf, grid, tg);
  for (double y : {-0.3, 0.1, 0.25, 0.6}) {
    const double direct = spec.q(3 * h, yf, (y - x - spec.m(3 * h, yf) * h) / std::sqrt(h)) / std::sqrt(h);
    EXPECT_NEAR(k.interpolate(y), direct, 2e-6 * std::max(1.0, direct));
  }
}

TEST(PtildeH, GaussianConstantCoefficientsIsPtilde) {
  auto spec = builtin_model("constant");
  TimeGrid tg{1.0, 16};
  auto grid = SpaceGrid::from_bounds(-9, 9, 1441);
  auto k = ptilde_h(spec, 0, 16, 0.0, 0.0, grid, tg);
  auto p = frozen_params(spec, 0.0, 1.0, 0.0);
  double worst = 0.0;
  for (int i = 0; i < grid.size; ++i) worst = std::max(worst, std::abs(k.values[i] - ptilde_at(p, Vec::Zero(1), Vec::Constant(1, grid.at(i)))));
  EXPECT_LT(worst, 1e-8);
}

TEST(PtildeH, MixtureMatchesIteratedGridConvolution) {
  auto spec = builtin_model("x_independent_skew");
  TimeGrid tg{1.0, 16};
  const double h = tg.h();
  auto grid = SpaceGrid::from_bounds(-8, 8, 1281);
  auto k = ptilde_h(spec, 0, 16, 0.0, 0.0, grid, tg);

  // density of sqrt(h) xi_i + m h per step, convolved directly on the grid
  const int M = grid.size, mid = M / 2;
  auto step = [&](int i) {
    Vec v(M);
    for (int a = 0; a < M; ++a) {
      const double z = grid.at(a) - spec.m(i * h, 0.0) * h;
      v[a] = spec.q(i * h, 0.0, z / std::sqrt(h)) / std::sqrt(h);
    }
    return v;
  };
  Vec acc = step(0);
  for (int i = 1; i < 16; ++i) {
    Vec f = step(i), next = Vec::Zero(M);
    for (int a = 0; a < M; ++a)
      for (int b = 0; b < M; ++b) {
        const int c = a + b - mid;
        if (c >= 0 && c < M) next[c] += acc[a] * f[b] * grid.dx;
      }
    acc = next;
  }
  double worst = 0.0;
  for (int a = 0; a < M; ++a) worst = std::max(worst, std::abs(acc[a] - k.values[a]));
  EXPECT_LT(worst, 1e-6);
}

TEST(PtildeH, VarianceMatchesDiscreteMoments) {
  auto spec = builtin_model("sin_sigma");
  TimeGrid tg{1.0, 32};
  auto grid = SpaceGrid::from_bounds(-10, 10, 2001);
  for (double y : {-1.0, 0.4}) {
    auto k = ptilde_h(spec, 4, 28, 0.0, y, grid, tg);
    const double V = discrete_frozen_moments(spec, 4, 28, y, tg).V(0, 0);
    EXPECT_NEAR(k.variance() / V, 1.0, 1e-6);
    EXPECT_NEAR(k.integral(), 1.0, 1e-8);
  }
}

TEST(PtildeH, ConvergesToPtilde) {
  // sup |p~_h - p~| decreases over n for each shipped one-dimensional model
  for (const char* name : {"x_independent", "x_independent_skew", "sin_sigma"}) {
    auto spec = builtin_model(name);
    auto grid = SpaceGrid::from_bounds(-8, 8, 1601);
    double last = 1e9;
    for (int n : {8, 16, 32, 64}) {
      TimeGrid tg{1.0, n};
      const double y0 = 0.3;
      auto k = ptilde_h(spec, 0, n, 0.0, y0, grid, tg);
      auto p = frozen_params(spec, 0.0, 1.0, y0);
      double worst = 0.0;
      for (int i = 0; i < grid.size; ++i)
        worst = std::max(worst, std::abs(k.values[i] - ptilde_at(p, Vec::Zero(1), Vec::Constant(1, grid.at(i)))));
      EXPECT_LT(worst, last) << name << " n=" << n;
      last = worst;
    }
  }
}

TEST(PtildeInvariants, NormalizedInTheTarget) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1), st(0.0, 0.5);
  for (const auto& name : builtin_model_names()) {
    auto spec = builtin_model(name);
    for (int trial = 0; trial < 10; ++trial) {
      const double s = st(rng), t = s + 0.05 + st(rng);
      Vec x = Vec::NullaryExpr(spec.d, [&](Eigen::Index) { return u(rng); });
      Vec y = Vec::NullaryExpr(spec.d, [&](Eigen::Index) { return u(rng); });
      auto p = frozen_params(spec, s, t, y);
      if (spec.d == 1) {
        auto f = [&](double z) { return ptilde_at(p, x, Vec::Constant(1, z)); };
        const double sd = std::sqrt(p.cov(0, 0));
        const double c = x[0] + p.mean_shift[0];
        EXPECT_NEAR(integrate_gl(f, c - 12 * sd, c + 12 * sd, 16, 16), 1.0, 1e-8) << name;
      } else {
        // product GL over a box of 12 sd per axis
        const double sd = std::sqrt(p.cov.diagonal().maxCoeff());
        const Vec c = x + p.mean_shift;
        auto rule0 = composite_gauss_legendre(c[0] - 12 * sd, c[0] + 12 * sd, 16, 8);
        auto rule1 = composite_gauss_legendre(c[1] - 12 * sd, c[1] + 12 * sd, 16, 8);
        double acc = 0.0;
        Vec z(2);
        for (size_t a = 0; a < rule0.nodes.size(); ++a)
          for (size_t b = 0; b < rule1.nodes.size(); ++b) {
            z << rule0.nodes[a], rule1.nodes[b];
            acc += rule0.weights[a] * rule1.weights[b] * ptilde_at(p, x, z);
          }
        EXPECT_NEAR(acc, 1.0, 1e-8) << name;
      }
    }
  }
}

TEST(PtildeInvariants, ChapmanKolmogorovForConstantCoefficients) {
  auto m = scalar_model("c", [](double, double) { return 0.2; }, [](double, double) { return 0.9; });
  const double s = 0.1, u = 0.45, t = 0.9, x = -0.3, y = 0.4;
  auto f = [&](double z) { return ptilde(frozen_params(m, s, u, z), x) * ptilde(frozen_params(m, u, t, y), z); };
  EXPECT_NEAR(integrate_gl(f, -8, 8, 16, 32), ptilde(frozen_params(m, s, t, y), x), 1e-8);
}

TEST(MatrixSqrt, Examples) {
  EXPECT_LT((matrix_sqrt_spd(Mat::Identity(3, 3)) - Mat::Identity(3, 3)).norm(), 1e-15);
  Mat d = Mat::Zero(2, 2);
  d.diagonal() << 4, 9;
  Mat r = matrix_sqrt_spd(d);
  EXPECT_NEAR(r(0, 0), 2, 1e-14);
  EXPECT_NEAR(r(1, 1), 3, 1e-14);
  EXPECT_NEAR(r(0, 1), 0, 1e-14);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  Mat B = Mat::NullaryExpr(3, 3, [&](Eigen::Index, Eigen::Index) { return n01(rng); });
  Mat L = B * B.transpose() + 0.5 * Mat::Identity(3, 3);
  Mat A = matrix_sqrt_spd(L);
  EXPECT_LT((A * A - L).norm() / L.norm(), 1e-12);
  EXPECT_LT((A - A.transpose()).norm(), 1e-14);

  Mat bad = Mat::Identity(2, 2);
  bad(1, 1) = -1;
  EXPECT_THROW(matrix_sqrt_spd(bad), NotSPD);
}
