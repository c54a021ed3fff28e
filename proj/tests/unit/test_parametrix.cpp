#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "medge/errors.hpp"
#include "medge/gauss.hpp"
#include "medge/model_io.hpp"
#include "medge/operators.hpp"
#include "medge/parametrix.hpp"
#include "medge/quadrature.hpp"
#include "support.hpp"

using namespace medge;
using medge::test::normal_pdf;
using medge::test::scalar_model;

namespace {

double ou_density(double x, double t, double y) {
  return normal_pdf(y, x * std::exp(-t), (1 - std::exp(-2 * t)) / 2);
}

SeriesConfig reduced(const ModelSpec& spec) {
  auto c = series_config_for(spec);
  c.time_nodes = 10;
  c.table_times = 16;
  return c;
}

}  // namespace

TEST(Convolve, ZeroKernel) {
  auto spec = builtin_model("constant");
  PtildeKernel f(spec);
  FdKernel zero([](double, double, double, double) { return 0.0; }, 1e-3);
  EXPECT_EQ(convolve(f, zero, 0.0, 1.0, 0.0, 0.3, series_config_for(spec)), 0.0);
}

TEST(Convolve, SemigroupCollapse) {
  auto spec = scalar_model("c", [](double, double) { return 0.1; }, [](double, double) { return 0.8; });
  PtildeKernel f(spec);
  auto cfg = series_config_for(spec);
  for (double y : {-0.6, 0.2}) {
    double err = 0.0;
    const double got = convolve(f, f, 0.0, 1.0, 0.1, y, cfg, &err);
    EXPECT_NEAR(got, ptilde(frozen_params(spec, 0.0, 1.0, y), 0.1), 1e-6);
    EXPECT_GE(err, 0.0);
  }
}

TEST(Convolve, PtildeAgainstHMatchesTensorQuadrature) {
  auto spec = builtin_model("sin_sigma");
  PtildeKernel f(spec);
  FdKernel H([&](double s, double t, double x, double y) { return kernel_H(spec, s, t, x, y); }, 1e-3);
  auto cfg = series_config_for(spec);
  const double x = 0.0, y = 0.0;
  const double got = convolve(f, H, 0.0, 1.0, x, y, cfg);

  // Split at u = 1/2; u = v^2 near 0 and u = 1 - v^2 near 1, with the space
  // variable scaled to the narrow factor on each half.
  auto half = [&](bool left, int nt, int nz) {
    const auto& tr = gauss_legendre(nt);
    const auto& zr = gauss_legendre(nz);
    const double vmax = std::sqrt(0.5);
    double acc = 0.0;
    for (int a = 0; a < nt; ++a) {
      const double v = 0.5 * vmax * (tr.nodes[a] + 1.0), wv = 0.5 * vmax * tr.weights[a];
      const double u = left ? v * v : 1.0 - v * v;
      const double jac = 2.0 * v;
      const double scale = std::sqrt(left ? u : 1.0 - u) * 1.3;
      const double c = left ? x : y;
      double inner = 0.0;
      for (int b = 0; b < nz; ++b) {
        const double w = 10.0 * zr.nodes[b];
        const double z = c + scale * w;
        inner += 10.0 * zr.weights[b] * scale * ptilde(frozen_params(spec, 0.0, u, z), x) * kernel_H(spec, u, 1.0, z, y);
      }
      acc += wv * jac * inner;
    }
    return acc;
  };
  const double oracle = half(true, 96, 400) + half(false, 96, 400);
  const double coarse = half(true, 48, 200) + half(false, 48, 200);
  ASSERT_LT(std::abs(oracle - coarse), 1e-6);
  EXPECT_NEAR(got, oracle, 1e-5);
}

TEST(Series, ConstantCoefficientsCollapseToPtilde) {
  auto spec = builtin_model("constant");
  auto d = diffusion_density_series(spec, 0.0, 1.0, 0.0, std::vector<double>{-1.0, 0.0, 0.5}, series_config_for(spec));
  ASSERT_FALSE(d.term_sups.empty());
  for (double s : d.term_sups) EXPECT_LT(s, 1e-12);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(d.values[k], normal_pdf(d.points[k], 0, 1), 1e-12);
}

TEST(Series, OrnsteinUhlenbeckClosedForm) {
  auto spec = builtin_model("ou");
  auto d = diffusion_density_series(spec, 0.0, 1.0, 0.0, 0.0, reduced(spec));
  EXPECT_NEAR(d.value(), ou_density(0.0, 1.0, 0.0), 2e-4);
  EXPECT_EQ(d.method, "parametrix_series");
  EXPECT_GE(d.error_estimate, 0.0);
}

TEST(Series, TruncationIsReported) {
  auto spec = builtin_model("sin_sigma");
  auto cfg = reduced(spec);
  cfg.r_max = 2;
  EXPECT_THROW(diffusion_density_series(spec, 0.0, 1.0, 0.0, 0.0, cfg), SeriesNotConverged);
}

TEST(Series, TermsDecayWithFittedConstant) {
  for (const char* name : {"sin_sigma", "ou"}) {
    auto spec = builtin_model(name);
    const double T = 1.0;
    auto d = diffusion_density_series(spec, 0.0, T, 0.0, std::vector<double>{-0.5, 0.5}, reduced(spec));
    const auto& s = d.term_sups;  // s[r-1] is the sup of term r
    ASSERT_GE(s.size(), 4u) << name;
    // C_r = (sup_{r+1} / sup_r) sqrt(r+1) / sqrt(T)
    std::vector<double> C;
    for (size_t r = 2; r < s.size(); ++r) C.push_back(s[r] / s[r - 1] * std::sqrt((r + 1.0) / T));
    const double fitted = *std::max_element(C.begin(), C.end());
    for (double c : C) EXPECT_LE(c, fitted) << name;
    EXPECT_LT(fitted, 1.0) << name;
    EXPECT_LE(C.back(), 1.5 * C.front()) << name;
  }
}

TEST(Series, NormalizedOverTheTarget) {
  auto spec = builtin_model("sin_sigma");
  std::vector<double> ys;
  for (int i = 0; i <= 120; ++i) ys.push_back(-7.5 + 15.0 * i / 120);
  auto d = diffusion_density_series(spec, 0.0, 1.0, 0.2, ys, reduced(spec));
  double acc = 0.0;
  for (size_t i = 0; i < ys.size(); ++i) acc += (i == 0 || i + 1 == ys.size() ? 0.5 : 1.0) * d.values[i];
  EXPECT_NEAR(acc * (ys[1] - ys[0]), 1.0, 1e-6);
}

TEST(Series, AgreesWithReferenceAtRandomPoints) {
  // 25 points per model, grouped by source so each series pass serves five targets
  for (const char* name : {"sin_sigma", "euler_sin_sigma", "ou"}) {
    auto spec = builtin_model(name);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 5; ++i) {
      const double x = u(rng);
      std::vector<double> ys;
      for (int j = 0; j < 5; ++j) ys.push_back(x + u(rng));
      auto series = diffusion_density_series(spec, 0.0, 1.0, x, ys, reduced(spec));
      auto grid = density_grid(spec, x, x, 1.0, 1.0 / 70, 9);
      auto ck = ck_reference(spec, 0.0, 1.0, x, grid, 1024);
      for (int j = 0; j < 5; ++j)
        EXPECT_LE(std::abs(series.values[j] - ck.at(ys[j])), series.error_estimate + ck.error_estimate)
            << name << " x=" << x << " y=" << ys[j];
    }
  }
}

TEST(Reference, ConstantCoefficientsAreExact) {
  auto spec = scalar_model("c", [](double, double) { return 0.3; }, [](double, double) { return 0.7; });
  auto grid = density_grid(spec, 0.0, 0.0, 1.0, 1.0 / 80, 10);
  auto ck = ck_reference(spec, 0.0, 1.0, 0.0, grid, 64);
  double worst = 0.0;
  for (int i = 0; i < grid.size; ++i) worst = std::max(worst, std::abs(ck.values[i] - normal_pdf(grid.at(i), 0.3, 0.7)));
  EXPECT_LT(worst, 1e-9);
}

TEST(Reference, OrnsteinUhlenbeckClosedForm) {
  auto spec = builtin_model("ou");
  auto grid = density_grid(spec, 0.5, 0.5, 1.0, 1.0 / 100, 10);
  auto ck = ck_reference(spec, 0.0, 1.0, 0.5, grid, 2048);
  double worst = 0.0, mass = 0.0;
  for (int i = 0; i < grid.size; ++i) {
    worst = std::max(worst, std::abs(ck.values[i] - ou_density(0.5, 1.0, grid.at(i))));
    mass += ck.values[i];
  }
  EXPECT_LT(worst, 1e-5);
  EXPECT_NEAR(mass * grid.dx, 1.0, 1e-7);
  EXPECT_EQ(ck.method, "euler_ck_richardson");
}

TEST(Reference, NarrowGridLeaksMass) {
  auto spec = builtin_model("sin_sigma");
  auto grid = SpaceGrid::from_bounds(-2, 2, 201);
  EXPECT_THROW(ck_reference(spec, 0.0, 1.0, 0.0, grid, 64), TailMassExceeded);
}

TEST(Reference, SemigroupAtTheMidpoint) {
  auto spec = builtin_model("sin_sigma");
  const double x = 0.1, y = 0.4, t = 1.0, u = 0.5;
  const double dz = 1.0 / 80;
  auto grid = density_grid(spec, x, x, u, dz, 10);
  auto first = ck_reference(spec, 0.0, u, x, grid, 512);
  // p(u, t, z, y) for z on every 4th node of the first slice
  const int stride = 4;
  double acc = 0.0;
  for (int i = 0; i < grid.size; i += stride) {
    const double z = grid.at(i);
    if (first.values[i] < 1e-12) continue;
    auto g2 = density_grid(spec, z, z, t - u, dz, 10);
    auto second = ck_reference(spec, u, t, z, g2, 512);
    if (!g2.contains(y)) continue;
    acc += first.values[i] * second.at(y);
  }
  acc *= stride * grid.dx;
  auto whole = density_grid(spec, x, x, t, dz, 10);
  auto direct = ck_reference(spec, 0.0, t, x, whole, 512);
  EXPECT_NEAR(acc, direct.at(y), 5e-5);
}
