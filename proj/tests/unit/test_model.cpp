#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "medge/errors.hpp"
#include "medge/hermite.hpp"
#include "medge/model.hpp"
#include "medge/model_io.hpp"
#include "support.hpp"

using namespace medge;
using medge::test::normal_pdf;

namespace {

double brute_moment(const std::vector<double>& w, const std::vector<double>& mu, const std::vector<double>& sd, int k) {
  // trapezoid on a wide uniform grid, written independently of the library
  double acc = 0.0;
  const double lo = -20.0, hi = 20.0;
  const int n = 400000;
  const double dx = (hi - lo) / n;
  for (int i = 0; i <= n; ++i) {
    const double x = lo + i * dx;
    double f = 0.0;
    for (size_t c = 0; c < w.size(); ++c) f += w[c] * normal_pdf(x, mu[c], sd[c] * sd[c]);
    acc += (i == 0 || i == n ? 0.5 : 1.0) * std::pow(x, k) * f;
  }
  return acc * dx;
}

}  // namespace

TEST(Validate, ConstantModelPassesEverything) {
  auto spec = builtin_model("constant");
  auto rep = validate_model(spec, default_probe(spec));
  EXPECT_TRUE(rep.passed());
  EXPECT_LT(rep.check("A1_mean").measured, 1e-12);
}

TEST(Validate, SinSigmaEllipticityBounds) {
  auto spec = builtin_model("sin_sigma");
  EXPECT_DOUBLE_EQ(spec.sigma_lower, 0.5);
  EXPECT_DOUBLE_EQ(spec.sigma_upper, 1.5);
  std::vector<ProbePoint> probe;
  for (double x : {-std::numbers::pi / 2, 0.0, std::numbers::pi / 2}) probe.push_back({0.0, Vec::Constant(1, x)});
  auto rep = validate_model(spec, probe);
  EXPECT_TRUE(rep.check("A2_ellipticity").passed);
  EXPECT_NEAR(rep.sigma_min, 0.5, 1e-12);
  EXPECT_NEAR(rep.sigma_max, 1.5, 1e-12);
}

TEST(Validate, ShiftedInnovationFailsA1) {
  auto spec = model_from_json_text(R"({"name": "shifted", "drift": {"type": "zero"},
      "covariance": {"type": "constant", "value": 1.0},
      "innovation": {"type": "mixture", "weights": [1.0], "means": [0.0], "sds": [1.0], "shift": 0.1}})");
  auto rep = validate_model(spec, default_probe(spec));
  EXPECT_FALSE(rep.passed());
  EXPECT_FALSE(rep.check("A1_mean").passed);
  EXPECT_NEAR(rep.check("A1_mean").measured, 0.1, 1e-8);
}

TEST(Validate, ShippedModelsSatisfyInnovationInvariants) {
  for (const auto& name : builtin_model_names()) {
    auto spec = builtin_model(name);
    auto rep = validate_model(spec, default_probe(spec));
    EXPECT_TRUE(rep.passed()) << name;
    EXPECT_LT(rep.check("A1_normalization").measured, 1e-8) << name;
    EXPECT_LT(rep.check("A1_covariance").measured, 1e-8) << name;
    EXPECT_GE(rep.check("A1_nonnegative").measured, 0.0) << name;
  }
}

TEST(Validate, NonFiniteCallbackIsReported) {
  auto spec = medge::test::scalar_model(
      "nan", [](double, double) { return std::nan(""); }, [](double, double) { return 1.0; });
  EXPECT_THROW(validate_model(spec, default_probe(spec)), NonFiniteEvaluation);
}

TEST(Validate, NegativeCovarianceIsRejected) {
  auto spec = medge::test::scalar_model(
      "neg", [](double, double) { return 0.0; }, [](double, double x) { return x > 1.0 ? -1.0 : 1.0; });
  EXPECT_THROW(validate_model(spec, default_probe(spec)), CovarianceNotPD);
}

TEST(Cumulant, GaussianHigherCumulantsVanish) {
  auto spec = builtin_model("constant");
  EXPECT_NEAR(cumulant(spec, MultiIndex{3}, 0.3, 0.2), 0.0, 1e-14);
  EXPECT_NEAR(cumulant(spec, MultiIndex{4}, 0.3, 0.2), 0.0, 1e-14);
  EXPECT_NEAR(cumulant(spec, MultiIndex{2}, 0.3, 0.2), 1.0, 1e-14);
}

TEST(Cumulant, CenteredMixtureFourthCumulantMatchesQuadrature) {
  const double a = 0.8;
  const std::vector<double> w{0.5, 0.5}, mu{-a, a}, sd{1.0, 1.0};
  const double m2 = brute_moment(w, mu, sd, 2), m4 = brute_moment(w, mu, sd, 4);
  const double oracle = m4 - 3.0 * m2 * m2;
  // unstandardized mixture with unit scale, so xi is exactly the law integrated above
  auto spec = model_from_json_text(R"({"name": "mix", "drift": {"type": "zero"},
      "covariance": {"type": "constant", "value": 1.0},
      "innovation": {"type": "mixture", "weights": [0.5, 0.5], "means": [-0.8, 0.8], "sds": [1.0, 1.0],
                     "standardize": false}})");
  EXPECT_NEAR(cumulant(spec, MultiIndex{4}, 0.0, 0.0), oracle, 1e-9);
  EXPECT_NEAR(oracle, -2.0 * std::pow(a, 4), 1e-9);
  // the quadrature route agrees with the closed form
  auto q = cumulants_by_quadrature(spec, 0.0, 0.0);
  EXPECT_NEAR(q.k4, oracle, 1e-8);
}

TEST(Cumulant, UnsupportedOrder) {
  auto spec = builtin_model("sin_sigma");
  EXPECT_THROW(cumulant(spec, MultiIndex{5}, 0.0, 0.0), UnsupportedOrder);
  EXPECT_THROW(cumulant(spec, MultiIndex{1}, 0.0, 0.0), UnsupportedOrder);
}

TEST(Cumulant, SinSigmaScalesWithCovariance) {
  // chi_nu(t,x) = sigma(t,x)^{|nu|/2} kappa_nu(eta)
  auto spec = builtin_model("sin_sigma");
  const auto eta = spec.innovation->cumulants(0.0);
  for (double x : {-1.0, 0.0, 0.7}) {
    const double s = spec.sigma(0.0, x);
    EXPECT_NEAR(cumulant(spec, MultiIndex{3}, 0.0, x), std::pow(s, 1.5) * eta.at(MultiIndex{3}), 1e-12);
    EXPECT_NEAR(cumulant(spec, MultiIndex{4}, 0.0, x), s * s * eta.at(MultiIndex{4}), 1e-12);
  }
}

TEST(TransformCumulants, IdentityAndScaling) {
  CumulantTable chi;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int s : {3, 4})
    for (auto& nu : multi_indices(2, s)) chi[nu] = u(rng);
  auto same = transform_cumulants_linear(chi, Mat::Identity(2, 2));
  for (auto& [nu, v] : chi) EXPECT_NEAR(same.at(nu), v, 1e-15);

  CumulantTable c1{{MultiIndex{3}, 0.7}, {MultiIndex{4}, -0.4}};
  auto scaled = transform_cumulants_linear(c1, Mat::Constant(1, 1, 1.7));
  EXPECT_NEAR(scaled.at(MultiIndex{3}), std::pow(1.7, 3) * 0.7, 1e-14);
  EXPECT_NEAR(scaled.at(MultiIndex{4}), std::pow(1.7, 4) * -0.4, 1e-14);

  EXPECT_THROW(transform_cumulants_linear(chi, Mat::Identity(3, 3)), DimensionMismatch);
}

TEST(TransformCumulants, GaussianTestFunctionIdentity) {
  std::mt19937_64 rng(99);
  for (int d : {1, 2})
    for (int s : {3, 4})
      for (int k = 0; k < 20; ++k) EXPECT_LT(medge::test::cumulant_transform_defect(d, s, rng), 1e-8) << d << s;
}

TEST(TransformCumulants, RotationAgreesWithMonteCarlo) {
  // X has independent skewed coordinates; Y = A X with A a rotation by pi/4.
  SkewMixtureInnovation a(0.2, 0.0, 0.6), b(0.35, 0.0, 0.5);
  const auto ca = a.cumulants(0.0), cb = b.cumulants(0.0);
  CumulantTable chi;
  for (int s : {3, 4})
    for (auto& nu : multi_indices(2, s)) chi[nu] = 0.0;
  chi[MultiIndex{3, 0}] = ca.at(MultiIndex{3});
  chi[MultiIndex{0, 3}] = cb.at(MultiIndex{3});
  const double c = std::cos(std::numbers::pi / 4), s = std::sin(std::numbers::pi / 4);
  Mat A(2, 2);
  A << c, -s, s, c;
  auto out = transform_cumulants_linear(chi, A);

  const int n = 10'000'000;
  std::mt19937_64 rng(20240611);
  // third cumulants equal third central moments; the coordinates have mean 0
  std::array<double, 4> sum{}, sum2{};
  for (int i = 0; i < n; ++i) {
    const double x0 = a.sample1(0.0, rng), x1 = b.sample1(0.0, rng);
    const double y0 = c * x0 - s * x1, y1 = s * x0 + c * x1;
    const std::array<double, 4> v{y0 * y0 * y0, y0 * y0 * y1, y0 * y1 * y1, y1 * y1 * y1};
    for (int k = 0; k < 4; ++k) {
      sum[k] += v[k];
      sum2[k] += v[k] * v[k];
    }
  }
  const std::array<MultiIndex, 4> idx{MultiIndex{3, 0}, MultiIndex{2, 1}, MultiIndex{1, 2}, MultiIndex{0, 3}};
  for (int k = 0; k < 4; ++k) {
    const double mean = sum[k] / n;
    const double se = std::sqrt((sum2[k] / n - mean * mean) / n);
    EXPECT_LT(std::abs(mean - out.at(idx[k])), 3.0 * se + 1e-12) << k;
  }
}

TEST(InnovationConvolution, OneFoldIsTheDensity) {
  auto spec = builtin_model("sin_sigma");
  auto grid = SpaceGrid::from_bounds(-10, 10, 801);
  auto g = innovation_convolution(spec, 1, 0.0, 0.1, 0.4, grid);
  double worst = 0.0;
  for (int i = 0; i < grid.size; ++i) worst = std::max(worst, std::abs(g.values[i] - spec.q(0.0, 0.4, grid.at(i))));
  EXPECT_LT(worst, 1e-8);
}

TEST(InnovationConvolution, GaussianClosure) {
  auto spec = builtin_model("constant");
  auto grid = SpaceGrid::from_bounds(-20, 20, 1601);
  auto g = innovation_convolution(spec, 4, 0.0, 0.1, 0.0, grid);
  double worst = 0.0;
  for (int i = 0; i < grid.size; ++i) worst = std::max(worst, std::abs(g.values[i] - normal_pdf(grid.at(i), 0, 4)));
  EXPECT_LT(worst, 1e-8);
}

TEST(InnovationConvolution, MixtureMatchesDirectConvolution) {
  auto spec = builtin_model("x_independent_skew");
  const double h = 1.0 / 16;
  auto grid = SpaceGrid::from_bounds(-24, 24, 1921);
  auto g = innovation_convolution(spec, 8, 0.0, h, 0.0, grid);

  // direct O(M^2) discrete convolution, iterated
  const int M = grid.size;
  Vec f(M), acc(M);
  auto step_density = [&](int i) {
    Vec v(M);
    for (int k = 0; k < M; ++k) v[k] = spec.q(i * h, 0.0, grid.at(k));
    return v;
  };
  acc = step_density(0);
  const int mid = M / 2;  // grid.at(mid) = 0
  for (int i = 1; i < 8; ++i) {
    f = step_density(i);
    Vec next = Vec::Zero(M);
    for (int a = 0; a < M; ++a)
      for (int b = 0; b < M; ++b) {
        const int c = a + b - mid;
        if (c >= 0 && c < M) next[c] += acc[a] * f[b] * grid.dx;
      }
    acc = next;
  }
  double worst = 0.0;
  for (int k = 0; k < M; ++k) worst = std::max(worst, std::abs(acc[k] - g.values[k]));
  EXPECT_LT(worst, 1e-6);
  // variance is additive
  double var = 0.0;
  for (int i = 0; i < 8; ++i) var += spec.sigma(i * h, 0.0);
  EXPECT_NEAR(g.variance() / var, 1.0, 1e-6);
}

TEST(InnovationConvolution, TailMassIsChecked) {
  auto spec = builtin_model("constant");
  auto grid = SpaceGrid::from_bounds(-3, 3, 241);
  EXPECT_THROW(innovation_convolution(spec, 4, 0.0, 0.1, 0.0, grid), TailMassExceeded);
}

TEST(ModelIo, RejectsUnknownTypes) {
  EXPECT_THROW(model_from_json_text(R"({"drift": {"type": "nope"}, "covariance": {"type": "constant", "value": 1},
                                        "innovation": {"type": "gaussian"}})"),
               InvalidConfig);
  EXPECT_THROW(model_from_json_text("{not json"), InvalidConfig);
  EXPECT_THROW(builtin_model("no_such_model"), InvalidConfig);
}

TEST(TimeGridCheck, SmallTimeExponentBound) {
  TimeGrid ok{0.5, 10, 0.1};
  EXPECT_NO_THROW(ok.validate());
  TimeGrid bad{0.5, 10, 0.3};
  EXPECT_THROW(bad.validate(), InvalidConfig);
}
