#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <string>

#include "medge/hermite.hpp"
#include "medge/innovations.hpp"
#include "medge/model.hpp"

namespace medge::test {

inline const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

inline double normal_pdf(double x, double mean, double var) {
  const double u = x - mean;
  return std::exp(-0.5 * u * u / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

// One-dimensional model from scalar callbacks; derivatives fall back to FD.
inline ModelSpec scalar_model(std::string name, std::function<double(double, double)> m,
                              std::function<double(double, double)> s,
                              std::shared_ptr<const StandardInnovation> inn = nullptr, double lo = 1.0,
                              double hi = 1.0) {
  ModelSpec spec;
  spec.d = 1;
  spec.name = std::move(name);
  spec.drift1 = m;
  spec.cov1 = s;
  spec.drift = [m](double t, const Vec& x) { return Vec::Constant(1, m(t, x[0])); };
  spec.covariance = [s](double t, const Vec& x) { return Mat::Constant(1, 1, s(t, x[0])); };
  spec.innovation = inn ? inn : std::make_shared<GaussianInnovation>(1);
  spec.sigma_lower = lo;
  spec.sigma_upper = hi;
  return spec;
}

// Sup of |a - b| over a window.
template <class F, class G>
double sup_diff(F a, G b, double lo, double hi, int points) {
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const double y = lo + (hi - lo) * i / (points - 1);
    worst = std::max(worst, std::abs(a(y) - b(y)));
  }
  return worst;
}

// Cumulant transformation under X -> AX, checked against a Gaussian test
// function phi(z) = exp(-z'Pz/2): with A = Sigma^{-1/2} for a random SPD Sigma,
//   sum_{|nu|=s} chi_nu(AX) D^nu phi(Ax) / nu!  ==  sum_{|nu|=s} chi_nu(X) D^nu_x [phi(Ax)] / nu!.
// Returns |lhs - rhs| / max(1, |lhs|) at one random draw.
inline double cumulant_transform_defect(int d, int s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat B = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = u(rng);
  const Mat sigma = B * B.transpose() + 0.5 * Mat::Identity(d, d);
  Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
  const Mat A = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                es.eigenvectors().transpose();
  Mat C = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) C(i, j) = u(rng);
  const Mat P = C * C.transpose() + Mat::Identity(d, d);

  CumulantTable chi;
  for (auto& nu : multi_indices(d, s)) chi[nu] = u(rng);
  const CumulantTable chi_ax = transform_cumulants_linear(chi, A);

  Vec x(d);
  for (int i = 0; i < d; ++i) x[i] = 1.5 * u(rng);
  const Vec z = A * x;
  const Mat PA = A.transpose() * P * A;
  const double phi = std::exp(-0.5 * z.dot(P * z));
  double lhs = 0.0, rhs = 0.0;
  for (auto& nu : multi_indices(d, s)) {
    lhs += chi_ax.at(nu) * gaussian_x_derivative_ratio(-z, P, nu) * phi / factorial(nu);
    rhs += chi.at(nu) * gaussian_x_derivative_ratio(-x, PA, nu) * phi / factorial(nu);
  }
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

}  // namespace medge::test
