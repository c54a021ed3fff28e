#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "medge/grid.hpp"
#include "medge/innovations.hpp"

namespace medge {

using DriftFn = std::function<Vec(double t, const Vec& x)>;
using CovFn = std::function<Mat(double t, const Vec& x)>;
using ScalarFn = std::function<double(double t, double x)>;

// Optional closed-form partial derivatives for d = 1. Missing entries fall
// back to 4th-order centered differences with step fd_step*(1+|arg|).
struct ScalarDerivatives {
  ScalarFn m_t, m_x, m_xx, s_t, s_x, s_xx;
};

// One triangular-array model X_{k+1} = X_k + m(kh,X_k) h + sqrt(h) xi_{k+1},
// xi ~ q(kh, X_k, .) with covariance sigma(kh, X_k). Immutable once built.
struct ModelSpec {
  int d = 1;
  std::string name;
  DriftFn drift;
  CovFn covariance;
  std::shared_ptr<const StandardInnovation> innovation;
  ScalarDerivatives derivs;
  // Optional allocation-free scalar forms of drift and covariance (d = 1).
  ScalarFn drift1, cov1;
  bool time_homogeneous = false;  // m, sigma and the innovation shape ignore t
  bool x_independent = false;     // m and sigma ignore x
  double fd_step = 1e-4;
  // Declared ellipticity bounds (used by validation and grid sizing).
  double sigma_lower = 0.0, sigma_upper = 0.0;
  // Bound on |m| over the relevant domain, used for grid margins.
  double drift_bound = 0.0;

  Vec m_at(double t, const Vec& x) const;
  Mat sigma_at(double t, const Vec& x) const;
  Vec m_t_at(double t, const Vec& x) const;
  Mat sigma_t_at(double t, const Vec& x) const;

  // d = 1 scalar views.
  double m(double t, double x) const;
  double sigma(double t, double x) const;
  double m_t(double t, double x) const;
  double m_x(double t, double x) const;
  double m_xx(double t, double x) const;
  double sigma_t(double t, double x) const;
  double sigma_x(double t, double x) const;
  double sigma_xx(double t, double x) const;

  // Innovation density q(t, x, y) of xi.
  double q(double t, const Vec& x, const Vec& y) const;
  double q(double t, double x, double y) const;
  // Characteristic function of xi at (t, x) (d = 1).
  Complex q_char_fn(double t, double x, double theta) const;
  Vec sample_xi(double t, const Vec& x, Rng& rng) const;
};

struct TimeGrid {
  double T = 1.0;
  int n = 1;
  std::optional<double> kappa;  // declared small-time exponent

  double h() const { return T / n; }
  double time(int k) const { return k * h(); }
  void validate() const;
};

struct ProbePoint {
  double t;
  Vec x;
};

struct ValidationCheck {
  std::string name;
  bool passed = true;
  double measured = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  double sigma_min = 0.0, sigma_max = 0.0;
  bool passed() const;
  const ValidationCheck& check(const std::string& name) const;
};

struct ValidationTolerances {
  double tol_mean = 1e-8;
  double tol_norm = 1e-8;
  double quad_radius = 12.0;  // in standard deviations
};

// Default probe: times {0, T/2, T} crossed with 9 states in [-4, 4] (d = 1)
// or a 5x5 lattice (d = 2).
std::vector<ProbePoint> default_probe(const ModelSpec& spec, double T = 1.0);

ValidationReport validate_model(const ModelSpec& spec, const std::vector<ProbePoint>& probe,
                                const ValidationTolerances& tol = {});

// chi_nu(t, x) for |nu| in {2, 3, 4}.
double cumulant(const ModelSpec& spec, const MultiIndex& nu, double t, const Vec& x);
double cumulant(const ModelSpec& spec, const MultiIndex& nu, double t, double x);
// Full table of orders 2..4 at (t, x): closed form when available.
CumulantTable cumulant_table(const ModelSpec& spec, double t, const Vec& x);

// Scalar cumulants of q(t, x, .) computed by moment quadrature (d = 1).
ScalarCumulants cumulants_by_quadrature(const ModelSpec& spec, double t, double x, double tol = 1e-12);

// Cumulant table of AX from that of X (all multi-indices of each order present).
CumulantTable transform_cumulants_linear(const CumulantTable& chi, const Mat& A);

// Density of sum_{i<j} xi_i with xi_i ~ q(t + i h, x_frozen, .), sampled on
// `grid` and renormalized. Throws TailMassExceeded if more than tol_tail of
// the mass falls outside the grid.
GridKernel innovation_convolution(const ModelSpec& spec, int j, double t, double h, double x_frozen,
                                  const SpaceGrid& grid, double tol_tail = 1e-10);

}  // namespace medge
