#pragma once

#include "medge/grid.hpp"
#include "medge/model.hpp"
#include "medge/quadrature.hpp"

namespace medge {

// Time quadrature for coefficient integrals: Gauss–Legendre panels of 8 nodes,
// nodes_per_unit nodes per unit of time (at least one panel).
struct TimeQuadrature {
  int nodes_per_unit = 32;
  QuadratureRule rule(double s, double t) const;
};

// Integrated coefficients of the Gaussian frozen at y:
// mean_shift = int_s^t m(u,y) du, cov = int_s^t sigma(u,y) du.
struct FrozenGaussianParams {
  Vec mean_shift;
  Mat cov;
  Vec freeze_point;
  double s = 0.0, t = 0.0;
  Mat prec;             // cov^{-1}
  double log_norm = 0;  // log of (2 pi)^{-d/2} det(cov)^{-1/2}

  int dim() const { return static_cast<int>(mean_shift.size()); }
};

FrozenGaussianParams make_frozen_params(const Vec& mean_shift, const Mat& cov, const Vec& freeze_point, double s,
                                        double t);

FrozenGaussianParams frozen_params(const ModelSpec& spec, double s, double t, const Vec& y,
                                   const TimeQuadrature& quad = {});
FrozenGaussianParams frozen_params(const ModelSpec& spec, double s, double t, double y,
                                   const TimeQuadrature& quad = {});

// p~(s,t,x,y): the frozen Gaussian evaluated at its own freeze point.
double ptilde(const FrozenGaussianParams& p, const Vec& x);
double ptilde(const FrozenGaussianParams& p, double x);
// p~^y(s,t,x,z): frozen at p.freeze_point, evaluated at target z.
double ptilde_at(const FrozenGaussianParams& p, const Vec& x, const Vec& z);

// D_x^nu p~(s,t,x,y) for |nu| <= 6 (freeze point held fixed).
double ptilde_deriv(const FrozenGaussianParams& p, const Vec& x, const MultiIndex& nu);
double ptilde_deriv(const FrozenGaussianParams& p, double x, int k);
// All x-derivatives of orders 0..kmax (d = 1).
void ptilde_derivs(const FrozenGaussianParams& p, double x, int kmax, double* out);

// mu_{j,k}(y) = h sum_{i=j}^{k-1} m(ih,y), V_{j,k}(y) = h sum sigma(ih,y).
struct DiscreteFrozenMoments {
  Vec mu;
  Mat V;
  int j = 0, k = 0;
};
DiscreteFrozenMoments discrete_frozen_moments(const ModelSpec& spec, int j, int k, const Vec& y,
                                              const TimeGrid& grid);
DiscreteFrozenMoments discrete_frozen_moments(const ModelSpec& spec, int j, int k, double y,
                                              const TimeGrid& grid);

// Density over z of the frozen chain x + mu_{j,k}(y) + sqrt(h) sum xi_i,
// xi_i ~ q(ih, y, .), sampled on `grid` (FFT of the characteristic function
// product, renormalized). Point values via GridKernel::interpolate.
GridKernel ptilde_h(const ModelSpec& spec, int j, int k, double x, double y_frozen, const SpaceGrid& grid,
                    const TimeGrid& tgrid, double tol_tail = 1e-10);

// Characteristic function of sqrt(h) sum_{i=j}^{k-1} xi_i, xi_i ~ q(ih, y, .).
CharFn frozen_sum_char_fn(const ModelSpec& spec, int j, int k, double y, const TimeGrid& tgrid);

// Symmetric square root of an SPD matrix by eigendecomposition.
Mat matrix_sqrt_spd(const Mat& lambda);

}  // namespace medge
