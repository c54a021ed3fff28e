#pragma once

#include <string>
#include <vector>

#include "medge/kernels.hpp"
#include "medge/operators.hpp"

namespace medge {

struct SeriesConfig {
  int r_max = 10;
  double tol_term = 1e-7;
  int time_nodes = 16;      // Gauss–Legendre nodes per half of a split time interval
  int table_times = 24;     // rows of the tabulated terms, uniform in sqrt(u - s)
  double table_step = 0.1;  // spacing of the scaled space coordinate
  double space_per_sd = 3;  // trapezoid nodes per standard deviation
  double window_sd = 9;     // window half-width in standard deviations
  // Model scales used to size windows; series_config_for fills them in.
  double sd_upper = 1.0, sd_lower = 1.0, drift_bound = 0.0;
  TimeQuadrature quad;
};

SeriesConfig series_config_for(const ModelSpec& spec);

// A density (or density slice) together with how it was obtained.
struct DensityEstimate {
  SpaceGrid grid;  // sample locations; a one-node grid for a single point
  // Explicit sample locations when they do not form a uniform grid.
  std::vector<double> points;
  Vec values;
  std::string method;
  std::string resolution;
  double error_estimate = 0.0;
  int terms = 0;
  std::vector<double> term_sups;  // series only: sup of each term r >= 1 over its space table
  double s = 0.0, t = 0.0, x = 0.0;

  double at(double y) const;
  double value() const { return values[0]; }
  // Columns: coordinate,value,method,error_estimate
  void write_csv(const std::string& path) const;
};

// (f (x) g)(s,t,x,y) = int_s^t du int f(s,u,x,z) g(u,t,z,y) dz for d = 1.
// The time interval is split at its midpoint with square-root substitutions
// at both ends; space uses the trapezoid rule on the intersection of the two
// kernels' windows. Throws QuadratureBudgetExceeded when a refined pass
// disagrees by more than 10 * tol_term. The refinement delta is stored in
// *error when given.
double convolve(const PointKernel& f, const PointKernel& g, double s, double t, double x, double y,
                const SeriesConfig& cfg, double* error = nullptr);

// Parametrix series p = sum_r p~ (x) H^(r) at the targets ys (d = 1).
DensityEstimate diffusion_density_series(const ModelSpec& spec, double s, double t, double x,
                                         const std::vector<double>& ys, const SeriesConfig& cfg);
DensityEstimate diffusion_density_series(const ModelSpec& spec, double s, double t, double x, double y,
                                         const SeriesConfig& cfg);

// Euler transition z -> N(z + m(u,z) tau, sigma(u,z) tau) on `grid`, banded
// to `radius_sd` standard deviations, rows normalized.
BandKernel euler_step_kernel(const ModelSpec& spec, double u, double tau, const SpaceGrid& grid,
                             double radius_sd = 10.0);

// Reference diffusion density p(s,t,x,.) on `grid`: Euler Chapman–Kolmogorov
// with n_internal and 2 n_internal steps, Richardson-extrapolated. The error
// estimate is the sup difference of the two passes.
DensityEstimate ck_reference(const ModelSpec& spec, double s, double t, double x, const SpaceGrid& grid,
                             int n_internal);

// Grid for densities started near [a, b] over a horizon `horizon`: margin of
// `n_sd` standard deviations plus the drift excursion.
SpaceGrid density_grid(const ModelSpec& spec, double a, double b, double horizon, double dx, double n_sd = 9.0);

}  // namespace medge
