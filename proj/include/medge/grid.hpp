#pragma once

#include <string>
#include <vector>

#include "medge/multi_index.hpp"

namespace medge {

// Uniform 1-D lattice lo, lo+dx, ..., lo+(size-1)dx.
struct SpaceGrid {
  double lo = 0.0;
  double dx = 1.0;
  int size = 0;

  double at(int i) const { return lo + dx * i; }
  double hi() const { return at(size - 1); }
  Vec nodes() const;
  // Index of the node nearest to x; throws InvalidConfig if x is farther than
  // tol*dx from that node.
  int node_index(double x, double tol = 1e-6) const;
  bool contains(double x) const { return x >= lo && x <= hi(); }

  // Grid with spacing dx covering [a, b], with lo aligned to `anchor` + k*dx.
  static SpaceGrid covering(double a, double b, double dx, double anchor = 0.0);
  static SpaceGrid from_bounds(double lo, double hi, int size);
};

// Sampled slice f(s, t, x, .) of a two-point kernel.
struct GridKernel {
  SpaceGrid grid;
  Vec values;
  double s = 0.0, t = 0.0, x = 0.0;
  std::string provenance;

  // Cubic (4-point Lagrange) interpolation; zero outside the grid.
  double interpolate(double y) const;
  double integral() const;  // trapezoid
  double mean() const;
  double variance() const;
  double max_abs() const { return values.cwiseAbs().maxCoeff(); }

  void write_csv(const std::string& path) const;
};

double trapezoid(const Vec& f, double dx);

// Cubic interpolation of samples on `grid` at point y (0 outside).
double interpolate_cubic(const SpaceGrid& grid, const double* f, double y);

// Reusable form of the same stencils: D f and D^T g on raw arrays of `size`.
class FdOperator {
 public:
  FdOperator(int size, double dx, int deriv);
  void apply(const double* f, double* out) const;
  void apply_transpose(const double* g, double* out) const;
  int size() const { return size_; }

 private:
  const double* row(int i, int& start) const;
  int size_, deriv_, half_ = 0, len_ = 0;
  std::vector<double> center_;
  std::vector<std::vector<double>> edge_;
};

// 4th-order finite-difference derivative of order `deriv` on a uniform grid;
// one-sided Fornberg stencils of the same width near the boundary.
Vec fd_derivative(const Vec& f, double dx, int deriv);

// Exact transpose of fd_derivative as a linear map: returns D^T g.
Vec fd_derivative_transpose(const Vec& g, double dx, int deriv);

}  // namespace medge
