#pragma once

#include <functional>
#include <span>
#include <vector>

namespace medge {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss–Legendre rule on [-1, 1] (Newton on the Legendre recurrence).
const QuadratureRule& gauss_legendre(int n);

// Composite Gauss–Legendre on [a, b] with `panels` equal panels of n nodes.
QuadratureRule composite_gauss_legendre(double a, double b, int n, int panels);

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n, int panels);

// Doubles the panel count until two successive composite GL estimates agree
// to `tol` (absolute) or `max_panels` is exceeded; returns the finer value.
struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int panels = 0;
};
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double tol, int n = 16, int max_panels = 4096);

// Fornberg finite-difference weights for derivative `deriv` at x0 using the
// given stencil points.
std::vector<double> fd_weights(double x0, std::span<const double> points, int deriv);

// Weights of the centered stencil of `accuracy` order for the deriv-th
// derivative on a unit-spaced grid; offsets run from -half to +half.
struct CenteredStencil {
  int half = 0;
  std::vector<double> weights;  // size 2*half+1, unit spacing
};
const CenteredStencil& centered_stencil(int deriv, int accuracy = 4);

// Lagrange basis weights for evaluating at x from nodes xs.
std::vector<double> lagrange_weights(std::span<const double> xs, double x);

}  // namespace medge
