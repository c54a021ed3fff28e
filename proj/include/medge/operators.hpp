#pragma once

#include <functional>
#include <memory>
#include <string>

#include "medge/gauss.hpp"

namespace medge {

// A two-point kernel f(s,t,x,y) with derivatives in x.
class PointKernel {
 public:
  virtual ~PointKernel() = default;
  virtual int dim() const = 0;
  virtual int max_order() const = 0;
  virtual std::string backing() const = 0;
  virtual double value(double s, double t, const Vec& x, const Vec& y) const = 0;
  virtual double deriv(double s, double t, const Vec& x, const Vec& y, const MultiIndex& nu) const = 0;
  // Step used when an operator needs finite differences of derived fields.
  virtual double fd_step(double s, double t) const = 0;

  double value(double s, double t, double x, double y) const;
  double deriv(double s, double t, double x, double y, int k) const;
};

// p~(s,t,x,y) with analytic derivatives up to order 6.
class PtildeKernel final : public PointKernel {
 public:
  using PointKernel::deriv;
  using PointKernel::value;
  explicit PtildeKernel(const ModelSpec& spec, TimeQuadrature quad = {}) : spec_(spec), quad_(quad) {}
  int dim() const override { return spec_.d; }
  int max_order() const override { return 6; }
  std::string backing() const override { return "analytic"; }
  double value(double s, double t, const Vec& x, const Vec& y) const override;
  double deriv(double s, double t, const Vec& x, const Vec& y, const MultiIndex& nu) const override;
  double fd_step(double s, double t) const override;

 private:
  const ModelSpec& spec_;
  TimeQuadrature quad_;
};

// Any callable f(s,t,x,y) (d = 1) with 4th-order central differences in x.
class FdKernel final : public PointKernel {
 public:
  using PointKernel::deriv;
  using PointKernel::value;
  using Fn = std::function<double(double s, double t, double x, double y)>;
  FdKernel(Fn f, double step) : f_(std::move(f)), step_(step) {}
  int dim() const override { return 1; }
  int max_order() const override { return 4; }
  std::string backing() const override { return "finite-difference"; }
  double value(double s, double t, const Vec& x, const Vec& y) const override;
  double deriv(double s, double t, const Vec& x, const Vec& y, const MultiIndex& nu) const override;
  double fd_step(double, double) const override { return step_; }

 private:
  Fn f_;
  double step_;
};

// Table f(s,t,x_i,y_j) at fixed (s,t) on a product grid (d = 1). x-derivatives
// come from 4th-order stencils on the native x grid (one-sided at the edges);
// off-node points use bicubic interpolation.
class GridBackedKernel final : public PointKernel {
 public:
  using PointKernel::deriv;
  using PointKernel::value;
  GridBackedKernel(double s, double t, SpaceGrid xs, SpaceGrid ys, Mat values);
  int dim() const override { return 1; }
  int max_order() const override { return 4; }
  std::string backing() const override { return "grid"; }
  double value(double s, double t, const Vec& x, const Vec& y) const override;
  double deriv(double s, double t, const Vec& x, const Vec& y, const MultiIndex& nu) const override;
  double fd_step(double, double) const override { return xs_.dx; }

  const SpaceGrid& x_grid() const { return xs_; }
  const SpaceGrid& y_grid() const { return ys_; }

 private:
  double lookup(int k, double x, double y) const;
  double s_, t_;
  SpaceGrid xs_, ys_;
  std::vector<Mat> tables_;  // derivative order 0..4, rows x, cols y
};

enum class Op { L, Ltilde, Lstar, Lprime, Ltilde_prime };
enum class Op2 { L2, Lstar2 };

Op parse_op(const std::string& name);

// L uses coefficients at (s,x), Ltilde at (s,y), Lstar the frozen-at-x form
// (pointwise equal to L), Lprime/Ltilde_prime the s-derivatives of the
// coefficients at (s,x)/(s,y).
double apply_operator(Op which, const ModelSpec& spec, const PointKernel& f, double s, double t, const Vec& x,
                      const Vec& y);
double apply_operator(Op which, const ModelSpec& spec, const PointKernel& f, double s, double t, double x,
                      double y);

// L2 = L(L f) with the coefficient fields differentiated (outer derivatives
// by 9-point central differences of z -> (Lf)(s,t,z,y)); Lstar2 squares the
// constant-coefficient operator frozen at (s,x).
double apply_operator_squared(Op2 which, const ModelSpec& spec, const PointKernel& f, double s, double t,
                              const Vec& x, const Vec& y);
double apply_operator_squared(Op2 which, const ModelSpec& spec, const PointKernel& f, double s, double t, double x,
                              double y);

// Parametrix kernel H = (L - Ltilde) p~.
double kernel_H(const ModelSpec& spec, double s, double t, const Vec& x, const Vec& y,
                const TimeQuadrature& quad = {});
double kernel_H(const ModelSpec& spec, double s, double t, double x, double y, const TimeQuadrature& quad = {});

// F_1 with chi_nu(s,x), |nu| = 3; F_2 with chi_nu(s,y), |nu| = 4.
double F_op(int order, const ModelSpec& spec, const PointKernel& f, double s, double t, const Vec& x, const Vec& y);
double F_op(int order, const ModelSpec& spec, const PointKernel& f, double s, double t, double x, double y);

// Time-averaged cumulant chi-bar_nu(s,t,y).
double chi_bar(const ModelSpec& spec, const MultiIndex& nu, double s, double t, const Vec& y,
               const TimeQuadrature& quad = {});

// Classical Edgeworth terms pi~_1, pi~_2.
double classical_pi(int order, const ModelSpec& spec, double s, double t, const Vec& x, const Vec& y,
                    const TimeQuadrature& quad = {});
double classical_pi(int order, const ModelSpec& spec, double s, double t, double x, double y,
                    const TimeQuadrature& quad = {});

}  // namespace medge
