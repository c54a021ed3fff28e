#include "medge/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "medge/errors.hpp"
#include "medge/quadrature.hpp"

namespace medge {

Vec SpaceGrid::nodes() const {
  Vec v(size);
  for (int i = 0; i < size; ++i) v[i] = at(i);
  return v;
}

int SpaceGrid::node_index(double x, double tol) const {
  const double r = (x - lo) / dx;
  const long i = std::lround(r);
  if (i < 0 || i >= size || std::abs(r - static_cast<double>(i)) > tol)
    throw InvalidConfig("point " + std::to_string(x) + " is not a grid node");
  return static_cast<int>(i);
}

SpaceGrid SpaceGrid::covering(double a, double b, double dx, double anchor) {
  if (!(b > a) || !(dx > 0.0)) throw InvalidConfig("empty grid request");
  const double k_lo = std::floor((a - anchor) / dx);
  const double k_hi = std::ceil((b - anchor) / dx);
  SpaceGrid g;
  g.dx = dx;
  g.lo = anchor + k_lo * dx;
  g.size = static_cast<int>(k_hi - k_lo) + 1;
  return g;
}

SpaceGrid SpaceGrid::from_bounds(double lo, double hi, int size) {
  if (size < 2 || !(hi > lo)) throw InvalidConfig("grid needs two points and hi > lo");
  return SpaceGrid{lo, (hi - lo) / (size - 1), size};
}

double trapezoid(const Vec& f, double dx) {
  if (f.size() == 0) return 0.0;
  return dx * (f.sum() - 0.5 * (f[0] + f[f.size() - 1]));
}

double interpolate_cubic(const SpaceGrid& g, const double* f, double y) {
  const double r = (y - g.lo) / g.dx;
  if (r < 0.0 || r > g.size - 1) return 0.0;
  int i = static_cast<int>(std::floor(r));
  const double frac = r - i;
  if (frac < 1e-12) return f[i];
  // 4-point stencil i-1..i+2, shifted inward at the edges
  int base = std::clamp(i - 1, 0, std::max(0, g.size - 4));
  const double t = r - base;
  double w[4];
  for (int a = 0; a < 4; ++a) {
    double v = 1.0;
    for (int b = 0; b < 4; ++b)
      if (a != b) v *= (t - b) / static_cast<double>(a - b);
    w[a] = v;
  }
  double out = 0.0;
  for (int a = 0; a < 4 && base + a < g.size; ++a) out += w[a] * f[base + a];
  return out;
}

double GridKernel::interpolate(double y) const { return interpolate_cubic(grid, values.data(), y); }

double GridKernel::integral() const { return trapezoid(values, grid.dx); }

double GridKernel::mean() const {
  const Vec z = grid.nodes();
  return trapezoid(values.cwiseProduct(z), grid.dx) / integral();
}

double GridKernel::variance() const {
  const double mu = mean();
  const Vec z = grid.nodes().array() - mu;
  return trapezoid(values.cwiseProduct(z.cwiseProduct(z)), grid.dx) / integral();
}

void GridKernel::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidConfig("cannot open " + path);
  out << "coordinate,value\n" << std::setprecision(17);
  for (int i = 0; i < grid.size; ++i) out << grid.at(i) << ',' << values[i] << '\n';
}

FdOperator::FdOperator(int size, double dx, int deriv) : size_(size), deriv_(deriv) {
  const auto& c = centered_stencil(std::max(deriv, 1), 4);
  half_ = c.half;
  len_ = 2 * half_ + 1;
  if (size < len_) throw InvalidConfig("grid too small for finite-difference stencil");
  const double scale = std::pow(dx, -deriv);
  center_.resize(len_);
  for (int k = 0; k < len_; ++k) center_[k] = c.weights[k] * scale;
  std::vector<double> pts(len_);
  for (int k = 0; k < len_; ++k) pts[k] = k;
  edge_.resize(2 * half_);
  for (int i = 0; i < half_; ++i) {
    edge_[i] = fd_weights(static_cast<double>(i), pts, deriv);
    edge_[half_ + i] = fd_weights(static_cast<double>(len_ - half_ + i), pts, deriv);
    for (auto& v : edge_[i]) v *= scale;
    for (auto& v : edge_[half_ + i]) v *= scale;
  }
}

const double* FdOperator::row(int i, int& start) const {
  if (i < half_) {
    start = 0;
    return edge_[i].data();
  }
  if (i >= size_ - half_) {
    start = size_ - len_;
    return edge_[half_ + (i - (size_ - half_))].data();
  }
  start = i - half_;
  return center_.data();
}

void FdOperator::apply(const double* f, double* out) const {
  if (deriv_ == 0) {
    std::copy(f, f + size_, out);
    return;
  }
  for (int i = 0; i < size_; ++i) {
    int st;
    const double* w = row(i, st);
    double s = 0.0;
    for (int k = 0; k < len_; ++k) s += w[k] * f[st + k];
    out[i] = s;
  }
}

void FdOperator::apply_transpose(const double* g, double* out) const {
  if (deriv_ == 0) {
    std::copy(g, g + size_, out);
    return;
  }
  std::fill(out, out + size_, 0.0);
  for (int i = 0; i < size_; ++i) {
    int st;
    const double* w = row(i, st);
    const double gi = g[i];
    if (gi == 0.0) continue;
    for (int k = 0; k < len_; ++k) out[st + k] += w[k] * gi;
  }
}

Vec fd_derivative(const Vec& f, double dx, int deriv) {
  if (deriv == 0) return f;
  FdOperator op(static_cast<int>(f.size()), dx, deriv);
  Vec out(f.size());
  op.apply(f.data(), out.data());
  return out;
}

Vec fd_derivative_transpose(const Vec& g, double dx, int deriv) {
  if (deriv == 0) return g;
  FdOperator op(static_cast<int>(g.size()), dx, deriv);
  Vec out(g.size());
  op.apply_transpose(g.data(), out.data());
  return out;
}

}  // namespace medge
