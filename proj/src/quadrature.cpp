#include "medge/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "medge/errors.hpp"

namespace medge {

namespace {

QuadratureRule build_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p1 = x, p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0, p1 = x;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
  if (n < 1) throw InvalidConfig("Gauss-Legendre rule needs at least one node");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

QuadratureRule composite_gauss_legendre(double a, double b, int n, int panels) {
  const auto& base = gauss_legendre(n);
  QuadratureRule r;
  r.nodes.reserve(static_cast<std::size_t>(n) * panels);
  r.weights.reserve(static_cast<std::size_t>(n) * panels);
  const double len = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * len;
    for (int i = 0; i < n; ++i) {
      r.nodes.push_back(lo + 0.5 * len * (base.nodes[i] + 1.0));
      r.weights.push_back(0.5 * len * base.weights[i]);
    }
  }
  return r;
}

double integrate_gl(const std::function<double(double)>& f, double a, double b, int n, int panels) {
  const auto rule = composite_gauss_legendre(a, b, n, panels);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
  return s;
}

AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double tol, int n, int max_panels) {
  int panels = 1;
  double coarse = integrate_gl(f, a, b, n, panels);
  while (true) {
    panels *= 2;
    const double fine = integrate_gl(f, a, b, n, panels);
    const double err = std::abs(fine - coarse);
    if (err <= tol || panels >= max_panels) {
      if (err > tol) throw QuadratureBudgetExceeded("adaptive Gauss-Legendre did not reach tolerance");
      return {fine, err, panels};
    }
    coarse = fine;
  }
}

std::vector<double> fd_weights(double x0, std::span<const double> z, int m) {
  // Fornberg (1988), "Generation of finite difference formulas on arbitrarily
  // spaced grids".
  const int n = static_cast<int>(z.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = z[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = z[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = z[i] - z[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

const CenteredStencil& centered_stencil(int deriv, int accuracy) {
  if (deriv < 0 || accuracy < 2 || accuracy % 2 != 0) throw InvalidConfig("bad stencil request");
  static std::mutex mu;
  static std::map<std::pair<int, int>, CenteredStencil> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(deriv, accuracy);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  CenteredStencil s;
  s.half = (deriv + 1) / 2 + accuracy / 2 - 1;
  if (deriv == 0) s.half = 0;
  std::vector<double> pts;
  for (int k = -s.half; k <= s.half; ++k) pts.push_back(k);
  s.weights = fd_weights(0.0, pts, deriv);
  for (double& w : s.weights)
    if (std::abs(w) < 1e-13) w = 0.0;
  return cache.emplace(key, std::move(s)).first->second;
}

std::vector<double> lagrange_weights(std::span<const double> xs, double x) {
  std::vector<double> w(xs.size(), 1.0);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j)
      if (i != j) w[i] *= (x - xs[j]) / (xs[i] - xs[j]);
  return w;
}

}  // namespace medge
