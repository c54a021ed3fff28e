#include "medge/operators.hpp"

#include <algorithm>
#include <cmath>

#include "medge/errors.hpp"
#include "medge/quadrature.hpp"

namespace medge {

namespace {

Vec v1(double x) { return Vec::Constant(1, x); }

void require_order(const PointKernel& f, int k) {
  if (f.max_order() < k)
    throw DerivativeOrderUnavailable(f.backing() + " kernel provides derivatives up to order " +
                                     std::to_string(f.max_order()) + ", need " + std::to_string(k));
}

MultiIndex unit2(int d, int i, int j) {
  MultiIndex nu(d, 0);
  ++nu[i];
  ++nu[j];
  return nu;
}

// sum_ij a_ij D_ij f / 2 + sum_i b_i D_i f
double second_order_form(const Vec& b, const Mat& a, const PointKernel& f, double s, double t, const Vec& x,
                         const Vec& y) {
  const int d = static_cast<int>(x.size());
  double out = 0.0;
  for (int i = 0; i < d; ++i) {
    if (b[i] != 0.0) out += b[i] * f.deriv(s, t, x, y, unit_index(d, i));
    for (int j = 0; j < d; ++j)
      if (a(i, j) != 0.0) out += 0.5 * a(i, j) * f.deriv(s, t, x, y, unit2(d, i, j));
  }
  return out;
}

}  // namespace

double PointKernel::value(double s, double t, double x, double y) const { return value(s, t, v1(x), v1(y)); }
double PointKernel::deriv(double s, double t, double x, double y, int k) const {
  return deriv(s, t, v1(x), v1(y), MultiIndex{k});
}

double PtildeKernel::value(double s, double t, const Vec& x, const Vec& y) const {
  return ptilde(frozen_params(spec_, s, t, y, quad_), x);
}

double PtildeKernel::deriv(double s, double t, const Vec& x, const Vec& y, const MultiIndex& nu) const {
  return ptilde_deriv(frozen_params(spec_, s, t, y, quad_), x, nu);
}

double PtildeKernel::fd_step(double s, double t) const {
  const double sd = std::sqrt(spec_.sigma_lower > 0.0 ? spec_.sigma_lower : 1.0);
  return 0.05 * sd * std::sqrt(t - s);
}

double FdKernel::value(double s, double t, const Vec& x, const Vec& y) const { return f_(s, t, x[0], y[0]); }

double FdKernel::deriv(double s, double t, const Vec& x, const Vec& y, const MultiIndex& nu) const {
  const int k = nu.at(0);
  if (k == 0) return value(s, t, x, y);
  if (k > 4) throw DerivativeOrderUnavailable("finite-difference kernel provides derivatives up to order 4");
  const auto& st = centered_stencil(k, 4);
  double out = 0.0;
  for (int a = -st.half; a <= st.half; ++a) {
    const double w = st.weights[a + st.half];
    if (w != 0.0) out += w * f_(s, t, x[0] + a * step_, y[0]);
  }
  return out / std::pow(step_, k);
}

GridBackedKernel::GridBackedKernel(double s, double t, SpaceGrid xs, SpaceGrid ys, Mat values)
    : s_(s), t_(t), xs_(xs), ys_(ys) {
  if (values.rows() != xs.size || values.cols() != ys.size) throw DimensionMismatch("grid table shape");
  tables_.push_back(values);
  for (int k = 1; k <= 4; ++k) {
    Mat d(values.rows(), values.cols());
    for (Eigen::Index c = 0; c < values.cols(); ++c) d.col(c) = fd_derivative(values.col(c), xs.dx, k);
    tables_.push_back(std::move(d));
  }
}

double GridBackedKernel::lookup(int k, double x, double y) const {
  const Mat& tab = tables_.at(k);
  auto stencil = [](const SpaceGrid& g, double p, int& base, double w[4]) -> bool {
    const double r = (p - g.lo) / g.dx;
    if (r < -1e-9 || r > g.size - 1 + 1e-9) return false;
    const int i = static_cast<int>(std::floor(r));
    base = std::clamp(i - 1, 0, g.size - 4);
    const double tt = r - base;
    for (int a = 0; a < 4; ++a) {
      double v = 1.0;
      for (int b = 0; b < 4; ++b)
        if (a != b) v *= (tt - b) / static_cast<double>(a - b);
      w[a] = v;
    }
    return true;
  };
  int bx, by;
  double wx[4], wy[4];
  if (!stencil(xs_, x, bx, wx) || !stencil(ys_, y, by, wy)) return 0.0;
  double out = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) out += wx[a] * wy[b] * tab(bx + a, by + b);
  return out;
}

double GridBackedKernel::value(double s, double t, const Vec& x, const Vec& y) const {
  if (std::abs(s - s_) > 1e-12 || std::abs(t - t_) > 1e-12) throw InvalidConfig("grid kernel queried off its (s,t)");
  return lookup(0, x[0], y[0]);
}

double GridBackedKernel::deriv(double s, double t, const Vec& x, const Vec& y, const MultiIndex& nu) const {
  if (nu.at(0) > 4) throw DerivativeOrderUnavailable("grid kernel provides derivatives up to order 4");
  if (std::abs(s - s_) > 1e-12 || std::abs(t - t_) > 1e-12) throw InvalidConfig("grid kernel queried off its (s,t)");
  return lookup(nu[0], x[0], y[0]);
}

Op parse_op(const std::string& name) {
  if (name == "L") return Op::L;
  if (name == "Ltilde") return Op::Ltilde;
  if (name == "Lstar") return Op::Lstar;
  if (name == "Lprime") return Op::Lprime;
  if (name == "Ltilde_prime") return Op::Ltilde_prime;
  throw InvalidConfig("unknown operator " + name);
}

double apply_operator(Op which, const ModelSpec& spec, const PointKernel& f, double s, double t, const Vec& x,
                      const Vec& y) {
  require_order(f, 2);
  switch (which) {
    case Op::L:
    case Op::Lstar:
      return second_order_form(spec.m_at(s, x), spec.sigma_at(s, x), f, s, t, x, y);
    case Op::Ltilde:
      return second_order_form(spec.m_at(s, y), spec.sigma_at(s, y), f, s, t, x, y);
    case Op::Lprime:
      return second_order_form(spec.m_t_at(s, x), spec.sigma_t_at(s, x), f, s, t, x, y);
    case Op::Ltilde_prime:
      return second_order_form(spec.m_t_at(s, y), spec.sigma_t_at(s, y), f, s, t, x, y);
  }
  return 0.0;
}

double apply_operator(Op which, const ModelSpec& spec, const PointKernel& f, double s, double t, double x, double y) {
  return apply_operator(which, spec, f, s, t, v1(x), v1(y));
}

double apply_operator_squared(Op2 which, const ModelSpec& spec, const PointKernel& f, double s, double t,
                              const Vec& x, const Vec& y) {
  const int d = static_cast<int>(x.size());
  const Vec m = spec.m_at(s, x);
  const Mat sig = spec.sigma_at(s, x);
  if (which == Op2::Lstar2) {
    require_order(f, 4);
    std::vector<std::pair<double, MultiIndex>> terms;
    for (int i = 0; i < d; ++i) {
      terms.emplace_back(m[i], unit_index(d, i));
      for (int j = 0; j < d; ++j) terms.emplace_back(0.5 * sig(i, j), unit2(d, i, j));
    }
    double out = 0.0;
    for (const auto& [ca, na] : terms)
      for (const auto& [cb, nb] : terms)
        if (ca != 0.0 && cb != 0.0) out += ca * cb * f.deriv(s, t, x, y, na + nb);
    return out;
  }
  require_order(f, 2);
  // nested: outer derivatives of g(z) = (L f)(s,t,z,y)
  const double step = f.fd_step(s, t);
  const auto& s1 = centered_stencil(1, 8);
  const auto& s2 = centered_stencil(2, 8);
  auto g = [&](const Vec& z) { return apply_operator(Op::L, spec, f, s, t, z, y); };
  double out = 0.0;
  for (int i = 0; i < d; ++i) {
    double di = 0.0;
    for (int a = -s1.half; a <= s1.half; ++a) {
      const double w = s1.weights[a + s1.half];
      if (w == 0.0) continue;
      Vec z = x;
      z[i] += a * step;
      di += w * g(z);
    }
    out += m[i] * di / step;
    for (int j = 0; j < d; ++j) {
      if (sig(i, j) == 0.0) continue;
      double dij = 0.0;
      if (i == j) {
        for (int a = -s2.half; a <= s2.half; ++a) {
          const double w = s2.weights[a + s2.half];
          if (w == 0.0) continue;
          Vec z = x;
          z[i] += a * step;
          dij += w * g(z);
        }
      } else {
        for (int a = -s1.half; a <= s1.half; ++a)
          for (int b = -s1.half; b <= s1.half; ++b) {
            const double w = s1.weights[a + s1.half] * s1.weights[b + s1.half];
            if (w == 0.0) continue;
            Vec z = x;
            z[i] += a * step;
            z[j] += b * step;
            dij += w * g(z);
          }
      }
      out += 0.5 * sig(i, j) * dij / (step * step);
    }
  }
  return out;
}

double apply_operator_squared(Op2 which, const ModelSpec& spec, const PointKernel& f, double s, double t, double x,
                              double y) {
  return apply_operator_squared(which, spec, f, s, t, v1(x), v1(y));
}

double kernel_H(const ModelSpec& spec, double s, double t, const Vec& x, const Vec& y, const TimeQuadrature& quad) {
  const auto p = frozen_params(spec, s, t, y, quad);
  const int d = spec.d;
  const Vec dm = spec.m_at(s, x) - spec.m_at(s, y);
  const Mat ds = spec.sigma_at(s, x) - spec.sigma_at(s, y);
  double out = 0.0;
  for (int i = 0; i < d; ++i) {
    if (dm[i] != 0.0) out += dm[i] * ptilde_deriv(p, x, unit_index(d, i));
    for (int j = 0; j < d; ++j)
      if (ds(i, j) != 0.0) out += 0.5 * ds(i, j) * ptilde_deriv(p, x, unit2(d, i, j));
  }
  return out;
}

double kernel_H(const ModelSpec& spec, double s, double t, double x, double y, const TimeQuadrature& quad) {
  return kernel_H(spec, s, t, v1(x), v1(y), quad);
}

double F_op(int ord, const ModelSpec& spec, const PointKernel& f, double s, double t, const Vec& x, const Vec& y) {
  if (ord != 1 && ord != 2) throw UnsupportedOrder("F operators exist for orders 1 and 2");
  const int n = ord + 2;
  require_order(f, n);
  const Vec& anchor = ord == 1 ? x : y;
  double out = 0.0;
  for (const auto& nu : multi_indices(spec.d, n)) {
    const double c = cumulant(spec, nu, s, anchor);
    if (c != 0.0) out += c / factorial(nu) * f.deriv(s, t, x, y, nu);
  }
  return out;
}

double F_op(int ord, const ModelSpec& spec, const PointKernel& f, double s, double t, double x, double y) {
  return F_op(ord, spec, f, s, t, v1(x), v1(y));
}

double chi_bar(const ModelSpec& spec, const MultiIndex& nu, double s, double t, const Vec& y,
               const TimeQuadrature& quad) {
  if (spec.time_homogeneous) return cumulant(spec, nu, s, y);
  const auto r = quad.rule(s, t);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) acc += r.weights[i] * cumulant(spec, nu, r.nodes[i], y);
  return acc / (t - s);
}

double classical_pi(int ord, const ModelSpec& spec, double s, double t, const Vec& x, const Vec& y,
                    const TimeQuadrature& quad) {
  if (ord != 1 && ord != 2) throw UnsupportedOrder("classical terms exist for orders 1 and 2");
  const auto p = frozen_params(spec, s, t, y, quad);
  const double len = t - s;
  std::vector<std::pair<double, MultiIndex>> c3;
  for (const auto& nu : multi_indices(spec.d, 3)) {
    const double c = chi_bar(spec, nu, s, t, y, quad) / factorial(nu);
    if (c != 0.0) c3.emplace_back(c, nu);
  }
  if (ord == 1) {
    double out = 0.0;
    for (const auto& [c, nu] : c3) out += c * ptilde_deriv(p, x, nu);
    return len * out;
  }
  double four = 0.0;
  for (const auto& nu : multi_indices(spec.d, 4)) {
    const double c = chi_bar(spec, nu, s, t, y, quad) / factorial(nu);
    if (c != 0.0) four += c * ptilde_deriv(p, x, nu);
  }
  double sq = 0.0;
  for (const auto& [ca, na] : c3)
    for (const auto& [cb, nb] : c3) sq += ca * cb * ptilde_deriv(p, x, na + nb);
  return len * four + 0.5 * len * len * sq;
}

double classical_pi(int ord, const ModelSpec& spec, double s, double t, double x, double y,
                    const TimeQuadrature& quad) {
  return classical_pi(ord, spec, s, t, v1(x), v1(y), quad);
}

}  // namespace medge
