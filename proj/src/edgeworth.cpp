#include "medge/edgeworth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "medge/errors.hpp"

namespace medge {

namespace {

// Everything the sweep carries, as (grid x start point) blocks.
struct SweepFields {
  Mat p, pi1;
  std::array<Mat, 4> terms;
};

struct CoefficientRow {
  Vec sigma, m, a3, a4, sigma_t, m_t;
};

void fill_coefficients(const ModelSpec& spec, double u, const SpaceGrid& grid, bool time_terms, CoefficientRow& c) {
  const int M = grid.size;
  c.sigma.resize(M);
  c.m.resize(M);
  c.a3.resize(M);
  c.a4.resize(M);
  if (time_terms) {
    c.sigma_t.resize(M);
    c.m_t.resize(M);
  }
  const CumulantTable eta = spec.innovation->cumulants(u);
  const bool closed = !eta.empty();
  const double k3 = closed ? eta.at({3}) : 0.0, k4 = closed ? eta.at({4}) : 0.0;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < M; ++i) {
    const double z = grid.at(i);
    const double s = spec.sigma(u, z);
    c.sigma[i] = s;
    c.m[i] = spec.m(u, z);
    if (closed) {
      c.a3[i] = std::pow(s, 1.5) * k3 / 6.0;
      c.a4[i] = s * s * k4 / 24.0;
    } else {
      c.a3[i] = cumulant(spec, {3}, u, z) / 6.0;
      c.a4[i] = cumulant(spec, {4}, u, z) / 24.0;
    }
    if (time_terms) {
      c.sigma_t[i] = spec.sigma_t(u, z);
      c.m_t[i] = spec.m_t(u, z);
    }
  }
}

std::vector<double> chebyshev_nodes(double T, int J) {
  std::vector<double> t(J);
  for (int j = 0; j < J; ++j) t[j] = 0.5 * T * (1.0 - std::cos(std::numbers::pi * (j + 0.5) / J));
  return t;
}

SweepFields sweep(const ModelSpec& spec, double T, const SpaceGrid& grid, const std::vector<int>& starts, int N,
                  const ExpansionConfig& cfg) {
  const int M = grid.size, nx = static_cast<int>(starts.size());
  const double tau = T / N, dz = grid.dx;
  const FdOperator D1(M, dz, 1), D2(M, dz, 2), D3(M, dz, 3), D4(M, dz, 4);

  const bool f2_on_grid = spec.x_independent || cfg.f2_anchor == F2Anchor::Source;
  const bool f2_factor = !f2_on_grid && spec.time_homogeneous;
  const bool f2_basis = !f2_on_grid && !spec.time_homogeneous;
  const bool time_terms = !spec.time_homogeneous && !spec.x_independent;
  const int J = (f2_basis || time_terms) ? cfg.time_basis : 0;
  const std::vector<double> tnodes = chebyshev_nodes(T, std::max(J, 1));

  // Block layout: kind k occupies columns [k*nx, (k+1)*nx).
  enum { kR = 0, kAcc1, kNested, kGen, kF2, kTime, kFixed };
  const int jF2 = kFixed, jD2 = jF2 + (f2_basis ? J : 0), jD1 = jD2 + (time_terms ? J : 0);
  const int kinds = jD1 + (time_terms ? J : 0);
  Mat S = Mat::Zero(M, kinds * nx), next(M, kinds * nx);
  auto col = [&](int kind, int c) { return S.col(kind * nx + c); };
  for (int c = 0; c < nx; ++c) S(starts[c], kR * nx + c) = 1.0 / dz;

  CoefficientRow co;
  BandKernel K;
  for (int l = 0; l <= N; ++l) {
    const double u = l * tau;
    const double w = (l == 0 || l == N) ? 0.5 * tau : tau;
    fill_coefficients(spec, u, grid, time_terms, co);
    std::vector<double> basis;
    if (J > 0) basis = lagrange_weights(tnodes, u);

#pragma omp parallel
    {
      Vec tmp(M), b(M), s(M), v(M), v2(M), lt(M);
#pragma omp for schedule(static)
      for (int c = 0; c < nx; ++c) {
        const Vec r = col(kR, c);
        // F_1 term: b = D3^T (a3 r)
        tmp = co.a3.cwiseProduct(r);
        D3.apply_transpose(tmp.data(), b.data());
        if (l < N)
          s = tau * col(kAcc1, c) + 0.5 * tau * w * b;
        else
          s = 0.5 * tau * col(kAcc1, c);
        col(kAcc1, c) += w * b;
        tmp = co.a3.cwiseProduct(s);
        D3.apply_transpose(tmp.data(), v.data());
        col(kNested, c) += v;

        // (Lstar^2 - L^2)^T r
        tmp = 0.25 * co.sigma.cwiseProduct(co.sigma).cwiseProduct(r);
        D4.apply_transpose(tmp.data(), v.data());
        tmp = co.m.cwiseProduct(co.sigma).cwiseProduct(r);
        D3.apply_transpose(tmp.data(), v2.data());
        v += v2;
        tmp = co.m.cwiseProduct(co.m).cwiseProduct(r);
        D2.apply_transpose(tmp.data(), v2.data());
        v += v2;
        auto apply_LT = [&](const Vec& in, Vec& out) {
          Vec t1 = 0.5 * co.sigma.cwiseProduct(in), t2 = co.m.cwiseProduct(in), o2(M);
          D2.apply_transpose(t1.data(), out.data());
          D1.apply_transpose(t2.data(), o2.data());
          out += o2;
        };
        apply_LT(r, lt);
        apply_LT(lt, v2);
        col(kGen, c) += 0.5 * w * (v - v2);

        // F_2 term
        if (f2_on_grid) {
          tmp = co.a4.cwiseProduct(r);
          D4.apply_transpose(tmp.data(), v.data());
          col(kF2, c) += w * v;
        } else {
          D4.apply_transpose(r.data(), v.data());
          if (f2_factor) {
            col(kF2, c) += w * v;
          } else {
            for (int j = 0; j < J; ++j) col(jF2 + j, c) += (w * basis[j]) * v;
          }
        }

        // time-derivative term, -1/2 p (x) (L' - Ltilde') p
        if (time_terms) {
          tmp = 0.5 * co.sigma_t.cwiseProduct(r);
          D2.apply_transpose(tmp.data(), v.data());
          tmp = co.m_t.cwiseProduct(r);
          D1.apply_transpose(tmp.data(), v2.data());
          col(kTime, c) += (-0.5 * w) * (v + v2);
          D2.apply_transpose(r.data(), v.data());
          D1.apply_transpose(r.data(), v2.data());
          for (int j = 0; j < J; ++j) {
            col(jD2 + j, c) += (w * basis[j]) * v;
            col(jD1 + j, c) += (w * basis[j]) * v2;
          }
        }
      }
    }

    if (l < N) {
      if (l == 0 || !spec.time_homogeneous) K = euler_step_kernel(spec, u, tau, grid, cfg.radius_sd);
      propagate_block(K, S, next);
      S.swap(next);
    }
  }

  SweepFields out;
  out.p = S.middleCols(kR * nx, nx);
  out.pi1 = S.middleCols(kAcc1 * nx, nx);
  out.terms[kPi2Nested] = S.middleCols(kNested * nx, nx);
  out.terms[kPi2Generator] = S.middleCols(kGen * nx, nx);
  Mat f2 = S.middleCols(kF2 * nx, nx);
  Mat td = S.middleCols(kTime * nx, nx);
  for (int i = 0; i < M; ++i) {
    const double y = grid.at(i);
    if (f2_factor) f2.row(i) *= cumulant(spec, {4}, 0.0, y) / 24.0;
    for (int j = 0; j < J; ++j) {
      const double tj = tnodes[j];
      if (f2_basis) f2.row(i) += cumulant(spec, {4}, tj, y) / 24.0 * S.block(i, (jF2 + j) * nx, 1, nx);
      if (time_terms) {
        td.row(i) += 0.25 * spec.sigma_t(tj, y) * S.block(i, (jD2 + j) * nx, 1, nx);
        td.row(i) += 0.5 * spec.m_t(tj, y) * S.block(i, (jD1 + j) * nx, 1, nx);
      }
    }
  }
  out.terms[kPi2F2] = f2;
  out.terms[kPi2TimeDerivative] = td;
  return out;
}

Mat sample_rows(const SpaceGrid& grid, const Mat& field, const std::vector<double>& ys) {
  // field: grid x start point; result: start point x ys
  Mat out(field.cols(), static_cast<Eigen::Index>(ys.size()));
  for (Eigen::Index c = 0; c < field.cols(); ++c)
    for (std::size_t j = 0; j < ys.size(); ++j)
      out(c, static_cast<Eigen::Index>(j)) = interpolate_cubic(grid, field.col(c).data(), ys[j]);
  return out;
}

}  // namespace

ExpansionResult ExpansionTable::at(int i, int j, double h) const {
  ExpansionResult r;
  r.x = xs[i];
  r.y = ys[j];
  r.T = T;
  r.h = h;
  r.p = p(i, j);
  r.pi1 = pi1(i, j);
  r.pi2 = pi2(i, j);
  for (int k = 0; k < 4; ++k) r.pi2_terms[k] = pi2_terms[k](i, j);
  r.expansion = r.p + std::sqrt(h) * r.pi1 + h * r.pi2;
  r.p_error = p_error(i, j);
  r.pi1_error = pi1_error(i, j);
  r.pi2_error = pi2_error(i, j);
  return r;
}

ExpansionTable expansion_table(const ModelSpec& spec, double T, const std::vector<double>& xs,
                               const std::vector<double>& ys, const ExpansionConfig& cfg) {
  if (spec.d != 1) throw UnsupportedDimension("the expansion terms are implemented for d = 1");
  if (!(T > 0.0)) throw InvalidConfig("horizon must be positive");
  if (xs.empty() || ys.empty()) throw InvalidConfig("empty evaluation set");
  if (cfg.n_internal < 4) throw InvalidConfig("n_internal must be at least 4");
  const double dz = cfg.dz > 0.0 ? cfg.dz : std::sqrt(T) / 70.0;
  double lo = xs[0], hi = xs[0];
  for (double v : xs) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : ys) lo = std::min(lo, v), hi = std::max(hi, v);
  const double margin = cfg.margin_sd * std::sqrt(spec.sigma_upper * T) + spec.drift_bound * T + 8.0 * dz;
  const SpaceGrid grid = SpaceGrid::covering(lo - margin, hi + margin, dz, xs[0]);
  std::vector<int> starts;
  for (double x : xs) starts.push_back(grid.node_index(x, 1e-6));

  const SweepFields coarse = sweep(spec, T, grid, starts, cfg.n_internal, cfg);
  SweepFields best = coarse, delta;
  bool have_delta = false;
  if (cfg.richardson) {
    const SweepFields fine = sweep(spec, T, grid, starts, 2 * cfg.n_internal, cfg);
    best.p = 2.0 * fine.p - coarse.p;
    best.pi1 = 2.0 * fine.pi1 - coarse.pi1;
    delta.p = fine.p - coarse.p;
    delta.pi1 = fine.pi1 - coarse.pi1;
    for (int k = 0; k < 4; ++k) {
      best.terms[k] = 2.0 * fine.terms[k] - coarse.terms[k];
      delta.terms[k] = fine.terms[k] - coarse.terms[k];
    }
    have_delta = true;
  }

  ExpansionTable t;
  t.T = T;
  t.xs = xs;
  t.ys = ys;
  t.p = sample_rows(grid, best.p, ys);
  t.pi1 = sample_rows(grid, best.pi1, ys);
  t.pi2 = Mat::Zero(t.p.rows(), t.p.cols());
  for (int k = 0; k < 4; ++k) {
    t.pi2_terms[k] = sample_rows(grid, best.terms[k], ys);
    t.pi2 += t.pi2_terms[k];
  }
  if (have_delta) {
    t.p_error = sample_rows(grid, delta.p, ys).cwiseAbs();
    t.pi1_error = sample_rows(grid, delta.pi1, ys).cwiseAbs();
    Mat d2 = Mat::Zero(t.p.rows(), t.p.cols());
    for (int k = 0; k < 4; ++k) d2 += sample_rows(grid, delta.terms[k], ys);
    t.pi2_error = d2.cwiseAbs();
  } else {
    t.p_error = t.pi1_error = t.pi2_error = Mat::Zero(t.p.rows(), t.p.cols());
  }
  t.resolution = "n_internal=" + std::to_string(cfg.n_internal) + (cfg.richardson ? "+richardson" : "") +
                 ",dz=" + std::to_string(dz) + ",grid=" + std::to_string(grid.size);
  return t;
}

ExpansionResult expand(const ModelSpec& spec, double T, double h, double x, double y, const ExpansionConfig& cfg) {
  return expansion_table(spec, T, {x}, {y}, cfg).at(0, 0, h);
}

double pi1(const ModelSpec& spec, double T, double x, double y, const ExpansionConfig& cfg) {
  return expansion_table(spec, T, {x}, {y}, cfg).pi1(0, 0);
}

double pi2(const ModelSpec& spec, double T, double x, double y, const ExpansionConfig& cfg) {
  return expansion_table(spec, T, {x}, {y}, cfg).pi2(0, 0);
}

double defect_weight(double T, double x, double y, double s_prime, int d) {
  return std::pow(T, 0.5 * d) * (1.0 + std::pow(std::abs(y - x) / std::sqrt(T), s_prime));
}

double weighted_sup_error(const Mat& defect, const std::vector<double>& xs, const std::vector<double>& ys, double T,
                          double s_prime) {
  if (defect.rows() != static_cast<Eigen::Index>(xs.size()) || defect.cols() != static_cast<Eigen::Index>(ys.size()))
    throw DimensionMismatch("defect table does not match the evaluation set");
  double sup = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j)
      sup = std::max(sup, defect_weight(T, xs[i], ys[j], s_prime) *
                              std::abs(defect(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
  return sup;
}

void write_expansion_csv(const std::string& path, const ExpansionTable& t, const Mat& p_h, double h, double s_prime) {
  std::ofstream f(path);
  if (!f) throw InvalidConfig("cannot write " + path);
  f.precision(12);
  f << "x,y,p,pi1,pi2,expansion,p_h,defect,weighted_defect\n";
  for (std::size_t i = 0; i < t.xs.size(); ++i)
    for (std::size_t j = 0; j < t.ys.size(); ++j) {
      const auto r = t.at(static_cast<int>(i), static_cast<int>(j), h);
      const double ph = p_h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const double defect = ph - r.expansion;
      f << r.x << ',' << r.y << ',' << r.p << ',' << r.pi1 << ',' << r.pi2 << ',' << r.expansion << ',' << ph << ','
        << defect << ',' << defect_weight(t.T, r.x, r.y, s_prime) * std::abs(defect) << '\n';
    }
}

std::vector<double> eval_lattice(double x0, double T, int points, double half_width) {
  if (points < 1) throw InvalidConfig("evaluation lattice needs at least one point");
  if (points == 1) return {x0};
  std::vector<double> v(points);
  const double a = half_width * std::sqrt(T);
  for (int k = 0; k < points; ++k) v[k] = x0 - a + 2.0 * a * k / (points - 1);
  return v;
}

}  // namespace medge
