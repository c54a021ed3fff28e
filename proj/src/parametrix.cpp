#include "medge/parametrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "medge/errors.hpp"

namespace medge {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gauss(double u, double var) { return kInvSqrt2Pi / std::sqrt(var) * std::exp(-0.5 * u * u / var); }

struct Frozen1 {
  double mean, var;
};

// Integrated drift and covariance over [a, b] frozen at y (d = 1).
Frozen1 frozen1(const ModelSpec& spec, double a, double b, double y, const TimeQuadrature& quad) {
  if (spec.time_homogeneous) return {(b - a) * spec.m(a, y), (b - a) * spec.sigma(a, y)};
  const auto r = quad.rule(a, b);
  Frozen1 f{0.0, 0.0};
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    f.mean += r.weights[i] * spec.m(r.nodes[i], y);
    f.var += r.weights[i] * spec.sigma(r.nodes[i], y);
  }
  return f;
}

// (L - Ltilde) p~^y(u, v, z, y) given the frozen moments over [u, v] and the
// coefficients sigma(u, y), m(u, y).
double h_kernel(const ModelSpec& spec, double u, double z, double y, const Frozen1& fr, double sy, double my) {
  const double sd = std::sqrt(fr.var);
  const double w = (y - z - fr.mean) / sd;
  const double p = kInvSqrt2Pi / sd * std::exp(-0.5 * w * w);
  return (0.5 * (spec.sigma(u, z) - sy) * (w * w - 1.0) / fr.var + (spec.m(u, z) - my) * w / sd) * p;
}

// Nodes u and weights for int_a^b du split at the midpoint, with
// u = a + (mid-a) w^2 on the left and u = b - (b-mid) w^2 on the right.
void split_time_rule(double a, double b, int nq, std::vector<double>& u, std::vector<double>& wt) {
  const auto& gl = gauss_legendre(nq);
  const double mid = 0.5 * (a + b);
  u.clear();
  wt.clear();
  for (int i = 0; i < nq; ++i) {
    const double w = 0.5 * (gl.nodes[i] + 1.0), gw = 0.5 * gl.weights[i];
    u.push_back(a + (mid - a) * w * w);
    wt.push_back(gw * 2.0 * (mid - a) * w);
    u.push_back(b - (b - mid) * w * w);
    wt.push_back(gw * 2.0 * (b - mid) * w);
  }
}

double convolve_pass(const PointKernel& f, const PointKernel& g, double s, double t, double x, double y,
                     const SeriesConfig& cfg, int nq, double per_sd) {
  std::vector<double> us, ws;
  split_time_rule(s, t, nq, us, ws);
  double total = 0.0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    const double u = us[i], a = u - s, b = t - u;
    if (!(a > 0.0 && b > 0.0)) continue;
    const double ra = cfg.window_sd * cfg.sd_upper * std::sqrt(a) + cfg.drift_bound * a;
    const double rb = cfg.window_sd * cfg.sd_upper * std::sqrt(b) + cfg.drift_bound * b;
    const double lo = std::max(x - ra, y - rb), hi = std::min(x + ra, y + rb);
    if (!(hi > lo)) continue;
    const double step = cfg.sd_lower * std::sqrt(std::min(a, b)) / per_sd;
    const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)));
    const double dz = (hi - lo) / n;
    double acc = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double z = lo + k * dz;
      const double v = f.value(s, u, x, z) * g.value(u, t, z, y);
      acc += (k == 0 || k == n) ? 0.5 * v : v;
    }
    total += ws[i] * acc * dz;
  }
  return total;
}

// Cubic Lagrange weights on a uniform lattice 0..n-1 at fractional index q;
// returns the first index of the 4-point stencil.
int cubic_stencil(double q, int n, double w[4]) {
  int i0 = static_cast<int>(std::floor(q)) - 1;
  i0 = std::clamp(i0, 0, std::max(0, n - 4));
  const double r = q - i0;
  w[0] = -(r - 1) * (r - 2) * (r - 3) / 6.0;
  w[1] = r * (r - 2) * (r - 3) / 2.0;
  w[2] = -r * (r - 1) * (r - 3) / 2.0;
  w[3] = r * (r - 1) * (r - 2) / 6.0;
  return i0;
}

struct SeriesPass {
  Vec values;
  double last_term = 0.0;
  int terms = 0;
  bool converged = false;
  std::vector<double> term_sups;
};

SeriesPass series_pass(const ModelSpec& spec, double s, double t, double x, const std::vector<double>& ys,
                       const SeriesConfig& cfg) {
  const double T = t - s;
  const int na = cfg.table_times;
  const double Z = cfg.window_sd * cfg.sd_upper + cfg.drift_bound * std::sqrt(T) + 1.0;
  const int nz = static_cast<int>(std::ceil(2.0 * Z / cfg.table_step)) + 1;
  const double zeta0 = -Z, dzeta = cfg.table_step;
  const double mx = spec.m(s, x);
  auto centre = [&](double u) { return x + mx * (u - s); };

  SeriesPass out;
  out.values = Vec::Zero(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const auto fr = frozen1(spec, s, t, ys[k], cfg.quad);
    out.values[static_cast<Eigen::Index>(k)] = gauss(ys[k] - x - fr.mean, fr.var);
  }

  Mat prev = Mat::Zero(na + 1, nz);  // S_{r-1}(theta_a, zeta_b); row 0 is theta = 0
  for (int r = 1; r <= cfg.r_max; ++r) {
    Mat cur = Mat::Zero(na + 1, nz);
    for (int a = 1; a <= na; ++a) {
      const double theta = static_cast<double>(a) / na;
      const double v = s + T * theta * theta;
      std::vector<double> us, ws;
      split_time_rule(s, v, cfg.time_nodes, us, ws);
      // T_{r-1}(u, .) on the zeta lattice for every time node.
      std::vector<Vec> rows(us.size());
      if (r > 1) {
        for (std::size_t i = 0; i < us.size(); ++i) {
          const double q = std::sqrt((us[i] - s) / T) * na;
          double w[4];
          const int i0 = cubic_stencil(q, na + 1, w);
          rows[i] = w[0] * prev.row(i0) + w[1] * prev.row(i0 + 1) + w[2] * prev.row(i0 + 2) + w[3] * prev.row(i0 + 3);
          rows[i] /= std::sqrt(us[i] - s);
        }
      }
#pragma omp parallel for schedule(dynamic, 8)
      for (int b = 0; b < nz; ++b) {
        const double zp = centre(v) + (zeta0 + b * dzeta) * std::sqrt(v - s);
        double total = 0.0;
        for (std::size_t i = 0; i < us.size(); ++i) {
          const double u = us[i], da = u - s, db = v - u;
          if (!(da > 0.0 && db > 0.0)) continue;
          const double ra = Z * std::sqrt(da);
          const double rb = cfg.window_sd * cfg.sd_upper * std::sqrt(db) + cfg.drift_bound * db;
          const double lo = std::max(centre(u) - ra, zp - rb), hi = std::min(centre(u) + ra, zp + rb);
          if (!(hi > lo)) continue;
          const double step = cfg.sd_lower * std::sqrt(std::min(da, db)) / cfg.space_per_sd;
          const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)));
          const double dz = (hi - lo) / n;
          const auto fr = frozen1(spec, u, v, zp, cfg.quad);
          const double sy = spec.sigma(u, zp), my = spec.m(u, zp);
          double acc = 0.0;
          for (int k = 0; k <= n; ++k) {
            const double z = lo + k * dz;
            double left;
            if (r == 1) {
              const auto f0 = frozen1(spec, s, u, z, cfg.quad);
              left = gauss(z - x - f0.mean, f0.var);
            } else {
              const double q = ((z - centre(u)) / std::sqrt(da) - zeta0) / dzeta;
              if (q < 0.0 || q > nz - 1) continue;
              double w[4];
              const int i0 = cubic_stencil(q, nz, w);
              const Vec& row = rows[i];
              left = w[0] * row[i0] + w[1] * row[i0 + 1] + w[2] * row[i0 + 2] + w[3] * row[i0 + 3];
            }
            const double val = left * h_kernel(spec, u, z, zp, fr, sy, my);
            acc += (k == 0 || k == n) ? 0.5 * val : val;
          }
          total += ws[i] * acc * dz;
        }
        cur(a, b) = total * std::sqrt(v - s);
      }
    }
    // Add T_r(t, y) from the theta = 1 row.
    double sup = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k) {
      const double q = ((ys[k] - centre(t)) / std::sqrt(T) - zeta0) / dzeta;
      if (q < 0.0 || q > nz - 1) continue;
      double w[4];
      const int i0 = cubic_stencil(q, nz, w);
      const double term =
          (w[0] * cur(na, i0) + w[1] * cur(na, i0 + 1) + w[2] * cur(na, i0 + 2) + w[3] * cur(na, i0 + 3)) /
          std::sqrt(T);
      out.values[static_cast<Eigen::Index>(k)] += term;
    }
    sup = cur.row(na).cwiseAbs().maxCoeff() / std::sqrt(T);
    out.last_term = sup;
    out.term_sups.push_back(sup);
    out.terms = r;
    prev.swap(cur);
    if (sup < cfg.tol_term) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace

SeriesConfig series_config_for(const ModelSpec& spec) {
  SeriesConfig c;
  c.sd_upper = std::sqrt(spec.sigma_upper);
  c.sd_lower = std::sqrt(spec.sigma_lower);
  c.drift_bound = spec.drift_bound;
  return c;
}

double DensityEstimate::at(double y) const {
  if (!points.empty()) {
    for (std::size_t i = 0; i < points.size(); ++i)
      if (std::abs(y - points[i]) <= 1e-12 * (1.0 + std::abs(y))) return values[static_cast<Eigen::Index>(i)];
    throw InvalidConfig("estimate holds no sample at the requested point");
  }
  if (grid.size == 1) {
    if (std::abs(y - grid.lo) > 1e-12 * (1.0 + std::abs(y))) throw InvalidConfig("estimate holds a single point");
    return values[0];
  }
  return interpolate_cubic(grid, values.data(), y);
}

void DensityEstimate::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidConfig("cannot write " + path);
  f.precision(12);
  f << "coordinate,value,method,error_estimate\n";
  const int n = static_cast<int>(values.size());
  for (int i = 0; i < n; ++i)
    f << (points.empty() ? grid.at(i) : points[i]) << ',' << values[i] << ',' << method << ',' << error_estimate << '\n';
}

double convolve(const PointKernel& f, const PointKernel& g, double s, double t, double x, double y,
                const SeriesConfig& cfg, double* error) {
  if (f.dim() != 1 || g.dim() != 1) throw UnsupportedDimension("convolve is implemented for d = 1");
  if (!(t > s)) throw InvalidConfig("convolve needs t > s");
  const double coarse = convolve_pass(f, g, s, t, x, y, cfg, cfg.time_nodes, cfg.space_per_sd);
  const double fine = convolve_pass(f, g, s, t, x, y, cfg, 2 * cfg.time_nodes, 2.0 * cfg.space_per_sd);
  const double delta = std::abs(fine - coarse);
  if (error) *error = delta;
  if (delta > 10.0 * cfg.tol_term)
    throw QuadratureBudgetExceeded("convolution refinement changed the value by " + std::to_string(delta));
  return fine;
}

DensityEstimate diffusion_density_series(const ModelSpec& spec, double s, double t, double x,
                                         const std::vector<double>& ys, const SeriesConfig& cfg) {
  if (spec.d != 1) throw UnsupportedDimension("the parametrix series is implemented for d = 1");
  if (!(t > s)) throw InvalidConfig("series needs t > s");
  if (ys.empty()) throw InvalidConfig("no target points");
  const auto fine = series_pass(spec, s, t, x, ys, cfg);
  if (!fine.converged)
    throw SeriesNotConverged("term " + std::to_string(fine.terms) + " still has size " +
                             std::to_string(fine.last_term));
  SeriesConfig cc = cfg;
  cc.time_nodes = std::max(4, 3 * cfg.time_nodes / 4);
  cc.table_times = std::max(4, 3 * cfg.table_times / 4);
  cc.r_max = fine.terms;
  cc.tol_term = 0.0;
  const auto coarse = series_pass(spec, s, t, x, ys, cc);

  DensityEstimate est;
  est.values = fine.values;
  est.method = "parametrix_series";
  est.terms = fine.terms;
  est.term_sups = fine.term_sups;
  est.error_estimate = fine.last_term + (fine.values - coarse.values).cwiseAbs().maxCoeff();
  est.resolution = "r=" + std::to_string(fine.terms) + ",time_nodes=" + std::to_string(cfg.time_nodes) +
                   ",table_times=" + std::to_string(cfg.table_times);
  est.s = s;
  est.t = t;
  est.x = x;
  if (ys.size() == 1) {
    est.grid = SpaceGrid{ys[0], 1.0, 1};
  } else {
    est.grid = SpaceGrid::from_bounds(ys.front(), ys.back(), static_cast<int>(ys.size()));
    for (std::size_t i = 0; i < ys.size(); ++i)
      if (std::abs(est.grid.at(static_cast<int>(i)) - ys[i]) > 1e-12 * (1.0 + std::abs(ys[i]))) {
        est.points = ys;
        break;
      }
  }
  return est;
}

DensityEstimate diffusion_density_series(const ModelSpec& spec, double s, double t, double x, double y,
                                         const SeriesConfig& cfg) {
  return diffusion_density_series(spec, s, t, x, std::vector<double>{y}, cfg);
}

namespace {

// Reweights sampled Gaussian values by a quartic in d = (y - mean)/sd so the
// discrete row reproduces the Gaussian moments of orders 0..4. Pointwise
// sampling alone biases them once sd approaches the grid step, and that bias
// accumulates over thousands of steps.
void match_moments(const double* ys, int n, double mean, double var, double* w) {
  const double sd = std::sqrt(var);
  double G[9] = {};
  for (int c = 0; c < n; ++c) {
    const double d = (ys[c] - mean) / sd;
    double p = w[c];
    for (int k = 0; k < 9; ++k, p *= d) G[k] += p;
  }
  Eigen::Matrix<double, 5, 5> A;
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) A(r, c) = G[r + c];
  Eigen::Matrix<double, 5, 1> rhs;
  rhs << G[0], 0.0, G[0], 0.0, 3.0 * G[0];
  const Eigen::Matrix<double, 5, 1> g = A.fullPivLu().solve(rhs);
  if (!g.allFinite()) return;
  for (int c = 0; c < n; ++c) {
    const double d = (ys[c] - mean) / sd;
    w[c] *= g[0] + d * (g[1] + d * (g[2] + d * (g[3] + d * g[4])));
  }
}

}  // namespace

BandKernel euler_step_kernel(const ModelSpec& spec, double u, double tau, const SpaceGrid& grid, double radius_sd) {
  const double reach = radius_sd * std::sqrt(spec.sigma_upper * tau) + spec.drift_bound * tau;
  const int half = static_cast<int>(std::ceil(reach / grid.dx));
  return build_band_kernel_rows(
      grid, half,
      [&](int, double z, const double* ys, int n, double* out) {
        const double mean = z + spec.m(u, z) * tau, var = spec.sigma(u, z) * tau;
        for (int c = 0; c < n; ++c) out[c] = gauss(ys[c] - mean, var);
        match_moments(ys, n, mean, var, out);
      },
      true);
}

namespace {

Vec euler_ck(const ModelSpec& spec, double s, double t, double x, const SpaceGrid& grid, int n) {
  const double tau = (t - s) / n;
  Vec p(grid.size), next(grid.size);
  const double mean = x + spec.m(s, x) * tau, var = spec.sigma(s, x) * tau;
  for (int j = 0; j < grid.size; ++j) p[j] = gauss(grid.at(j) - mean, var);
  p /= p.sum() * grid.dx;
  double leaked = 0.0;
  BandKernel k;
  for (int step = 1; step < n; ++step) {
    if (step == 1 || !spec.time_homogeneous) k = euler_step_kernel(spec, s + step * tau, tau, grid);
    leaked += truncated_mass(k, p.data(), grid.dx);
    propagate(k, p.data(), next.data());
    p.swap(next);
    p /= p.sum() * grid.dx;
  }
  if (leaked > 1e-10) throw TailMassExceeded("reference grid lost mass " + std::to_string(leaked));
  return p;
}

}  // namespace

DensityEstimate ck_reference(const ModelSpec& spec, double s, double t, double x, const SpaceGrid& grid,
                             int n_internal) {
  if (spec.d != 1) throw UnsupportedDimension("the reference density is implemented for d = 1");
  if (n_internal < 1) throw InvalidConfig("n_internal must be positive");
  const Vec coarse = euler_ck(spec, s, t, x, grid, n_internal);
  const Vec fine = euler_ck(spec, s, t, x, grid, 2 * n_internal);
  DensityEstimate est;
  est.grid = grid;
  est.values = 2.0 * fine - coarse;
  est.error_estimate = (fine - coarse).cwiseAbs().maxCoeff();
  est.method = "euler_ck_richardson";
  est.resolution = "n=" + std::to_string(n_internal) + "/" + std::to_string(2 * n_internal) +
                   ",dx=" + std::to_string(grid.dx);
  est.s = s;
  est.t = t;
  est.x = x;
  return est;
}

SpaceGrid density_grid(const ModelSpec& spec, double a, double b, double horizon, double dx, double n_sd) {
  const double margin = n_sd * std::sqrt(spec.sigma_upper * horizon) + spec.drift_bound * horizon + 4.0 * dx;
  return SpaceGrid::covering(a - margin, b + margin, dx, a);
}

}  // namespace medge
