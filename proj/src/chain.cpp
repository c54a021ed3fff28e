#include "medge/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "medge/errors.hpp"
#include "medge/hermite.hpp"

namespace medge {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double band_radius(const ModelSpec& spec, const ChainOptions& opt) {
  return opt.radius > 0.0 ? opt.radius : spec.innovation->support_radius();
}

void require_d1(const ModelSpec& spec, const char* what) {
  if (spec.d != 1) throw UnsupportedDimension(std::string(what) + " is implemented for d = 1");
}

}  // namespace

double chain_step_density(const ModelSpec& spec, const TimeGrid& tg, int i, double z, double y) {
  const double h = tg.h(), rh = std::sqrt(h), t = i * h;
  return spec.q(t, z, (y - z - spec.m(t, z) * h) / rh) / rh;
}

BandKernel chain_step_kernel(const ModelSpec& spec, const TimeGrid& tg, int i, const SpaceGrid& grid,
                             const ChainOptions& opt) {
  require_d1(spec, "the chain kernel");
  const double h = tg.h(), rh = std::sqrt(h), t = i * h;
  const double reach = band_radius(spec, opt) * std::sqrt(spec.sigma_upper * h) + spec.drift_bound * h;
  const int half = static_cast<int>(std::ceil(reach / grid.dx));
  return build_band_kernel_rows(
      grid, half,
      [&](int, double z, const double* ys, int n, double* out) {
        const double mean = z + spec.m(t, z) * h;
        const double sd = std::sqrt(spec.sigma(t, z)) * rh;
        for (int c = 0; c < n; ++c) out[c] = spec.innovation->density1(t, (ys[c] - mean) / sd) / sd;
      },
      true);
}

DensityEstimate chain_density_ck(const ModelSpec& spec, const TimeGrid& tg, int j, int k, double x,
                                 const SpaceGrid& grid, const ChainOptions& opt) {
  require_d1(spec, "chain_density_ck");
  if (!(k > j) || j < 0 || k > tg.n) throw IndexOrder("chain density needs 0 <= j < k <= n");
  Vec p(grid.size), next(grid.size);
  for (int c = 0; c < grid.size; ++c) p[c] = chain_step_density(spec, tg, j, x, grid.at(c));
  const double first_mass = p.sum() * grid.dx;
  if (std::abs(1.0 - first_mass) > 1e-6) throw TailMassExceeded("first chain step is not resolved by the grid");
  p /= first_mass;
  double leaked = 0.0;
  BandKernel kern;
  for (int i = j + 1; i < k; ++i) {
    if (i == j + 1 || !spec.time_homogeneous) kern = chain_step_kernel(spec, tg, i, grid, opt);
    leaked += truncated_mass(kern, p.data(), grid.dx);
    propagate(kern, p.data(), next.data());
    p.swap(next);
    p /= p.sum() * grid.dx;
  }
  if (leaked > opt.tol_tail) throw TailMassExceeded("chain density lost mass " + std::to_string(leaked));
  DensityEstimate est;
  est.grid = grid;
  est.values = p;
  est.method = "chain_ck";
  est.error_estimate = leaked;
  est.resolution = "dx=" + std::to_string(grid.dx);
  est.s = tg.time(j);
  est.t = tg.time(k);
  est.x = x;
  return est;
}

namespace {

// Offsets v = y - w at which the frozen chain over steps [a, k) has mass,
// sampled with spacing dx; index 0 is at -half*dx.
SpaceGrid offset_grid(const ModelSpec& spec, const TimeGrid& tg, int steps, double dx, double radius) {
  const double h = tg.h();
  const double reach = radius * std::sqrt(spec.sigma_upper * steps * h) + spec.drift_bound * steps * h + 4.0 * dx;
  const int half = static_cast<int>(std::ceil(reach / dx));
  return SpaceGrid{-half * dx, dx, 2 * half + 1};
}

}  // namespace

double kernel_H_h(const ModelSpec& spec, const TimeGrid& tg, int j, int k, double x, double y,
                  const ChainOptions& opt) {
  require_d1(spec, "kernel_H_h");
  if (!(k > j)) throw IndexOrder("H_h needs k > j");
  if (spec.x_independent) return 0.0;  // the true and frozen steps coincide
  const double h = tg.h(), rh = std::sqrt(h);
  const double t = j * h;
  if (k == j + 1) {
    const double frozen = spec.q(t, y, (y - x - spec.m(t, y) * h) / rh) / rh;
    return (chain_step_density(spec, tg, j, x, y) - frozen) / h;
  }
  const double radius = band_radius(spec, opt);
  const double sd_rest = std::sqrt(spec.sigma_lower * (k - j - 1) * h);
  const double sd_step = std::sqrt(spec.sigma_lower * h);
  const double dv = std::min(sd_rest, sd_step) / 16.0;
  const SpaceGrid og = offset_grid(spec, tg, k - j, dv, radius);
  // slice(v) = density at v of mu_{a,k}(y) + sqrt(h) sum xi^y, i.e. p~_h^y(a, k, y - v, y)
  const GridKernel rest = ptilde_h(spec, j + 1, k, 0.0, y, og, tg, 1e-8);
  const GridKernel whole = ptilde_h(spec, j, k, 0.0, y, og, tg, 1e-8);
  const double centre = x + spec.m(t, x) * h;
  const double reach = radius * std::sqrt(spec.sigma_upper * h);
  const int n = static_cast<int>(std::ceil(2.0 * reach / dv));
  const double dw = 2.0 * reach / n;
  double acc = 0.0;
  for (int c = 0; c <= n; ++c) {
    const double w = centre - reach + c * dw;
    const double v = chain_step_density(spec, tg, j, x, w) * rest.interpolate(y - w);
    acc += (c == 0 || c == n) ? 0.5 * v : v;
  }
  return (acc * dw - whole.interpolate(y - x)) / h;
}

DensityEstimate chain_parametrix_series(const ModelSpec& spec, const TimeGrid& tg, double x, const SpaceGrid& grid,
                                        int r_max, double tol_term) {
  require_d1(spec, "chain_parametrix_series");
  const int n = tg.n, M = grid.size;
  const double h = tg.h(), dx = grid.dx;
  const int R = r_max < 0 ? n : std::min(r_max, n);
  const int ix = grid.node_index(x);
  const double radius = spec.innovation->support_radius();

  std::vector<BandKernel> P(n);
  for (int i = 0; i < n; ++i)
    P[i] = (i == 0 || !spec.time_homogeneous) ? chain_step_kernel(spec, tg, i, grid) : P[0];

  // G(a, k)(w, y) = p~_h^y(a, k, w, y), tabulated per target y over the lag y - w.
  struct Frozen {
    SpaceGrid og;
    Mat cols;  // (offsets x M)
  };
  std::map<std::pair<int, int>, Frozen> cache;
  auto frozen = [&](int a, int k) -> const Frozen& {
    const auto key = spec.time_homogeneous ? std::make_pair(0, k - a) : std::make_pair(a, k);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    Frozen f;
    f.og = offset_grid(spec, tg, k - a, dx, radius);
    f.cols.resize(f.og.size, M);
    for (int l = 0; l < M; ++l) {
      const GridKernel g = ptilde_h(spec, a, k, 0.0, grid.at(l), f.og, tg, 1e-8);
      f.cols.col(l) = g.values;
    }
    return cache.emplace(key, std::move(f)).first->second;
  };
  auto G = [&](const Frozen& f, int w, int y) {
    const int o = (y - w) + (f.og.size - 1) / 2;
    return (o < 0 || o >= f.og.size) ? 0.0 : f.cols(o, y);
  };

  // terms[r][k] = T_r(0, k, x, .) on the grid; T_0(0) is the point mass at x.
  std::vector<std::vector<Vec>> terms(R + 1, std::vector<Vec>(n + 1, Vec::Zero(M)));
  terms[0][0][ix] = 1.0 / dx;
  for (int k = 1; k <= n; ++k) {
    const Frozen& g0 = frozen(0, k);
    for (int l = 0; l < M; ++l) terms[0][k][l] = G(g0, ix, l);
  }

  Mat H(M, M);
  for (int k = 1; k <= n; ++k) {
    for (int i = 0; i < k; ++i) {
      // H(i, k)(z, y) = h^{-1} [ sum_w P_i(z, w) G(i+1, k)(w, y) - G(i, k)(z, y) ]
      const BandKernel& Pi = P[i];
      if (k == i + 1) {
        const Frozen& gi = frozen(i, k);
        for (int z = 0; z < M; ++z)
          for (int y = 0; y < M; ++y) {
            const int c = y - z;
            const double pz = (std::abs(c) <= Pi.half) ? Pi.at(z, c) / dx : 0.0;
            H(z, y) = (pz - G(gi, z, y)) / h;
          }
      } else {
        const Frozen& gn = frozen(i + 1, k);
        const Frozen& gi = frozen(i, k);
#pragma omp parallel for schedule(static)
        for (int y = 0; y < M; ++y) {
          for (int z = 0; z < M; ++z) {
            double s = 0.0;
            const int w_lo = std::max(0, z - Pi.half), w_hi = std::min(M - 1, z + Pi.half);
            for (int w = w_lo; w <= w_hi; ++w) s += Pi.at(z, w - z) * G(gn, w, y);
            H(z, y) = (s - G(gi, z, y)) / h;
          }
        }
      }
      for (int r = 1; r <= R; ++r) {
        const Vec& src = terms[r - 1][i];
        if (src.cwiseAbs().maxCoeff() == 0.0) continue;
        terms[r][k].noalias() += h * dx * (H.transpose() * src);
      }
    }
  }

  DensityEstimate est;
  est.grid = grid;
  est.values = Vec::Zero(M);
  est.method = "chain_parametrix_series";
  est.s = 0.0;
  est.t = tg.T;
  est.x = x;
  double last = 0.0;
  int used = 0;
  for (int r = 0; r <= R; ++r) {
    est.values += terms[r][n];
    last = terms[r][n].cwiseAbs().maxCoeff();
    used = r;
    if (r > 0 && last < tol_term) break;
  }
  if (last >= tol_term && R < n)
    throw SeriesNotConverged("term " + std::to_string(used) + " still has size " + std::to_string(last));
  est.terms = used;
  est.error_estimate = used == n ? 0.0 : last;
  est.resolution = "dx=" + std::to_string(dx) + ",terms=" + std::to_string(used);
  return est;
}

void PathBatch::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidConfig("cannot write " + path);
  f.precision(12);
  f << "path,step,time";
  for (int c = 0; c < d; ++c) f << ",x" << c;
  f << '\n';
  for (Eigen::Index p = 0; p < states.rows(); ++p)
    for (int k = 0; k <= tgrid.n; ++k) {
      f << p << ',' << k << ',' << tgrid.time(k);
      for (int c = 0; c < d; ++c) f << ',' << state(static_cast<int>(p), k, c);
      f << '\n';
    }
}

namespace {

Rng path_rng(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return Rng(seq);
}

}  // namespace

PathBatch simulate_paths(const ModelSpec& spec, const TimeGrid& tg, const Vec& x0, int n_paths,
                         std::uint64_t seed) {
  if (x0.size() != spec.d) throw DimensionMismatch("start point dimension");
  if (n_paths < 1) throw InvalidConfig("need at least one path");
  PathBatch b;
  b.tgrid = tg;
  b.d = spec.d;
  b.seed = seed;
  b.states.resize(n_paths, (tg.n + 1) * spec.d);
  const double h = tg.h(), rh = std::sqrt(h);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n_paths; ++p) {
    Rng rng = path_rng(seed, static_cast<std::uint64_t>(p));
    Vec x = x0;
    for (int c = 0; c < spec.d; ++c) b.states(p, c) = x[c];
    for (int k = 0; k < tg.n; ++k) {
      const double t = k * h;
      x += spec.m_at(t, x) * h + rh * spec.sample_xi(t, x, rng);
      for (int c = 0; c < spec.d; ++c) b.states(p, (k + 1) * spec.d + c) = x[c];
    }
  }
  return b;
}

Vec simulate_terminal(const ModelSpec& spec, const TimeGrid& tg, double x0, int n_paths, std::uint64_t seed) {
  require_d1(spec, "simulate_terminal");
  if (n_paths < 1) throw InvalidConfig("need at least one path");
  Vec out(n_paths);
  const double h = tg.h(), rh = std::sqrt(h);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n_paths; ++p) {
    Rng rng = path_rng(seed, static_cast<std::uint64_t>(p));
    double x = x0;
    for (int k = 0; k < tg.n; ++k) {
      const double t = k * h;
      x += spec.m(t, x) * h + rh * std::sqrt(spec.sigma(t, x)) * spec.innovation->sample1(t, rng);
    }
    out[p] = x;
  }
  return out;
}

double silverman_bandwidth(const Vec& samples) {
  const Eigen::Index n = samples.size();
  if (n < 2) throw InvalidConfig("bandwidth needs at least two samples");
  const double mean = samples.mean();
  const double sd = std::sqrt((samples.array() - mean).square().sum() / (n - 1));
  std::vector<double> v(samples.data(), samples.data() + n);
  auto quant = [&](double q) {
    const auto k = static_cast<std::size_t>(q * (n - 1));
    std::nth_element(v.begin(), v.begin() + k, v.end());
    return v[k];
  };
  const double iqr = quant(0.75) - quant(0.25);
  return 0.9 * std::min(sd, iqr / 1.34) * std::pow(static_cast<double>(n), -0.2);
}

KdeEstimate gaussian_kde(const Vec& samples, const std::vector<double>& ys, double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidConfig("bandwidth must be positive");
  KdeEstimate k;
  k.ys = ys;
  k.bandwidth = bandwidth;
  k.values.assign(ys.size(), 0.0);
  k.std_errors.assign(ys.size(), 0.0);
  const double N = static_cast<double>(samples.size());
  for (std::size_t j = 0; j < ys.size(); ++j) {
    double s1 = 0.0, s2 = 0.0;
#pragma omp parallel for reduction(+ : s1, s2) schedule(static)
    for (Eigen::Index i = 0; i < samples.size(); ++i) {
      const double u = (ys[j] - samples[i]) / bandwidth;
      const double v = kInvSqrt2Pi / bandwidth * std::exp(-0.5 * u * u);
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / N;
    k.values[j] = mean;
    k.std_errors[j] = std::sqrt(std::max(0.0, s2 / N - mean * mean) / N);
  }
  return k;
}

double smoothed_density(const DensityEstimate& p, double bandwidth, double y) {
  double acc = 0.0;
  for (int i = 0; i < p.grid.size; ++i) {
    const double u = (y - p.grid.at(i)) / bandwidth;
    acc += p.values[i] * kInvSqrt2Pi / bandwidth * std::exp(-0.5 * u * u);
  }
  return acc * p.grid.dx;
}

ClassicalEdgeworth iid_edgeworth_oracle(const ModelSpec& spec, double s, double t, double x, double y) {
  require_d1(spec, "the classical Edgeworth oracle");
  if (!spec.x_independent) throw ModelNotXIndependent("model " + spec.name + " has state-dependent coefficients");
  if (!(t > s)) throw InvalidConfig("oracle needs t > s");
  // Time integrals of the drift, variance and cumulants of the increment law,
  // the cumulants taken from moments of the innovation density.
  const auto rule = composite_gauss_legendre(s, t, 20, 2);
  double M = 0.0, V = 0.0, K3 = 0.0, K4 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = rule.nodes[i], w = rule.weights[i];
    const auto c = cumulants_by_quadrature(spec, u, x);
    M += w * spec.m(u, x);
    V += w * c.k2;
    K3 += w * c.k3;
    K4 += w * c.k4;
  }
  const double S = std::sqrt(V);
  const double z = (y - x - M) / S;
  double he[7];
  hermite_he(z, 6, he);
  const double phi = kInvSqrt2Pi / S * std::exp(-0.5 * z * z);
  ClassicalEdgeworth e;
  e.ptilde = phi;
  e.pi1 = phi * K3 / (6.0 * std::pow(S, 3)) * he[3];
  e.pi2 = phi * (K4 / (24.0 * std::pow(S, 4)) * he[4] + K3 * K3 / (72.0 * std::pow(S, 6)) * he[6]);
  return e;
}

}  // namespace medge
