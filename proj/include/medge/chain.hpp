#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medge/kernels.hpp"
#include "medge/parametrix.hpp"

namespace medge {

struct ChainOptions {
  double tol_tail = 1e-10;
  // Band half-width in innovation standard units; 0 uses the innovation's
  // support radius.
  double radius = 0.0;
};

// Density of one chain step, p_h(i, i+1, z, y) = h^{-1/2} q(ih, z, (y - z - m h)/sqrt(h)).
double chain_step_density(const ModelSpec& spec, const TimeGrid& tg, int i, double z, double y);

// Banded one-step transition of the chain on `grid` (rows normalized).
BandKernel chain_step_kernel(const ModelSpec& spec, const TimeGrid& tg, int i, const SpaceGrid& grid,
                             const ChainOptions& opt = {});

// p_h(j, k, x, .) on `grid` by banded Chapman–Kolmogorov. The first step is
// the closed-form one-step density; each later step is renormalized and the
// mass pushed off the grid is accumulated (TailMassExceeded above tol_tail).
DensityEstimate chain_density_ck(const ModelSpec& spec, const TimeGrid& tg, int j, int k, double x,
                                 const SpaceGrid& grid, const ChainOptions& opt = {});

// Discrete parametrix kernel
// H_h(j,k,x,y) = h^{-1} [ int p_h(j,j+1,x,w) p~_h^y(j+1,k,w,y) dw - p~_h(j,k,x,y) ].
double kernel_H_h(const ModelSpec& spec, const TimeGrid& tg, int j, int k, double x, double y,
                  const ChainOptions& opt = {});

// Discrete parametrix series p_h(0, n, x, .) = sum_r p~_h (x)_h H_h^(r) on
// `grid` (x must be a node). Terms up to r_max (negative: n) are formed; the
// sum stops at the first term below tol_term. Throws SeriesNotConverged when
// the last formed term is still above tol_term and fewer than n were allowed.
DensityEstimate chain_parametrix_series(const ModelSpec& spec, const TimeGrid& tg, double x, const SpaceGrid& grid,
                                        int r_max = -1, double tol_term = 1e-12);

// Simulated chain paths. states is (paths x (n+1)*d), step-major.
struct PathBatch {
  TimeGrid tgrid;
  int d = 1;
  std::uint64_t seed = 0;
  Mat states;

  double state(int path, int step, int coord = 0) const { return states(path, step * d + coord); }
  // Columns: path,step,time,x0[,x1...]
  void write_csv(const std::string& path) const;
};

// Each path draws from its own generator seeded by (seed, path index), so the
// result does not depend on the thread count.
PathBatch simulate_paths(const ModelSpec& spec, const TimeGrid& tg, const Vec& x0, int n_paths,
                         std::uint64_t seed);
// Terminal states only (d = 1), for large batches.
Vec simulate_terminal(const ModelSpec& spec, const TimeGrid& tg, double x0, int n_paths, std::uint64_t seed);

// Gaussian kernel density estimate with standard errors.
struct KdeEstimate {
  std::vector<double> ys, values, std_errors;
  double bandwidth = 0.0;
};
double silverman_bandwidth(const Vec& samples);
KdeEstimate gaussian_kde(const Vec& samples, const std::vector<double>& ys, double bandwidth);
// (p * phi_b)(y) for a gridded density p.
double smoothed_density(const DensityEstimate& p, double bandwidth, double y);

// Two-term Edgeworth density of the normalized sum for x-independent models,
// built from time-averaged cumulants and Hermite polynomials.
struct ClassicalEdgeworth {
  double ptilde = 0.0, pi1 = 0.0, pi2 = 0.0;
  double value(double h) const { return ptilde + std::sqrt(h) * pi1 + h * pi2; }
};
ClassicalEdgeworth iid_edgeworth_oracle(const ModelSpec& spec, double s, double t, double x, double y);

}  // namespace medge
