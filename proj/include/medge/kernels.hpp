#pragma once

#include <functional>
#include <vector>

#include "medge/grid.hpp"

namespace medge {

// Banded transition operator on a uniform grid. Row i holds the weights
// W(i, i+k) = dx * K(z_i, z_{i+k}) for |k| <= half, so one step of
// Chapman–Kolmogorov reads out_j = sum_i in_i W(i, j).
struct BandKernel {
  int size = 0;
  int half = 0;
  std::vector<double> w;  // size * (2*half+1), row-major by source index
  // Target-major copy filled by the builders: wt[j*width + (h + i - j)] = W(i, j).
  std::vector<double> wt;
  // Per row: weight that fell on targets outside the grid, before any
  // normalization.
  std::vector<double> truncated;

  int width() const { return 2 * half + 1; }
  double& at(int i, int k) { return w[static_cast<std::size_t>(i) * width() + (k + half)]; }
  double at(int i, int k) const { return w[static_cast<std::size_t>(i) * width() + (k + half)]; }
};

// Fills a band from a density K(z, y). With `normalize`, every row is scaled
// to unit mass (truncation leakage is pushed back into the grid).
BandKernel build_band_kernel(const SpaceGrid& grid, int half,
                             const std::function<double(double z, double y)>& density, bool normalize);

// Same, with the density evaluated per row: row(i, z, ys, out) fills out[k]
// with K(z, ys[k]) for the 2*half+1 targets ys (targets outside the grid are
// still passed and ignored afterwards).
BandKernel build_band_kernel_rows(
    const SpaceGrid& grid, int half,
    const std::function<void(int i, double z, const double* ys, int n, double* out)>& row, bool normalize);

// Mass that the band pushed off the grid for the density `in`
// (dx * sum_i in_i truncated_i).
double truncated_mass(const BandKernel& k, const double* in, double dx);

// out = in^T W. OpenMP gather over targets (contiguous through wt).
void propagate(const BandKernel& k, const double* in, double* out);
// Serial scatter over sources; the reference implementation for tests.
void propagate_serial(const BandKernel& k, const double* in, double* out);

// Applies propagate to every column of a (size x c) column-major block.
void propagate_block(const BandKernel& k, const Mat& in, Mat& out);

// Dense (size x size) equivalent of the band, for tests.
Mat band_to_dense(const BandKernel& k);

// Sets the number of OpenMP threads used by the kernels (<= 0 keeps default).
void set_thread_count(int n);

}  // namespace medge
