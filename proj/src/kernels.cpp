#include "medge/kernels.hpp"

#include <omp.h>

#include <algorithm>

#include "medge/errors.hpp"

namespace medge {

namespace {

void finish_row(BandKernel& k, int i, bool normalize) {
  double* row = &k.w[static_cast<std::size_t>(i) * k.width()];
  double lost = 0.0;
  for (int c = 0; c < k.width(); ++c) {
    const int j = i + c - k.half;
    if (j < 0 || j >= k.size) {
      lost += row[c];
      row[c] = 0.0;
    }
  }
  k.truncated[i] = lost;
  if (!normalize) return;
  double s = 0.0;
  for (int c = 0; c < k.width(); ++c) s += row[c];
  if (s > 0.0)
    for (int c = 0; c < k.width(); ++c) row[c] /= s;
}

// out[j*width + (h + i - j)] = W(i, j)
void fill_transpose(const BandKernel& k, std::vector<double>& out) {
  const int n = k.size, h = k.half, wd = k.width();
  out.assign(static_cast<std::size_t>(n) * wd, 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j)
    for (int c = 0; c < wd; ++c) {
      const int i = j + c - h;
      if (i >= 0 && i < n) out[static_cast<std::size_t>(j) * wd + c] = k.w[static_cast<std::size_t>(i) * wd + (j - i + h)];
    }
}

const std::vector<double>& transposed(const BandKernel& k, std::vector<double>& scratch) {
  if (!k.wt.empty()) return k.wt;
  fill_transpose(k, scratch);
  return scratch;
}

}  // namespace

BandKernel build_band_kernel_rows(
    const SpaceGrid& grid, int half,
    const std::function<void(int, double, const double*, int, double*)>& row_fn, bool normalize) {
  if (half < 0) throw InvalidConfig("negative band half-width");
  BandKernel k;
  k.size = grid.size;
  k.half = half;
  k.w.assign(static_cast<std::size_t>(k.size) * k.width(), 0.0);
  k.truncated.assign(k.size, 0.0);
#pragma omp parallel
  {
    std::vector<double> ys(k.width()), vals(k.width());
#pragma omp for schedule(static)
    for (int i = 0; i < k.size; ++i) {
      const double z = grid.at(i);
      for (int c = 0; c < k.width(); ++c) ys[c] = grid.at(i + c - half);
      row_fn(i, z, ys.data(), k.width(), vals.data());
      double* row = &k.w[static_cast<std::size_t>(i) * k.width()];
      for (int c = 0; c < k.width(); ++c) row[c] = grid.dx * vals[c];
      finish_row(k, i, normalize);
    }
  }
  fill_transpose(k, k.wt);
  return k;
}

BandKernel build_band_kernel(const SpaceGrid& grid, int half,
                             const std::function<double(double, double)>& density, bool normalize) {
  return build_band_kernel_rows(
      grid, half,
      [&](int, double z, const double* ys, int n, double* out) {
        for (int c = 0; c < n; ++c) out[c] = density(z, ys[c]);
      },
      normalize);
}

double truncated_mass(const BandKernel& k, const double* in, double dx) {
  double s = 0.0;
  for (int i = 0; i < k.size; ++i) s += in[i] * k.truncated[i];
  return dx * s;
}

void propagate(const BandKernel& k, const double* in, double* out) {
  const int n = k.size, h = k.half, wd = k.width();
  std::vector<double> scratch;
  const double* wt = transposed(k, scratch).data();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const int i_lo = std::max(0, j - h), i_hi = std::min(n - 1, j + h);
    const double* wj = wt + static_cast<std::size_t>(j) * wd + (i_lo - j + h);
    const double* src = in + i_lo;
    const int len = i_hi - i_lo + 1;
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (int q = 0; q < len; ++q) s += src[q] * wj[q];
    out[j] = s;
  }
}

void propagate_serial(const BandKernel& k, const double* in, double* out) {
  const int n = k.size, h = k.half;
  std::fill(out, out + n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double v = in[i];
    if (v == 0.0) continue;
    const int j_lo = std::max(0, i - h), j_hi = std::min(n - 1, i + h);
    for (int j = j_lo; j <= j_hi; ++j) out[j] += v * k.at(i, j - i);
  }
}

void propagate_block(const BandKernel& k, const Mat& in, Mat& out) {
  const int n = k.size, h = k.half, wd = k.width();
  if (in.rows() != n) throw InvalidConfig("block height differs from kernel size");
  out.resize(in.rows(), in.cols());
  std::vector<double> scratch;
  const std::vector<double>& wt = transposed(k, scratch);
  const Eigen::Index cols = in.cols();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const int i_lo = std::max(0, j - h), i_hi = std::min(n - 1, j + h);
    const double* wj = &wt[static_cast<std::size_t>(j) * wd + (i_lo - j + h)];
    const int len = i_hi - i_lo + 1;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double* src = in.col(c).data() + i_lo;
      double s = 0.0;
#pragma omp simd reduction(+ : s)
      for (int q = 0; q < len; ++q) s += src[q] * wj[q];
      out(j, c) = s;
    }
  }
}

Mat band_to_dense(const BandKernel& k) {
  Mat d = Mat::Zero(k.size, k.size);
  for (int i = 0; i < k.size; ++i)
    for (int c = -k.half; c <= k.half; ++c)
      if (i + c >= 0 && i + c < k.size) d(i, i + c) = k.at(i, c);
  return d;
}

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace medge
