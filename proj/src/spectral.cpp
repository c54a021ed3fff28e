#include "medge/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

#include "medge/errors.hpp"

namespace medge {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct FftBuffers {
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  explicit FftBuffers(int n) {
    real = fftw_alloc_real(n);
    spec = fftw_alloc_complex(n / 2 + 1);
  }
  ~FftBuffers() {
    fftw_free(real);
    fftw_free(spec);
  }
  FftBuffers(const FftBuffers&) = delete;
  FftBuffers& operator=(const FftBuffers&) = delete;
};

fftw_plan make_c2r(int n, fftw_complex* in, double* out) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  return fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
}

fftw_plan make_r2c(int n, double* in, fftw_complex* out) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  return fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
}

void destroy(fftw_plan p) {
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(p);
}

}  // namespace

Vec density_from_char_fn(const CharFn& phi, const SpaceGrid& grid, double shift, int pad) {
  const int n = next_pow2(std::max(pad, 1) * grid.size);
  const double dtheta = 2.0 * std::numbers::pi / (n * grid.dx);
  const double v0 = grid.lo - shift;
  FftBuffers buf(n);
  for (int k = 0; k <= n / 2; ++k) {
    const double th = k * dtheta;
    Complex a = phi(th) * std::exp(Complex(0.0, -th * v0));
    if (k == n / 2) a = Complex(a.real(), 0.0);
    buf.spec[k][0] = a.real();
    buf.spec[k][1] = -a.imag();
  }
  fftw_plan p = make_c2r(n, buf.spec, buf.real);
  fftw_execute(p);
  destroy(p);
  Vec out(grid.size);
  const double scale = dtheta / (2.0 * std::numbers::pi);
  for (int j = 0; j < grid.size; ++j) out[j] = scale * buf.real[j];
  return out;
}

Complex char_fn_from_samples(const SpaceGrid& grid, const Vec& f, double theta) {
  Complex s = 0.0;
  for (int j = 0; j < grid.size; ++j) {
    const double w = (j == 0 || j == grid.size - 1) ? 0.5 : 1.0;
    s += w * f[j] * std::exp(Complex(0.0, theta * grid.at(j)));
  }
  return s * grid.dx;
}

Vec fft_convolve(const Vec& a, const Vec& b) {
  if (a.size() == 0 || b.size() == 0) throw InvalidConfig("empty convolution operand");
  const int out_len = static_cast<int>(a.size() + b.size() - 1);
  const int n = next_pow2(out_len);
  FftBuffers fa(n), fb(n);
  std::fill(fa.real, fa.real + n, 0.0);
  std::fill(fb.real, fb.real + n, 0.0);
  std::copy(a.data(), a.data() + a.size(), fa.real);
  std::copy(b.data(), b.data() + b.size(), fb.real);
  fftw_plan pa = make_r2c(n, fa.real, fa.spec);
  fftw_plan pb = make_r2c(n, fb.real, fb.spec);
  fftw_execute(pa);
  fftw_execute(pb);
  for (int k = 0; k <= n / 2; ++k) {
    const Complex x(fa.spec[k][0], fa.spec[k][1]), y(fb.spec[k][0], fb.spec[k][1]);
    const Complex z = x * y;
    fa.spec[k][0] = z.real();
    fa.spec[k][1] = z.imag();
  }
  fftw_plan inv = make_c2r(n, fa.spec, fa.real);
  fftw_execute(inv);
  destroy(pa);
  destroy(pb);
  destroy(inv);
  Vec out(out_len);
  for (int j = 0; j < out_len; ++j) out[j] = fa.real[j] / n;
  return out;
}

}  // namespace medge
