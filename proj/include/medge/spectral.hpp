#pragma once

#include <complex>
#include <functional>

#include "medge/grid.hpp"

namespace medge {

using Complex = std::complex<double>;
using CharFn = std::function<Complex(double theta)>;

// Samples the density of shift + S on the grid nodes, where S has
// characteristic function phi. The inverse transform runs on a zero-padded
// lattice of at least `pad` times the grid length (power of two).
Vec density_from_char_fn(const CharFn& phi, const SpaceGrid& grid, double shift, int pad = 2);

// Characteristic function of the law with samples f (density values on
// `grid`), evaluated at theta by direct trapezoid summation.
Complex char_fn_from_samples(const SpaceGrid& grid, const Vec& f, double theta);

// Discrete linear convolution sum_k a_k b_{j-k} via zero-padded real FFT.
// Result length a.size() + b.size() - 1.
Vec fft_convolve(const Vec& a, const Vec& b);

}  // namespace medge
