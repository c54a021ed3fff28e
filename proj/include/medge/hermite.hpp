#pragma once

#include "medge/multi_index.hpp"

namespace medge {

// Probabilists' Hermite polynomials He_0..He_kmax at w.
void hermite_he(double w, int kmax, double* out);

// out[k] = d^k/dx^k of the N(0, var) density evaluated at u = y - x - mean,
// for k = 0..kmax (derivative in the source variable x).
void gaussian_x_derivatives(double u, double var, int kmax, double* out);

// Ratio D_x^nu g / g for the Gaussian g = exp(-u'Pu/2) with u = y - x - mean,
// P the precision matrix; computed by the recursion
// d/dx_i [Q e] = (-dQ/du_i + Q (Pu)_i) e.
double gaussian_x_derivative_ratio(const Vec& u, const Mat& prec, const MultiIndex& nu);

}  // namespace medge
