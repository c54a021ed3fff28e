#include "medge/hermite.hpp"

#include <cmath>

#include "medge/errors.hpp"

namespace medge {

void hermite_he(double w, int kmax, double* out) {
  out[0] = 1.0;
  if (kmax >= 1) out[1] = w;
  for (int k = 1; k < kmax; ++k) out[k + 1] = w * out[k] - k * out[k - 1];
}

void gaussian_x_derivatives(double u, double var, int kmax, double* out) {
  const double sd = std::sqrt(var);
  const double w = u / sd;
  const double g = 0.39894228040143267794 / sd * std::exp(-0.5 * w * w);
  hermite_he(w, kmax, out);
  double scale = g;
  for (int k = 0; k <= kmax; ++k) {
    out[k] *= scale;
    scale /= sd;
  }
}

namespace {

using Poly = std::map<MultiIndex, double>;

Poly differentiate(const Poly& q, const Vec& pu_coeffs_row, int i, int d) {
  // returns -dQ/du_i + Q * (P u)_i, with (P u)_i = sum_j P_ij u_j
  Poly out;
  for (const auto& [mono, c] : q) {
    if (mono[i] > 0) {
      MultiIndex m = mono;
      const double f = m[i];
      --m[i];
      out[m] -= c * f;
    }
    for (int j = 0; j < d; ++j) {
      const double pij = pu_coeffs_row[j];
      if (pij == 0.0) continue;
      MultiIndex m = mono;
      ++m[j];
      out[m] += c * pij;
    }
  }
  return out;
}

}  // namespace

double gaussian_x_derivative_ratio(const Vec& u, const Mat& prec, const MultiIndex& nu) {
  const int d = static_cast<int>(u.size());
  if (static_cast<int>(nu.size()) != d || prec.rows() != d) throw DimensionMismatch("derivative multi-index");
  Poly q{{MultiIndex(d, 0), 1.0}};
  for (int i : to_coordinates(nu)) q = differentiate(q, prec.row(i).transpose(), i, d);
  double s = 0.0;
  for (const auto& [mono, c] : q) {
    double v = c;
    for (int j = 0; j < d; ++j) v *= std::pow(u[j], mono[j]);
    s += v;
  }
  return s;
}

}  // namespace medge
