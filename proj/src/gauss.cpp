#include "medge/gauss.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "medge/errors.hpp"
#include "medge/hermite.hpp"

namespace medge {

QuadratureRule TimeQuadrature::rule(double s, double t) const {
  const int panels = std::max(1, static_cast<int>(std::ceil(nodes_per_unit * (t - s) / 8.0 - 1e-12)));
  return composite_gauss_legendre(s, t, 8, panels);
}

FrozenGaussianParams make_frozen_params(const Vec& mean_shift, const Mat& cov, const Vec& freeze_point, double s,
                                        double t) {
  FrozenGaussianParams p;
  p.mean_shift = mean_shift;
  p.cov = cov;
  p.freeze_point = freeze_point;
  p.s = s;
  p.t = t;
  const int d = static_cast<int>(cov.rows());
  if (d == 1) {
    if (!(cov(0, 0) > 0.0) || !std::isfinite(cov(0, 0)))
      throw NonSPDIntegratedCov("integrated covariance " + std::to_string(cov(0, 0)) + " is not positive");
    p.prec = Mat::Constant(1, 1, 1.0 / cov(0, 0));
    p.log_norm = -0.5 * std::log(2.0 * std::numbers::pi * cov(0, 0));
    return p;
  }
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) throw NonSPDIntegratedCov("integrated covariance lost positive definiteness");
  p.prec = llt.solve(Mat::Identity(d, d));
  const double logdet = 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  p.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + logdet);
  return p;
}

FrozenGaussianParams frozen_params(const ModelSpec& spec, double s, double t, const Vec& y,
                                   const TimeQuadrature& quad) {
  if (!(t > s)) throw InvalidConfig("frozen parameters need t > s");
  if (y.size() != spec.d) throw DimensionMismatch("freeze point dimension");
  Vec mean = Vec::Zero(spec.d);
  Mat cov = Mat::Zero(spec.d, spec.d);
  if (spec.time_homogeneous) {
    mean = (t - s) * spec.m_at(s, y);
    cov = (t - s) * spec.sigma_at(s, y);
  } else {
    const auto r = quad.rule(s, t);
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      mean += r.weights[i] * spec.m_at(r.nodes[i], y);
      cov += r.weights[i] * spec.sigma_at(r.nodes[i], y);
    }
  }
  return make_frozen_params(mean, cov, y, s, t);
}

FrozenGaussianParams frozen_params(const ModelSpec& spec, double s, double t, double y, const TimeQuadrature& quad) {
  return frozen_params(spec, s, t, Vec::Constant(1, y), quad);
}

double ptilde_at(const FrozenGaussianParams& p, const Vec& x, const Vec& z) {
  const Vec u = z - x - p.mean_shift;
  return std::exp(p.log_norm - 0.5 * u.dot(p.prec * u));
}

double ptilde(const FrozenGaussianParams& p, const Vec& x) { return ptilde_at(p, x, p.freeze_point); }

double ptilde(const FrozenGaussianParams& p, double x) {
  const double u = p.freeze_point[0] - x - p.mean_shift[0];
  return std::exp(p.log_norm - 0.5 * u * u * p.prec(0, 0));
}

double ptilde_deriv(const FrozenGaussianParams& p, const Vec& x, const MultiIndex& nu) {
  if (order(nu) > 6) throw UnsupportedOrder("p~ derivatives are available up to order 6");
  if (p.dim() == 1) return ptilde_deriv(p, x[0], nu[0]);
  const Vec u = p.freeze_point - x - p.mean_shift;
  return gaussian_x_derivative_ratio(u, p.prec, nu) * ptilde(p, x);
}

double ptilde_deriv(const FrozenGaussianParams& p, double x, int k) {
  if (k > 6 || k < 0) throw UnsupportedOrder("p~ derivatives are available up to order 6");
  double out[7];
  ptilde_derivs(p, x, k, out);
  return out[k];
}

void ptilde_derivs(const FrozenGaussianParams& p, double x, int kmax, double* out) {
  gaussian_x_derivatives(p.freeze_point[0] - x - p.mean_shift[0], p.cov(0, 0), kmax, out);
}

DiscreteFrozenMoments discrete_frozen_moments(const ModelSpec& spec, int j, int k, const Vec& y,
                                              const TimeGrid& grid) {
  if (j > k) throw IndexOrder("discrete frozen moments need j <= k");
  if (j < 0 || k > grid.n) throw IndexOrder("step indices outside [0, n]");
  DiscreteFrozenMoments out;
  out.j = j;
  out.k = k;
  out.mu = Vec::Zero(spec.d);
  out.V = Mat::Zero(spec.d, spec.d);
  const double h = grid.h();
  for (int i = j; i < k; ++i) {
    out.mu += h * spec.m_at(i * h, y);
    out.V += h * spec.sigma_at(i * h, y);
  }
  return out;
}

DiscreteFrozenMoments discrete_frozen_moments(const ModelSpec& spec, int j, int k, double y, const TimeGrid& grid) {
  return discrete_frozen_moments(spec, j, k, Vec::Constant(1, y), grid);
}

CharFn frozen_sum_char_fn(const ModelSpec& spec, int j, int k, double y, const TimeGrid& tgrid) {
  const double h = tgrid.h(), rh = std::sqrt(h);
  if (spec.time_homogeneous) {
    const int count = k - j;
    return [&spec, y, j, h, rh, count](double th) {
      return std::pow(spec.q_char_fn(j * h, y, rh * th), count);
    };
  }
  return [&spec, y, j, k, h, rh](double th) {
    Complex v = 1.0;
    for (int i = j; i < k; ++i) v *= spec.q_char_fn(i * h, y, rh * th);
    return v;
  };
}

GridKernel ptilde_h(const ModelSpec& spec, int j, int k, double x, double y_frozen, const SpaceGrid& grid,
                    const TimeGrid& tgrid, double tol_tail) {
  if (spec.d != 1) throw UnsupportedDimension("p~_h is implemented for d = 1");
  if (!(k > j)) throw IndexOrder("p~_h needs k > j");
  const auto mom = discrete_frozen_moments(spec, j, k, y_frozen, tgrid);
  GridKernel out;
  out.grid = grid;
  out.s = j * tgrid.h();
  out.t = k * tgrid.h();
  out.x = x;
  out.provenance = "ptilde_h";
  if (k == j + 1) {
    // single step: change of variables in q
    const double h = tgrid.h(), rh = std::sqrt(h);
    out.values.resize(grid.size);
    for (int i = 0; i < grid.size; ++i) out.values[i] = spec.q(j * h, y_frozen, (grid.at(i) - x - mom.mu[0]) / rh) / rh;
  } else {
    if (!spec.innovation->has_char_fn()) {
      // characteristic functions of the sampled step densities
      const double h = tgrid.h(), rh = std::sqrt(h);
      const double sd = std::sqrt(spec.sigma_upper > 0 ? spec.sigma_upper : spec.sigma(j * h, y_frozen));
      const double radius = spec.innovation->support_radius() * sd * rh;
      const SpaceGrid sg = SpaceGrid::covering(-radius, radius, grid.dx);
      std::vector<Vec> steps;
      for (int i = j; i < k; ++i) {
        Vec f(sg.size);
        for (int c = 0; c < sg.size; ++c) f[c] = spec.q(i * h, y_frozen, sg.at(c) / rh) / rh;
        steps.push_back(std::move(f));
      }
      const CharFn phi = [&](double th) {
        Complex v = 1.0;
        for (const auto& f : steps) v *= char_fn_from_samples(sg, f, th);
        return v;
      };
      out.values = density_from_char_fn(phi, grid, x + mom.mu[0]);
    } else {
      out.values = density_from_char_fn(frozen_sum_char_fn(spec, j, k, y_frozen, tgrid), grid, x + mom.mu[0]);
    }
  }
  const double mass = out.integral();
  if (std::abs(1.0 - mass) > tol_tail)
    throw TailMassExceeded("p~_h slice loses mass " + std::to_string(1.0 - mass));
  out.values /= mass;
  return out;
}

Mat matrix_sqrt_spd(const Mat& lambda) {
  if (lambda.rows() != lambda.cols()) throw NotSPD("matrix is not square");
  if ((lambda - lambda.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + lambda.cwiseAbs().maxCoeff()))
    throw NotSPD("matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(lambda);
  if (es.info() != Eigen::Success || !(es.eigenvalues().minCoeff() > 0.0))
    throw NotSPD("matrix has a non-positive eigenvalue");
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace medge
