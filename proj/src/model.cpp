#include "medge/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "medge/errors.hpp"
#include "medge/gauss.hpp"
#include "medge/quadrature.hpp"

namespace medge {

namespace {

double fd1(const std::function<double(double)>& f, double x, double e) {
  return (f(x - 2 * e) - 8 * f(x - e) + 8 * f(x + e) - f(x + 2 * e)) / (12 * e);
}

double fd2(const std::function<double(double)>& f, double x, double e) {
  return (-f(x - 2 * e) + 16 * f(x - e) - 30 * f(x) + 16 * f(x + e) - f(x + 2 * e)) / (12 * e * e);
}

Vec scalar_vec(double x) { return Vec::Constant(1, x); }

void require_dim1(const ModelSpec& s) {
  if (s.d != 1) throw UnsupportedDimension("operation requires d = 1, model " + s.name + " has d = " + std::to_string(s.d));
}

}  // namespace

Vec ModelSpec::m_at(double t, const Vec& x) const {
  if (x.size() != d) throw DimensionMismatch("state dimension differs from model dimension");
  Vec v = drift(t, x);
  for (Eigen::Index i = 0; i < v.size(); ++i) require_finite(v[i], "drift");
  return v;
}

Mat ModelSpec::sigma_at(double t, const Vec& x) const {
  if (x.size() != d) throw DimensionMismatch("state dimension differs from model dimension");
  Mat s = covariance(t, x);
  for (Eigen::Index i = 0; i < s.size(); ++i) require_finite(s.data()[i], "covariance");
  return s;
}

Vec ModelSpec::m_t_at(double t, const Vec& x) const {
  if (d == 1) return scalar_vec(m_t(t, x[0]));
  const double e = fd_step * (1.0 + std::abs(t));
  return (m_at(t - 2 * e, x) - 8 * m_at(t - e, x) + 8 * m_at(t + e, x) - m_at(t + 2 * e, x)) / (12 * e);
}

Mat ModelSpec::sigma_t_at(double t, const Vec& x) const {
  if (d == 1) return Mat::Constant(1, 1, sigma_t(t, x[0]));
  const double e = fd_step * (1.0 + std::abs(t));
  return (sigma_at(t - 2 * e, x) - 8 * sigma_at(t - e, x) + 8 * sigma_at(t + e, x) - sigma_at(t + 2 * e, x)) /
         (12 * e);
}

double ModelSpec::m(double t, double x) const {
  if (drift1) return drift1(t, x);
  return m_at(t, scalar_vec(x))[0];
}
double ModelSpec::sigma(double t, double x) const {
  if (cov1) return cov1(t, x);
  return sigma_at(t, scalar_vec(x))(0, 0);
}

double ModelSpec::m_t(double t, double x) const {
  if (derivs.m_t) return derivs.m_t(t, x);
  return fd1([&](double u) { return m(u, x); }, t, fd_step * (1.0 + std::abs(t)));
}
double ModelSpec::m_x(double t, double x) const {
  if (derivs.m_x) return derivs.m_x(t, x);
  return fd1([&](double u) { return m(t, u); }, x, fd_step * (1.0 + std::abs(x)));
}
double ModelSpec::m_xx(double t, double x) const {
  if (derivs.m_xx) return derivs.m_xx(t, x);
  return fd2([&](double u) { return m(t, u); }, x, fd_step * (1.0 + std::abs(x)));
}
double ModelSpec::sigma_t(double t, double x) const {
  if (derivs.s_t) return derivs.s_t(t, x);
  return fd1([&](double u) { return sigma(u, x); }, t, fd_step * (1.0 + std::abs(t)));
}
double ModelSpec::sigma_x(double t, double x) const {
  if (derivs.s_x) return derivs.s_x(t, x);
  return fd1([&](double u) { return sigma(t, u); }, x, fd_step * (1.0 + std::abs(x)));
}
double ModelSpec::sigma_xx(double t, double x) const {
  if (derivs.s_xx) return derivs.s_xx(t, x);
  return fd2([&](double u) { return sigma(t, u); }, x, fd_step * (1.0 + std::abs(x)));
}

double ModelSpec::q(double t, const Vec& x, const Vec& y) const {
  if (d == 1) return q(t, x[0], y[0]);
  const Mat lam = matrix_sqrt_spd(sigma_at(t, x));
  const Vec eta = lam.llt().solve(y);
  return innovation->density(t, eta) / lam.determinant();
}

double ModelSpec::q(double t, double x, double y) const {
  const double sd = std::sqrt(sigma(t, x));
  return innovation->density1(t, y / sd) / sd;
}

Complex ModelSpec::q_char_fn(double t, double x, double theta) const {
  require_dim1(*this);
  return innovation->char_fn1(t, std::sqrt(sigma(t, x)) * theta);
}

Vec ModelSpec::sample_xi(double t, const Vec& x, Rng& rng) const {
  const Vec eta = innovation->sample(t, rng);
  if (d == 1) return std::sqrt(sigma(t, x[0])) * eta;
  return matrix_sqrt_spd(sigma_at(t, x)) * eta;
}

void TimeGrid::validate() const {
  if (!(T > 0.0 && T <= 1.0)) throw InvalidConfig("horizon T must lie in (0, 1]");
  if (n < 1) throw InvalidConfig("step count n must be positive");
  if (kappa && !(*kappa >= 0.0 && *kappa < 0.2)) throw InvalidConfig("small-time exponent must satisfy 0 <= kappa < 1/5");
}

bool ValidationReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const ValidationCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw InvalidConfig("no validation check named " + name);
}

std::vector<ProbePoint> default_probe(const ModelSpec& spec, double T) {
  std::vector<ProbePoint> probe;
  for (double t : {0.0, 0.5 * T, T}) {
    if (spec.d == 1) {
      for (int i = -4; i <= 4; ++i) probe.push_back({t, scalar_vec(i)});
    } else {
      for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j) {
          Vec x = Vec::Zero(spec.d);
          x[0] = 2.0 * i;
          x[1] = 2.0 * j;
          probe.push_back({t, x});
        }
    }
  }
  return probe;
}

namespace {

struct Moments {
  double mass = 0.0;
  Vec mean;
  Mat second;
};

Moments innovation_moments(const ModelSpec& spec, double t, const Vec& x, double radius) {
  Moments mo;
  if (spec.d == 1) {
    const double sd = std::sqrt(spec.sigma(t, x[0]));
    const double r = std::max(radius, spec.innovation->support_radius()) * sd;
    auto mom = [&](int k) {
      return integrate_adaptive([&](double y) { return std::pow(y, k) * spec.q(t, x[0], y); }, -r, r, 1e-14, 16,
                                1 << 14)
          .value;
    };
    mo.mass = mom(0);
    mo.mean = scalar_vec(mom(1));
    mo.second = Mat::Constant(1, 1, mom(2));
    return mo;
  }
  const Mat lam = matrix_sqrt_spd(spec.sigma_at(t, x));
  const double r = radius * std::sqrt(lam.diagonal().maxCoeff() * lam.diagonal().maxCoeff());
  const auto rule = composite_gauss_legendre(-r, r, 16, 16);
  mo.mean = Vec::Zero(spec.d);
  mo.second = Mat::Zero(spec.d, spec.d);
  if (spec.d != 2) throw UnsupportedDimension("moment quadrature supports d <= 2");
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      Vec y(2);
      y << rule.nodes[i], rule.nodes[j];
      const double w = rule.weights[i] * rule.weights[j] * spec.q(t, x, y);
      mo.mass += w;
      mo.mean += w * y;
      mo.second += w * y * y.transpose();
    }
  return mo;
}

}  // namespace

ValidationReport validate_model(const ModelSpec& spec, const std::vector<ProbePoint>& probe,
                                const ValidationTolerances& tol) {
  if (probe.empty()) throw InvalidConfig("validation probe is empty");
  if (!spec.innovation) throw InvalidConfig("model has no innovation family");
  ValidationReport rep;
  double mean_defect = 0.0, norm_defect = 0.0, cov_defect = 0.0, neg_density = 0.0;
  double eig_min = std::numeric_limits<double>::infinity(), eig_max = 0.0;
  double dt_max = 0.0, dx_max = 0.0;
  for (const auto& p : probe) {
    const Mat s = spec.sigma_at(p.t, p.x);
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + s.cwiseAbs().maxCoeff()))
      throw CovarianceNotPD("covariance is not symmetric at t=" + std::to_string(p.t));
    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (!(lo > 0.0))
      throw CovarianceNotPD("covariance eigenvalue " + std::to_string(lo) + " <= 0 at t=" + std::to_string(p.t));
    eig_min = std::min(eig_min, lo);
    eig_max = std::max(eig_max, hi);
    spec.m_at(p.t, p.x);

    const Moments mo = innovation_moments(spec, p.t, p.x, tol.quad_radius);
    require_finite(mo.mass, "innovation density");
    norm_defect = std::max(norm_defect, std::abs(mo.mass - 1.0));
    mean_defect = std::max(mean_defect, mo.mean.cwiseAbs().maxCoeff());
    const Mat cov = mo.second - mo.mean * mo.mean.transpose();
    cov_defect = std::max(cov_defect, (cov - s).cwiseAbs().maxCoeff());
    if (spec.d == 1) {
      const double sd = std::sqrt(s(0, 0));
      for (int k = -40; k <= 40; ++k) neg_density = std::min(neg_density, spec.q(p.t, p.x[0], 0.25 * k * sd));
      const double gt = std::max(std::abs(spec.m_t(p.t, p.x[0])), std::abs(spec.sigma_t(p.t, p.x[0])));
      const double gx = std::max({std::abs(spec.m_x(p.t, p.x[0])), std::abs(spec.m_xx(p.t, p.x[0])),
                                  std::abs(spec.sigma_x(p.t, p.x[0])), std::abs(spec.sigma_xx(p.t, p.x[0]))});
      require_finite(gt, "time derivative");
      require_finite(gx, "space derivative");
      dt_max = std::max(dt_max, gt);
      dx_max = std::max(dx_max, gx);
    } else {
      const double gt = std::max(spec.m_t_at(p.t, p.x).cwiseAbs().maxCoeff(),
                                 spec.sigma_t_at(p.t, p.x).cwiseAbs().maxCoeff());
      require_finite(gt, "time derivative");
      dt_max = std::max(dt_max, gt);
    }
  }
  rep.sigma_min = eig_min;
  rep.sigma_max = eig_max;

  auto fmt = [](double v) {
    std::ostringstream o;
    o.precision(6);
    o << v;
    return o.str();
  };
  rep.checks.push_back({"A1_mean", mean_defect <= tol.tol_mean, mean_defect, "max |E xi| = " + fmt(mean_defect)});
  rep.checks.push_back(
      {"A1_normalization", norm_defect <= tol.tol_norm, norm_defect, "max |int q - 1| = " + fmt(norm_defect)});
  rep.checks.push_back(
      {"A1_covariance", cov_defect <= tol.tol_norm, cov_defect, "max |Cov xi - sigma| = " + fmt(cov_defect)});
  rep.checks.push_back({"A1_nonnegative", neg_density >= 0.0, neg_density, "min q on probe = " + fmt(neg_density)});
  bool a2 = eig_min > 0.0;
  if (spec.sigma_lower > 0.0) a2 = a2 && eig_min >= spec.sigma_lower * (1 - 1e-12);
  if (spec.sigma_upper > 0.0) a2 = a2 && eig_max <= spec.sigma_upper * (1 + 1e-12);
  rep.checks.push_back({"A2_ellipticity", a2, eig_min,
                        "eigenvalues in [" + fmt(eig_min) + ", " + fmt(eig_max) + "]"});
  rep.checks.push_back({"B1_smoothness", true, std::max(dt_max, dx_max),
                        "max |time derivative| = " + fmt(dt_max) + ", max |space derivative| = " + fmt(dx_max)});
  return rep;
}

CumulantTable cumulant_table(const ModelSpec& spec, double t, const Vec& x) {
  const CumulantTable eta = spec.innovation->cumulants(t);
  if (!eta.empty()) {
    const Mat lam = spec.d == 1 ? Mat::Constant(1, 1, std::sqrt(spec.sigma(t, x[0])))
                                : matrix_sqrt_spd(spec.sigma_at(t, x));
    return transform_cumulants_linear(eta, lam);
  }
  if (spec.d != 1) throw UnsupportedDimension("quadrature cumulants need d = 1");
  const auto c = cumulants_by_quadrature(spec, t, x[0]);
  return {{{2}, c.k2}, {{3}, c.k3}, {{4}, c.k4}};
}

double cumulant(const ModelSpec& spec, const MultiIndex& nu, double t, const Vec& x) {
  const int n = order(nu);
  if (n < 2 || n > 4) throw UnsupportedOrder("cumulant order " + std::to_string(n) + " not in {2,3,4}");
  if (static_cast<int>(nu.size()) != spec.d) throw DimensionMismatch("multi-index dimension");
  if (n == 2) {
    const auto c = to_coordinates(nu);
    return spec.sigma_at(t, x)(c[0], c[1]);
  }
  if (spec.d == 1) {
    // fast path: chi_n = sigma^{n/2} kappa_n(eta)
    const CumulantTable eta = spec.innovation->cumulants(t);
    if (!eta.empty()) return std::pow(spec.sigma(t, x[0]), 0.5 * n) * eta.at(nu);
  }
  return cumulant_table(spec, t, x).at(nu);
}

double cumulant(const ModelSpec& spec, const MultiIndex& nu, double t, double x) {
  return cumulant(spec, nu, t, scalar_vec(x));
}

ScalarCumulants cumulants_by_quadrature(const ModelSpec& spec, double t, double x, double tol) {
  require_dim1(spec);
  const double sd = std::sqrt(spec.sigma(t, x));
  const double r = std::max(12.0, spec.innovation->support_radius()) * sd;
  double m[5];
  for (int k = 0; k <= 4; ++k)
    m[k] = integrate_adaptive([&](double y) { return std::pow(y, k) * spec.q(t, x, y); }, -r, r, tol, 16, 1 << 14)
               .value;
  return cumulants_from_moments(m[1] / m[0], m[2] / m[0], m[3] / m[0], m[4] / m[0]);
}

CumulantTable transform_cumulants_linear(const CumulantTable& chi, const Mat& A) {
  if (chi.empty()) return {};
  const int d = static_cast<int>(chi.begin()->first.size());
  if (A.rows() != d || A.cols() != d) throw DimensionMismatch("transform matrix must be d x d");
  std::vector<int> orders;
  for (const auto& [nu, v] : chi) {
    if (static_cast<int>(nu.size()) != d) throw DimensionMismatch("mixed multi-index dimensions");
    const int n = order(nu);
    if (std::find(orders.begin(), orders.end(), n) == orders.end()) orders.push_back(n);
  }
  CumulantTable out;
  for (int n : orders) {
    for (const auto& nu : multi_indices(d, n))
      if (!chi.count(nu)) throw DimensionMismatch("cumulant table incomplete at order " + std::to_string(n));
    for (const auto& nu : multi_indices(d, n)) {
      const auto a = to_coordinates(nu);
      // sum over all index tuples (i_1..i_n) of prod A(a_k, i_k) chi_{i}
      std::vector<int> idx(n, 0);
      double s = 0.0;
      while (true) {
        double w = 1.0;
        for (int k = 0; k < n; ++k) w *= A(a[k], idx[k]);
        if (w != 0.0) s += w * chi.at(from_coordinates(d, idx));
        int k = n - 1;
        while (k >= 0 && ++idx[k] == d) idx[k--] = 0;
        if (k < 0) break;
      }
      out[nu] = s;
    }
  }
  return out;
}

GridKernel innovation_convolution(const ModelSpec& spec, int j, double t, double h, double x_frozen,
                                  const SpaceGrid& grid, double tol_tail) {
  require_dim1(spec);
  if (j < 1) throw InvalidConfig("fold count must be positive");
  std::vector<double> times(j);
  for (int i = 0; i < j; ++i) times[i] = t + i * h;
  CharFn phi;
  if (spec.innovation->has_char_fn()) {
    phi = [&](double th) {
      Complex v = 1.0;
      for (double u : times) v *= spec.q_char_fn(u, x_frozen, th);
      return v;
    };
  } else {
    std::vector<Vec> samples;
    for (double u : times) {
      Vec f(grid.size);
      for (int k = 0; k < grid.size; ++k) f[k] = spec.q(u, x_frozen, grid.at(k));
      samples.push_back(std::move(f));
    }
    phi = [&, samples](double th) {
      Complex v = 1.0;
      for (const auto& f : samples) v *= char_fn_from_samples(grid, f, th);
      return v;
    };
  }
  GridKernel out;
  out.grid = grid;
  out.values = density_from_char_fn(phi, grid, 0.0);
  out.s = t;
  out.t = t + j * h;
  out.x = x_frozen;
  out.provenance = "innovation_convolution";
  const double mass = out.integral();
  if (std::abs(1.0 - mass) > tol_tail)
    throw TailMassExceeded("innovation convolution loses mass " + std::to_string(1.0 - mass));
  out.values /= mass;
  return out;
}

}  // namespace medge
