#include "medge/innovations.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "medge/errors.hpp"

namespace medge {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return kInvSqrt2Pi / sd * std::exp(-0.5 * z * z);
}
}  // namespace

Complex StandardInnovation::char_fn(double, const Vec&) const {
  throw InvalidConfig(name() + " has no characteristic function");
}

double StandardInnovation::density1(double t, double eta) const { return density(t, Vec::Constant(1, eta)); }
Complex StandardInnovation::char_fn1(double t, double theta) const { return char_fn(t, Vec::Constant(1, theta)); }
double StandardInnovation::sample1(double t, Rng& rng) const { return sample(t, rng)[0]; }

double GaussianInnovation::density1(double, double eta) const { return kInvSqrt2Pi * std::exp(-0.5 * eta * eta); }
Complex GaussianInnovation::char_fn1(double, double theta) const { return std::exp(-0.5 * theta * theta); }
double GaussianInnovation::sample1(double, Rng& rng) const { return std::normal_distribution<double>()(rng); }

double GaussianInnovation::density(double, const Vec& eta) const {
  if (eta.size() != d_) throw DimensionMismatch("gaussian innovation dimension");
  return std::pow(kInvSqrt2Pi, d_) * std::exp(-0.5 * eta.squaredNorm());
}

CumulantTable GaussianInnovation::cumulants(double) const {
  CumulantTable t;
  for (int n = 2; n <= 4; ++n)
    for (const auto& nu : multi_indices(d_, n)) t[nu] = 0.0;
  for (int i = 0; i < d_; ++i) {
    MultiIndex nu(d_, 0);
    nu[i] = 2;
    t[nu] = 1.0;
  }
  return t;
}

Complex GaussianInnovation::char_fn(double, const Vec& theta) const {
  return std::exp(-0.5 * theta.squaredNorm());
}

Vec GaussianInnovation::sample(double, Rng& rng) const {
  std::normal_distribution<double> n01;
  Vec v(d_);
  for (int i = 0; i < d_; ++i) v[i] = n01(rng);
  return v;
}

ScalarCumulants cumulants_from_moments(double m1, double m2, double m3, double m4) {
  ScalarCumulants c;
  c.mean = m1;
  c.k2 = m2 - m1 * m1;
  c.k3 = m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1;
  c.k4 = m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * std::pow(m1, 4);
  return c;
}

ScalarCumulants mixture_cumulants(const std::vector<double>& w, const std::vector<double>& mu,
                                  const std::vector<double>& sd) {
  double m[5] = {0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = mu[i], s2 = sd[i] * sd[i];
    m[1] += w[i] * a;
    m[2] += w[i] * (a * a + s2);
    m[3] += w[i] * (a * a * a + 3.0 * a * s2);
    m[4] += w[i] * (std::pow(a, 4) + 6.0 * a * a * s2 + 3.0 * s2 * s2);
  }
  return cumulants_from_moments(m[1], m[2], m[3], m[4]);
}

MixtureInnovation::MixtureInnovation(std::vector<double> weights, std::vector<double> means,
                                     std::vector<double> sds, bool standardize, double shift)
    : w_(std::move(weights)), mu_(std::move(means)), sd_(std::move(sds)) {
  if (w_.empty() || w_.size() != mu_.size() || w_.size() != sd_.size())
    throw InvalidConfig("mixture needs equally many weights, means and sds");
  const double total = std::accumulate(w_.begin(), w_.end(), 0.0);
  for (std::size_t i = 0; i < w_.size(); ++i) {
    if (!(w_[i] > 0.0) || !(sd_[i] > 0.0)) throw InvalidConfig("mixture weights and sds must be positive");
    w_[i] /= total;
  }
  if (standardize) {
    const auto c = mixture_cumulants(w_, mu_, sd_);
    const double scale = 1.0 / std::sqrt(c.k2);
    for (std::size_t i = 0; i < w_.size(); ++i) {
      mu_[i] = (mu_[i] - c.mean) * scale;
      sd_[i] *= scale;
    }
  }
  for (auto& m : mu_) m += shift;
}

double MixtureInnovation::density(double, const Vec& eta) const {
  if (eta.size() != 1) throw DimensionMismatch("mixture innovation is one-dimensional");
  double s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * normal_pdf(eta[0], mu_[i], sd_[i]);
  return s;
}

double MixtureInnovation::density1(double, double eta) const {
  double s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * normal_pdf(eta, mu_[i], sd_[i]);
  return s;
}

Complex MixtureInnovation::char_fn1(double, double th) const {
  Complex s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i)
    s += w_[i] * std::exp(Complex(-0.5 * sd_[i] * sd_[i] * th * th, mu_[i] * th));
  return s;
}

double MixtureInnovation::sample1(double, Rng& rng) const {
  std::uniform_real_distribution<double> u01;
  std::normal_distribution<double> n01;
  double u = u01(rng);
  std::size_t k = 0;
  while (k + 1 < w_.size() && u >= w_[k]) u -= w_[k++];
  return mu_[k] + sd_[k] * n01(rng);
}

CumulantTable MixtureInnovation::cumulants(double) const {
  const auto c = mixture_cumulants(w_, mu_, sd_);
  return {{{2}, c.k2}, {{3}, c.k3}, {{4}, c.k4}};
}

Complex MixtureInnovation::char_fn(double, const Vec& theta) const {
  const double th = theta[0];
  Complex s = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i)
    s += w_[i] * std::exp(Complex(-0.5 * sd_[i] * sd_[i] * th * th, mu_[i] * th));
  return s;
}

Vec MixtureInnovation::sample(double, Rng& rng) const {
  std::uniform_real_distribution<double> u01;
  std::normal_distribution<double> n01;
  double u = u01(rng);
  std::size_t k = 0;
  while (k + 1 < w_.size() && u >= w_[k]) u -= w_[k++];
  return Vec::Constant(1, mu_[k] + sd_[k] * n01(rng));
}

double MixtureInnovation::support_radius() const {
  double r = 0.0;
  for (std::size_t i = 0; i < w_.size(); ++i) r = std::max(r, std::abs(mu_[i]) + 12.0 * sd_[i]);
  return r;
}

SkewMixtureInnovation::SkewMixtureInnovation(double weight, double weight_slope, double spread)
    : w0_(weight), slope_(weight_slope), s_(spread) {
  if (!(spread > 0.0 && spread < 1.0)) throw InvalidConfig("skew mixture spread must lie in (0,1)");
  for (double t : {0.0, 1.0}) {
    const double w = weight_at(t);
    if (!(w > 0.0 && w < 1.0)) throw InvalidConfig("skew mixture weight must stay in (0,1) on [0,1]");
  }
}

double SkewMixtureInnovation::weight_at(double t) const { return w0_ + slope_ * t; }

SkewMixtureInnovation::Params SkewMixtureInnovation::params(double t) const {
  const double w = weight_at(t);
  const double a = std::sqrt((1.0 - s_ * s_) / (w * (1.0 - w)));
  return {w, a * (1.0 - w), -a * w};
}

MixtureInnovation SkewMixtureInnovation::at(double t) const {
  const auto p = params(t);
  return MixtureInnovation({p.w, 1.0 - p.w}, {p.hi, p.lo}, {s_, s_}, false);
}

double SkewMixtureInnovation::density1(double t, double eta) const {
  const auto p = params(t);
  return p.w * normal_pdf(eta, p.hi, s_) + (1.0 - p.w) * normal_pdf(eta, p.lo, s_);
}

Complex SkewMixtureInnovation::char_fn1(double t, double th) const {
  const auto p = params(t);
  const double g = std::exp(-0.5 * s_ * s_ * th * th);
  return g * (p.w * std::exp(Complex(0.0, p.hi * th)) + (1.0 - p.w) * std::exp(Complex(0.0, p.lo * th)));
}

double SkewMixtureInnovation::sample1(double t, Rng& rng) const {
  const auto p = params(t);
  std::uniform_real_distribution<double> u01;
  std::normal_distribution<double> n01;
  const double mu = u01(rng) < p.w ? p.hi : p.lo;
  return mu + s_ * n01(rng);
}

double SkewMixtureInnovation::support_radius() const {
  double r = 0.0;
  for (double t : {0.0, 1.0}) {
    const auto p = params(t);
    r = std::max(r, std::max(std::abs(p.hi), std::abs(p.lo)));
  }
  return r + 12.0 * s_;
}

double SkewMixtureInnovation::density(double t, const Vec& eta) const { return at(t).density(t, eta); }
CumulantTable SkewMixtureInnovation::cumulants(double t) const { return at(t).cumulants(t); }
Complex SkewMixtureInnovation::char_fn(double t, const Vec& theta) const { return at(t).char_fn(t, theta); }
Vec SkewMixtureInnovation::sample(double t, Rng& rng) const { return at(t).sample(t, rng); }

}  // namespace medge
