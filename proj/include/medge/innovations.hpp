#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "medge/multi_index.hpp"
#include "medge/spectral.hpp"

namespace medge {

using Rng = std::mt19937_64;

// Law of the standardized innovation eta (mean 0, identity covariance for the
// shipped families). The chain increment is xi = sigma(t,x)^{1/2} eta, so the
// shape may depend on t but never on the state.
class StandardInnovation {
 public:
  virtual ~StandardInnovation() = default;

  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual bool time_homogeneous() const = 0;

  virtual double density(double t, const Vec& eta) const = 0;
  // Cumulants of orders 2..4 in closed form, or an empty table.
  virtual CumulantTable cumulants(double t) const = 0;

  virtual bool has_char_fn() const { return false; }
  virtual Complex char_fn(double t, const Vec& theta) const;

  virtual Vec sample(double t, Rng& rng) const = 0;

  // Scalar (d = 1) forms without temporaries; the defaults forward to the
  // vector versions.
  virtual double density1(double t, double eta) const;
  virtual Complex char_fn1(double t, double theta) const;
  virtual double sample1(double t, Rng& rng) const;

  // Half-width (in eta units) outside which the density is negligible.
  virtual double support_radius() const { return 12.0; }
};

class GaussianInnovation final : public StandardInnovation {
 public:
  explicit GaussianInnovation(int d = 1) : d_(d) {}
  int dim() const override { return d_; }
  std::string name() const override { return "gaussian"; }
  bool time_homogeneous() const override { return true; }
  double density(double t, const Vec& eta) const override;
  CumulantTable cumulants(double t) const override;
  bool has_char_fn() const override { return true; }
  Complex char_fn(double t, const Vec& theta) const override;
  Vec sample(double t, Rng& rng) const override;
  double density1(double t, double eta) const override;
  Complex char_fn1(double t, double theta) const override;
  double sample1(double t, Rng& rng) const override;

 private:
  int d_;
};

// One-dimensional finite Gaussian mixture. With `standardize`, the component
// means and scales are shifted and scaled so the mixture has mean 0 and
// variance 1; `shift` is added afterwards.
class MixtureInnovation final : public StandardInnovation {
 public:
  MixtureInnovation(std::vector<double> weights, std::vector<double> means, std::vector<double> sds,
                    bool standardize = true, double shift = 0.0);
  int dim() const override { return 1; }
  std::string name() const override { return "mixture"; }
  bool time_homogeneous() const override { return true; }
  double density(double t, const Vec& eta) const override;
  CumulantTable cumulants(double t) const override;
  bool has_char_fn() const override { return true; }
  Complex char_fn(double t, const Vec& theta) const override;
  Vec sample(double t, Rng& rng) const override;
  double density1(double t, double eta) const override;
  Complex char_fn1(double t, double theta) const override;
  double sample1(double t, Rng& rng) const override;
  double support_radius() const override;

  const std::vector<double>& weights() const { return w_; }
  const std::vector<double>& means() const { return mu_; }
  const std::vector<double>& sds() const { return sd_; }

 private:
  std::vector<double> w_, mu_, sd_;
};

// Standardized two-component mixture with weight w(t) = w0 + slope*t on the
// component at a(1-w), the other at -a w, common spread s and
// a = sqrt((1-s^2)/(w(1-w))). Skewness a^3 w(1-w)(1-2w).
class SkewMixtureInnovation final : public StandardInnovation {
 public:
  SkewMixtureInnovation(double weight, double weight_slope, double spread);
  int dim() const override { return 1; }
  std::string name() const override { return "skew_mixture"; }
  bool time_homogeneous() const override { return slope_ == 0.0; }
  double density(double t, const Vec& eta) const override;
  CumulantTable cumulants(double t) const override;
  bool has_char_fn() const override { return true; }
  Complex char_fn(double t, const Vec& theta) const override;
  Vec sample(double t, Rng& rng) const override;
  double density1(double t, double eta) const override;
  Complex char_fn1(double t, double theta) const override;
  double sample1(double t, Rng& rng) const override;
  double support_radius() const override;

  double weight_at(double t) const;

 private:
  struct Params {
    double w, hi, lo;  // weight on the upper component, the two means
  };
  Params params(double t) const;
  MixtureInnovation at(double t) const;
  double w0_, slope_, s_;
};

// Closed-form cumulants kappa_3, kappa_4 of a 1-D Gaussian mixture (about its mean).
struct ScalarCumulants {
  double mean = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
};
ScalarCumulants mixture_cumulants(const std::vector<double>& w, const std::vector<double>& mu,
                                  const std::vector<double>& sd);

// Moments-to-cumulants for raw moments m1..m4 of a scalar law.
ScalarCumulants cumulants_from_moments(double m1, double m2, double m3, double m4);

}  // namespace medge
