#pragma once

#include <array>
#include <string>
#include <vector>

#include "medge/parametrix.hpp"

namespace medge {

// Where the order-4 cumulant inside F_2 is evaluated.
enum class F2Anchor {
  Target,  // chi_4(u, y), the printed form (default)
  Source,  // chi_4(u, z), for diagnostics only
};

struct ExpansionConfig {
  int n_internal = 2048;      // time steps of the coarse sweep (the fine one uses twice as many)
  bool richardson = true;     // combine the two sweeps
  double dz = 0.0;            // space step; 0 means sqrt(T)/70
  double margin_sd = 8.0;     // grid margin around the evaluation window, in sqrt(sigma_upper T)
  double radius_sd = 10.0;    // band half-width of the step kernels
  int time_basis = 12;        // Chebyshev nodes for target-anchored, time-varying coefficients
  F2Anchor f2_anchor = F2Anchor::Target;
};

// Components of pi_2, in the printed order.
enum Pi2Term { kPi2F2 = 0, kPi2Nested = 1, kPi2Generator = 2, kPi2TimeDerivative = 3 };

struct ExpansionResult {
  double x = 0.0, y = 0.0, T = 0.0, h = 0.0;
  double p = 0.0, pi1 = 0.0, pi2 = 0.0;
  std::array<double, 4> pi2_terms{};
  double expansion = 0.0;  // p + sqrt(h) pi1 + h pi2
  double p_error = 0.0, pi1_error = 0.0, pi2_error = 0.0;
};

// p, pi_1 and the pi_2 components on a lattice xs x ys at horizon T. One
// sweep over time serves every start point: the forward density from each x
// is carried together with accumulators for the convolution terms.
struct ExpansionTable {
  double T = 0.0;
  std::vector<double> xs, ys;
  // rows index x, columns index y
  Mat p, pi1, pi2;
  std::array<Mat, 4> pi2_terms;
  Mat p_error, pi1_error, pi2_error;
  std::string resolution;

  ExpansionResult at(int i, int j, double h) const;
};

ExpansionTable expansion_table(const ModelSpec& spec, double T, const std::vector<double>& xs,
                               const std::vector<double>& ys, const ExpansionConfig& cfg = {});

ExpansionResult expand(const ModelSpec& spec, double T, double h, double x, double y, const ExpansionConfig& cfg = {});
double pi1(const ModelSpec& spec, double T, double x, double y, const ExpansionConfig& cfg = {});
double pi2(const ModelSpec& spec, double T, double x, double y, const ExpansionConfig& cfg = {});

// Theorem weight T^{d/2} (1 + |(y - x)/sqrt(T)|^{S'}).
double defect_weight(double T, double x, double y, double s_prime, int d = 1);

// Max over the lattice of the weighted |defect|; defect rows index xs.
double weighted_sup_error(const Mat& defect, const std::vector<double>& xs, const std::vector<double>& ys, double T,
                          double s_prime);

// Columns: x,y,p,pi1,pi2,expansion,p_h,defect,weighted_defect
void write_expansion_csv(const std::string& path, const ExpansionTable& table, const Mat& p_h, double h,
                         double s_prime);

// The default evaluation lattice: `points` values over x0 +- half_width*sqrt(T).
std::vector<double> eval_lattice(double x0, double T, int points = 15, double half_width = 2.0);

}  // namespace medge
