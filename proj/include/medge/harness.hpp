#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medge/edgeworth.hpp"
#include "medge/model.hpp"

namespace medge {

struct ExperimentConfig {
  std::string model_name;  // for reports
  ModelSpec model;
  double T = 1.0;                // fixed horizon, unless kappa is set
  std::optional<double> kappa;   // small-time schedule T(n) = c n^{-kappa}
  double c = 1.0;
  std::vector<int> n;
  double x0 = 0.0;
  int eval_points = 15;
  double eval_half_width = 2.0;  // in sqrt(T)
  double s_prime = 2.0;
  ExpansionConfig expansion;
  std::uint64_t seed = 1;
  std::string output = "report";
  bool write_tables = true;  // per-n expansion CSVs next to the report

  double horizon(int n) const;
  void validate() const;
};

// Accepts the model as a builtin name, {"path": file}, or an inline spec.
ExperimentConfig experiment_from_json_text(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_experiment(const std::string& path);

struct FitResult {
  double slope = 0.0, intercept = 0.0, residual = 0.0;
};
// Least squares of log(err) on log(h). Throws NonPositiveError for err <= 0.
FitResult fit_order(const std::vector<double>& h, const std::vector<double>& err);

struct ConvergenceRow {
  int n = 0;
  double h = 0.0, T = 0.0;
  double err_raw = 0.0, err_pi1 = 0.0, err_full = 0.0;
};

struct OrderFit {
  FitResult fit;
  std::string flag;  // "ok", "unreliable" or "degenerate"
};

struct ConvergenceReport {
  std::string model;
  std::vector<ConvergenceRow> rows;
  OrderFit raw, pi1, full;
  bool corrections_help = false;  // err_full <= err_pi1 <= err_raw at every n
  bool full_decreasing = false;   // err_full strictly decreasing in n
};

// Residual threshold above which a fit is flagged unreliable, and the error
// level treated as the numerical noise floor.
inline constexpr double kUnreliableResidual = 0.3;
inline constexpr double kNoiseFloor = 1e-6;

OrderFit classify_fit(const std::vector<double>& h, const std::vector<double>& err);

ConvergenceReport run_convergence(const ExperimentConfig& cfg);

// convergence.csv (n,h,err_raw,err_pi1,err_full) and summary.json in `dir`.
void write_report(const ConvergenceReport& rep, const ExperimentConfig& cfg, const std::string& dir);
std::string report_csv(const ConvergenceReport& rep);
std::string report_json(const ConvergenceReport& rep, const ExperimentConfig& cfg);

}  // namespace medge
