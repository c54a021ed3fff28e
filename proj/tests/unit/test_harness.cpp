#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "medge/errors.hpp"
#include "medge/harness.hpp"

using namespace medge;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MEDGE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string src(const std::string& rel) { return std::string(MEDGE_SOURCE_DIR) + "/" + rel; }

std::vector<std::vector<double>> read_csv_values(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str()) row.push_back(v);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST(FitOrder, ExactPowers) {
  std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
  auto lin = fit_order(h, h);
  EXPECT_NEAR(lin.slope, 1.0, 1e-12);
  EXPECT_NEAR(lin.intercept, 0.0, 1e-12);
  EXPECT_NEAR(lin.residual, 0.0, 1e-12);
  std::vector<double> e;
  for (double v : h) e.push_back(3.0 * std::pow(v, 1.5));
  auto f = fit_order(h, e);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
}

TEST(FitOrder, AlternatingNoise) {
  std::vector<double> h, e;
  for (int k = 0; k < 6; ++k) {
    h.push_back(1.0 / (8 << k));
    e.push_back(std::pow(h.back(), 1.5) * (1.0 + 0.05 * (k % 2 ? -1 : 1)));
  }
  EXPECT_NEAR(fit_order(h, e).slope, 1.5, 0.05);
  EXPECT_EQ(classify_fit(h, e).flag, "ok");
  for (double& v : e) v *= 1e-6;
  EXPECT_EQ(classify_fit(h, e).flag, "degenerate");  // all below the floor
}

TEST(FitOrder, ScatterIsFlaggedUnreliable) {
  std::vector<double> h{0.5, 0.25, 0.125, 0.0625}, e{1.0, 0.1, 1.0, 0.1};
  auto f = classify_fit(h, e);
  EXPECT_GT(f.fit.residual, kUnreliableResidual);
  EXPECT_EQ(f.flag, "unreliable");
}

TEST(FitOrder, Errors) {
  EXPECT_THROW(fit_order({0.5, 0.25}, {1.0, 0.0}), NonPositiveError);
  EXPECT_THROW(fit_order({0.5, 0.25}, {1.0, -1.0}), NonPositiveError);
  EXPECT_THROW(fit_order({0.5}, {1.0}), InvalidConfig);
}

TEST(Config, Validation) {
  auto ok = experiment_from_json_text(R"({"model": "sin_sigma", "T": 1, "n": [8, 16, 32, 64]})");
  EXPECT_NO_THROW(ok.validate());
  EXPECT_DOUBLE_EQ(ok.horizon(32), 1.0);
  EXPECT_EQ(ok.s_prime, 2.0);
  EXPECT_EQ(ok.eval_points, 15);

  auto sched = experiment_from_json_text(R"({"model": "sin_sigma", "schedule": {"kappa": 0.1}, "n": [8, 16, 32, 64]})");
  EXPECT_NEAR(sched.horizon(32), std::pow(32.0, -0.1), 1e-15);

  for (const char* bad : {
           R"({"model": "sin_sigma", "T": 1, "n": [8, 16, 16, 64]})",
           R"({"model": "sin_sigma", "T": 1, "n": [1, 16, 32, 64]})",
           R"({"model": "sin_sigma", "T": 1, "n": [8, 16, 32]})",
           R"({"model": "sin_sigma", "schedule": {"kappa": 0.25}, "n": [8, 16, 32, 64]})",
           R"({"model": "sin_sigma", "T": 1, "schedule": {"kappa": 0.1}, "n": [8, 16, 32, 64]})",
           R"({"model": "sin_sigma", "T": 1, "n": [8, 16, 32, 64], "bogus": 1})",
           R"({"model": "sin_sigma_2d", "T": 1, "n": [8, 16, 32, 64]})",
       }) {
    EXPECT_THROW(experiment_from_json_text(bad).validate(), Error) << bad;
  }
}

TEST(Config, ShippedExperimentsLoad) {
  for (const auto& entry : fs::directory_iterator(src("configs/experiments"))) {
    auto cfg = load_experiment(entry.path().string());
    EXPECT_NO_THROW(cfg.validate()) << entry.path();
  }
}

TEST(Convergence, ConstantModelIsDegenerateAndDeterministic) {
  auto cfg = load_experiment(src("configs/experiments/constant.json"));
  auto a = run_convergence(cfg);
  ASSERT_EQ(a.rows.size(), 4u);
  for (size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_LT(a.rows[k].err_raw, 1e-6);
    EXPECT_LT(a.rows[k].err_pi1, 1e-6);
    EXPECT_LT(a.rows[k].err_full, 1e-6);
    if (k) EXPECT_GT(a.rows[k].n, a.rows[k - 1].n);
  }
  EXPECT_EQ(a.raw.flag, "degenerate");
  EXPECT_EQ(a.full.flag, "degenerate");

  auto b = run_convergence(cfg);
  EXPECT_EQ(report_csv(a), report_csv(b));
  EXPECT_EQ(report_json(a, cfg), report_json(b, cfg));
  const std::string csv = report_csv(a);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,h,err_raw,err_pi1,err_full");
  const std::string json = report_json(a, cfg);
  EXPECT_NE(json.find("\"schema\": 1"), std::string::npos);
  for (const char* key : {"order_raw", "order_pi1", "order_full", "residual", "environment"})
    EXPECT_NE(json.find(key), std::string::npos) << key;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("validate -c " + src("configs/models/sin_sigma.json")), 0);
  EXPECT_EQ(run_cli("validate -c sin_sigma"), 0);
  EXPECT_EQ(run_cli("validate -c " + src("configs/models/shifted_mixture.json")), 1);
  EXPECT_EQ(run_cli("validate -c sin_sigma --bogus"), 64);
  EXPECT_EQ(run_cli("frobnicate"), 64);
  EXPECT_EQ(run_cli("validate -c /nonexistent/model.json"), 64);
  // a grid too narrow to hold the chain is a numerical failure
  EXPECT_EQ(run_cli("density --method chain -c sin_sigma --t 1 --x 0 --n 8 --points 5 --dx 1 -o /dev/null"), 2);
}

TEST(Cli, ConvergeWritesReport) {
  const fs::path out = fs::temp_directory_path() / "medge_cli_converge";
  fs::remove_all(out);
  ASSERT_EQ(run_cli("converge -c " + src("configs/experiments/constant.json") + " -o " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "convergence.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.json"));
  EXPECT_EQ(read_csv_values(out / "convergence.csv").size(), 4u);
  fs::remove_all(out);
}

TEST(Cli, DensityMethodsAgreeOnOrnsteinUhlenbeck) {
  const fs::path dir = fs::temp_directory_path();
  const std::string common = " -c ou --s 0 --t 1 --x 0.5 --y 0.2";
  ASSERT_EQ(run_cli("density --method ck" + common + " -o " + (dir / "medge_ou_ck.csv").string()), 0);
  ASSERT_EQ(run_cli("density --method parametrix" + common + " -o " + (dir / "medge_ou_par.csv").string()), 0);
  auto ck = read_csv_values(dir / "medge_ou_ck.csv");
  auto par = read_csv_values(dir / "medge_ou_par.csv");
  ASSERT_EQ(ck.size(), 1u);
  ASSERT_EQ(par.size(), 1u);
  // coordinate, value, error_estimate
  EXPECT_NEAR(ck[0][0], 0.2, 1e-12);
  EXPECT_LE(std::abs(ck[0][1] - par[0][1]), ck[0][2] + par[0][2]);
  fs::remove(dir / "medge_ou_ck.csv");
  fs::remove(dir / "medge_ou_par.csv");
}
