// medge: command line front end.
//
//   medge validate -c model.json
//   medge density --method ck -c model.json --s 0 --t 1 --x 0 -o out.csv
//   medge expand -c model.json --T 1 --n 64 --x 0 --y 0.5
//   medge converge -c experiment.json -o report/
//   medge simulate -c model.json --paths 1000 --seed 7 -o paths.csv
//
// -c also accepts the name of a shipped model.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "medge/chain.hpp"
#include "medge/edgeworth.hpp"
#include "medge/errors.hpp"
#include "medge/harness.hpp"
#include "medge/model_io.hpp"

namespace {

using namespace medge;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitUsage = 64;

ModelSpec resolve_model(const std::string& ref) {
  if (std::filesystem::exists(ref)) return load_model(ref);
  for (const auto& name : builtin_model_names())
    if (name == ref) return builtin_model(ref);
  throw InvalidConfig("no model file or shipped model named '" + ref + "'");
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Validation:
      return kExitValidation;
    case ErrorClass::Numerical:
      return kExitNumerical;
    case ErrorClass::Usage:
      break;
  }
  return kExitUsage;
}

struct DensityArgs {
  std::string method = "parametrix";
  double s = 0.0, t = 1.0, x = 0.0;
  std::optional<double> y;
  int n = 64;
  double dx = 0.0;
  int n_internal = 512;
  int paths = 100000;
  std::uint64_t seed = 1;
  int points = 101;
};

void write_single(const std::string& out, const DensityEstimate& d, double y) {
  std::ofstream f(out);
  if (!f) throw InvalidConfig("cannot write " + out);
  f.precision(12);
  f << "coordinate,value,method,error_estimate\n" << y << ',' << d.at(y) << ',' << d.method << ','
    << d.error_estimate << '\n';
}

int run_density(const ModelSpec& spec, const DensityArgs& a, const std::string& out) {
  if (!(a.t > a.s)) throw InvalidConfig("--t must exceed --s");
  const double horizon = a.t - a.s;
  const double dx = a.dx > 0.0 ? a.dx : std::sqrt(horizon) / 50.0;
  const SpaceGrid grid = density_grid(spec, a.x, a.x, horizon, dx);

  auto chain_grid = [&]() {
    TimeGrid tg{a.t, a.n};
    tg.validate();
    const double js = a.s / tg.h();
    if (std::abs(js - std::round(js)) > 1e-9) throw InvalidConfig("--s must be a multiple of h = t/n");
    return tg;
  };

  DensityEstimate d;
  if (a.method == "parametrix") {
    SeriesConfig cfg = series_config_for(spec);
    if (a.y) {
      d = diffusion_density_series(spec, a.s, a.t, a.x, *a.y, cfg);
    } else {
      const double half = 5.0 * std::sqrt(cfg.sd_upper * cfg.sd_upper * horizon) + cfg.drift_bound * horizon;
      std::vector<double> ys(a.points);
      for (int i = 0; i < a.points; ++i) ys[i] = a.x - half + 2.0 * half * i / (a.points - 1);
      d = diffusion_density_series(spec, a.s, a.t, a.x, ys, cfg);
    }
  } else if (a.method == "ck") {
    d = ck_reference(spec, a.s, a.t, a.x, grid, a.n_internal);
  } else if (a.method == "chain") {
    TimeGrid tg = chain_grid();
    d = chain_density_ck(spec, tg, static_cast<int>(std::lround(a.s / tg.h())), a.n, a.x, grid);
  } else if (a.method == "chain-parametrix") {
    TimeGrid tg = chain_grid();
    if (a.s != 0.0) throw InvalidConfig("chain-parametrix starts at s = 0");
    d = chain_parametrix_series(spec, tg, a.x, grid);
  } else if (a.method == "mc") {
    TimeGrid tg = chain_grid();
    if (a.s != 0.0) throw InvalidConfig("mc starts at s = 0");
    Vec samples = simulate_terminal(spec, tg, a.x, a.paths, a.seed);
    std::vector<double> ys;
    if (a.y) {
      ys = {*a.y};
    } else {
      for (int i = 0; i < grid.size; i += std::max(1, grid.size / a.points)) ys.push_back(grid.at(i));
    }
    auto kde = gaussian_kde(samples, ys, silverman_bandwidth(samples));
    std::ostream* os = &std::cout;
    std::ofstream f;
    if (!out.empty()) {
      f.open(out);
      if (!f) throw InvalidConfig("cannot write " + out);
      os = &f;
    }
    os->precision(12);
    *os << "coordinate,value,std_error,bandwidth\n";
    for (size_t i = 0; i < ys.size(); ++i)
      *os << ys[i] << ',' << kde.values[i] << ',' << kde.std_errors[i] << ',' << kde.bandwidth << '\n';
    return kExitOk;
  } else {
    throw InvalidConfig("unknown --method " + a.method);
  }

  if (out.empty()) {
    std::cout.precision(12);
    if (a.y) {
      std::cout << d.at(*a.y) << " (error " << d.error_estimate << ", " << d.method << ")\n";
    } else {
      std::cout << "coordinate,value\n";
      for (int i = 0; i < d.grid.size; ++i) std::cout << d.grid.at(i) << ',' << d.values[i] << '\n';
    }
  } else if (a.y) {
    write_single(out, d, *a.y);
  } else {
    d.write_csv(out);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edgeworth-type expansions for Markov chain transition densities"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Cap the number of OpenMP threads");

  std::string model_ref, out;

  auto* validate = app.add_subcommand("validate", "Check a model against the structural assumptions");
  validate->add_option("-c,--config", model_ref, "Model JSON or shipped model name")->required();

  DensityArgs da;
  auto* density = app.add_subcommand("density", "Transition density by one of several methods");
  density->add_option("--method", da.method, "parametrix, ck, chain, chain-parametrix or mc")
      ->check(CLI::IsMember({"parametrix", "ck", "chain", "chain-parametrix", "mc"}));
  density->add_option("-c,--config", model_ref, "Model JSON or shipped model name")->required();
  density->add_option("--s", da.s, "Start time");
  density->add_option("--t", da.t, "End time");
  density->add_option("--x", da.x, "Start point");
  density->add_option("--y", da.y, "Single target point");
  density->add_option("--n", da.n, "Chain steps over [0, t] (chain methods)");
  density->add_option("--dx", da.dx, "Grid step (default sqrt(t-s)/50)");
  density->add_option("--n-internal", da.n_internal, "Time steps of the ck reference");
  density->add_option("--paths", da.paths, "Paths for mc");
  density->add_option("--seed", da.seed, "Seed for mc");
  density->add_option("--points", da.points, "Output points without --y");
  density->add_option("-o,--output", out, "Output CSV");

  double eT = 1.0, ex = 0.0, ey = 0.0;
  int en = 64, e_internal = 2048;
  std::string anchor = "target";
  auto* expand_cmd = app.add_subcommand("expand", "p, pi_1, pi_2 and the expansion at one point");
  expand_cmd->add_option("-c,--config", model_ref, "Model JSON or shipped model name")->required();
  expand_cmd->add_option("--T", eT, "Horizon")->required();
  expand_cmd->add_option("--n", en, "Chain steps (sets h = T/n)")->required();
  expand_cmd->add_option("--x", ex, "Start point")->required();
  expand_cmd->add_option("--y", ey, "Target point")->required();
  expand_cmd->add_option("--n-internal", e_internal, "Time steps of the sweep");
  expand_cmd->add_option("--f2-anchor", anchor, "target or source")->check(CLI::IsMember({"target", "source"}));

  auto* converge = app.add_subcommand("converge", "Run a convergence experiment");
  converge->add_option("-c,--config", model_ref, "Experiment JSON")->required();
  converge->add_option("-o,--output", out, "Report directory (overrides the config)");

  int paths = 1000, sn = 64;
  std::uint64_t seed = 1;
  double sT = 1.0, sx0 = 0.0;
  auto* simulate = app.add_subcommand("simulate", "Simulate chain paths");
  simulate->add_option("-c,--config", model_ref, "Model JSON or shipped model name")->required();
  simulate->add_option("--paths", paths, "Number of paths");
  simulate->add_option("--seed", seed, "Seed");
  simulate->add_option("--T", sT, "Horizon");
  simulate->add_option("--n", sn, "Steps");
  simulate->add_option("--x0", sx0, "Start point");
  simulate->add_option("-o,--output", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    set_thread_count(threads);

    if (*validate) {
      ModelSpec spec = resolve_model(model_ref);
      auto rep = validate_model(spec, default_probe(spec));
      for (const auto& c : rep.checks)
        std::cout << (c.passed ? "ok   " : "FAIL ") << c.name << "  " << c.detail << '\n';
      if (!rep.passed()) {
        std::cerr << "model violates its assumptions\n";
        return kExitValidation;
      }
      return kExitOk;
    }
    if (*density) return run_density(resolve_model(model_ref), da, out);
    if (*expand_cmd) {
      ModelSpec spec = resolve_model(model_ref);
      TimeGrid tg{eT, en};
      tg.validate();
      ExpansionConfig cfg;
      cfg.n_internal = e_internal;
      cfg.f2_anchor = anchor == "source" ? F2Anchor::Source : F2Anchor::Target;
      auto r = expand(spec, eT, tg.h(), ex, ey, cfg);
      std::printf("x,y,T,h,p,pi1,pi2,pi2_f2,pi2_nested,pi2_generator,pi2_time,expansion,p_error,pi1_error,pi2_error\n");
      std::printf("%.12g,%.12g,%.12g,%.12g,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.3e,%.3e,%.3e\n", r.x, r.y,
                  r.T, r.h, r.p, r.pi1, r.pi2, r.pi2_terms[0], r.pi2_terms[1], r.pi2_terms[2], r.pi2_terms[3],
                  r.expansion, r.p_error, r.pi1_error, r.pi2_error);
      return kExitOk;
    }
    if (*converge) {
      ExperimentConfig cfg = load_experiment(model_ref);
      if (!out.empty()) cfg.output = out;
      auto rep = run_convergence(cfg);
      write_report(rep, cfg, cfg.output);
      std::cout << report_csv(rep);
      std::printf("order_raw %.3f (%s)  order_pi1 %.3f (%s)  order_full %.3f (%s)\n", rep.raw.fit.slope,
                  rep.raw.flag.c_str(), rep.pi1.fit.slope, rep.pi1.flag.c_str(), rep.full.fit.slope,
                  rep.full.flag.c_str());
      return kExitOk;
    }
    if (*simulate) {
      ModelSpec spec = resolve_model(model_ref);
      TimeGrid tg{sT, sn};
      tg.validate();
      Vec x0 = Vec::Constant(spec.d, sx0);
      simulate_paths(spec, tg, x0, paths, seed).write_csv(out);
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
