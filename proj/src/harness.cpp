#include "medge/harness.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "medge/chain.hpp"
#include "medge/errors.hpp"
#include "medge/model_io.hpp"

namespace medge {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw InvalidConfig(std::string("bad value for '") + key + "'");
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw InvalidConfig("unknown key '" + it.key() + "' in " + where);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

}  // namespace

double ExperimentConfig::horizon(int n_steps) const {
  if (kappa) return c * std::pow(static_cast<double>(n_steps), -*kappa);
  return T;
}

void ExperimentConfig::validate() const {
  if (n.size() < 4) throw InvalidConfig("n list needs at least 4 entries for an order fit");
  for (size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 2) throw InvalidConfig("every n must be >= 2");
    if (i > 0 && n[i] <= n[i - 1]) throw InvalidConfig("n list must be strictly increasing");
  }
  if (kappa) {
    if (!(*kappa > 0.0 && *kappa < 0.2)) throw InvalidConfig("kappa must lie in (0, 1/5)");
    if (!(c > 0.0)) throw InvalidConfig("schedule constant c must be positive");
  } else if (!(T > 0.0)) {
    throw InvalidConfig("T must be positive");
  }
  if (eval_points < 2) throw InvalidConfig("eval points must be >= 2");
  if (!(eval_half_width > 0.0)) throw InvalidConfig("eval half_width must be positive");
  if (!(s_prime >= 0.0)) throw InvalidConfig("s_prime must be non-negative");
  if (expansion.n_internal < 4) throw InvalidConfig("expansion.n_internal must be >= 4");
  if (model.d != 1) throw UnsupportedDimension("convergence experiments run in d = 1");
}

ExperimentConfig experiment_from_json_text(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("experiment JSON: ") + e.what());
  }
  if (!j.is_object()) throw InvalidConfig("experiment must be a JSON object");
  reject_unknown(j, {"description", "model", "T", "schedule", "n", "x0", "eval", "s_prime", "expansion", "seed", "output",
                     "write_tables"},
                 "experiment");

  ExperimentConfig cfg;
  if (!j.contains("model")) throw InvalidConfig("experiment needs a 'model'");
  const json& m = j["model"];
  if (m.is_string()) {
    cfg.model_name = m.get<std::string>();
    cfg.model = builtin_model(cfg.model_name);
  } else if (m.is_object() && m.contains("path")) {
    fs::path p = m["path"].get<std::string>();
    if (p.is_relative()) p = fs::path(base_dir) / p;
    cfg.model = load_model(p.string());
    cfg.model_name = cfg.model.name.empty() ? p.stem().string() : cfg.model.name;
  } else if (m.is_object()) {
    cfg.model = model_from_json_text(m.dump());
    cfg.model_name = cfg.model.name.empty() ? "inline" : cfg.model.name;
  } else {
    throw InvalidConfig("'model' must be a name, {\"path\": ...} or an inline spec");
  }

  cfg.T = get_or(j, "T", 1.0);
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    reject_unknown(s, {"kappa", "c"}, "schedule");
    cfg.kappa = get_or(s, "kappa", 0.1);
    cfg.c = get_or(s, "c", 1.0);
    if (j.contains("T")) throw InvalidConfig("give either T or schedule, not both");
  }
  if (!j.contains("n") || !j["n"].is_array()) throw InvalidConfig("experiment needs an 'n' list");
  cfg.n = j["n"].get<std::vector<int>>();
  cfg.x0 = get_or(j, "x0", 0.0);
  if (j.contains("eval")) {
    const json& e = j["eval"];
    reject_unknown(e, {"points", "half_width"}, "eval");
    cfg.eval_points = get_or(e, "points", cfg.eval_points);
    cfg.eval_half_width = get_or(e, "half_width", cfg.eval_half_width);
  }
  cfg.s_prime = get_or(j, "s_prime", cfg.s_prime);
  if (j.contains("expansion")) {
    const json& e = j["expansion"];
    reject_unknown(e, {"n_internal", "richardson", "dz", "margin_sd", "radius_sd", "time_basis", "f2_anchor"},
                   "expansion");
    auto& x = cfg.expansion;
    x.n_internal = get_or(e, "n_internal", x.n_internal);
    x.richardson = get_or(e, "richardson", x.richardson);
    x.dz = get_or(e, "dz", x.dz);
    x.margin_sd = get_or(e, "margin_sd", x.margin_sd);
    x.radius_sd = get_or(e, "radius_sd", x.radius_sd);
    x.time_basis = get_or(e, "time_basis", x.time_basis);
    std::string anchor = get_or<std::string>(e, "f2_anchor", "target");
    if (anchor == "target")
      x.f2_anchor = F2Anchor::Target;
    else if (anchor == "source")
      x.f2_anchor = F2Anchor::Source;
    else
      throw InvalidConfig("f2_anchor must be 'target' or 'source'");
  }
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.output = get_or<std::string>(j, "output", cfg.output);
  cfg.write_tables = get_or(j, "write_tables", cfg.write_tables);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  return experiment_from_json_text(read_file(path), fs::path(path).parent_path().string());
}

FitResult fit_order(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size()) throw DimensionMismatch("fit_order: h and err differ in length");
  if (h.size() < 2) throw InvalidConfig("fit_order needs at least 2 points");
  const size_t k = h.size();
  Eigen::VectorXd lx(k), ly(k);
  for (size_t i = 0; i < k; ++i) {
    if (!(h[i] > 0.0)) throw NonPositiveError("step size must be positive");
    if (!(err[i] > 0.0)) throw NonPositiveError("error " + fmt(err[i]) + " is not positive");
    lx[i] = std::log(h[i]);
    ly[i] = std::log(err[i]);
  }
  const double mx = lx.mean(), my = ly.mean();
  const double sxx = (lx.array() - mx).square().sum();
  if (sxx <= 0.0) throw InvalidConfig("fit_order needs distinct step sizes");
  FitResult r;
  r.slope = ((lx.array() - mx) * (ly.array() - my)).sum() / sxx;
  r.intercept = my - r.slope * mx;
  // root mean square of the log residuals
  r.residual = std::sqrt((ly.array() - r.intercept - r.slope * lx.array()).square().mean());
  return r;
}

OrderFit classify_fit(const std::vector<double>& h, const std::vector<double>& err) {
  OrderFit out;
  bool floor = true;
  for (double e : err) floor = floor && e < kNoiseFloor;
  if (floor) {
    out.flag = "degenerate";
    bool positive = true;
    for (double e : err) positive = positive && e > 0.0;
    if (positive) out.fit = fit_order(h, err);
    return out;
  }
  out.fit = fit_order(h, err);
  out.flag = out.fit.residual > kUnreliableResidual ? "unreliable" : "ok";
  return out;
}

ConvergenceReport run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelSpec& spec = cfg.model;
  ConvergenceReport rep;
  rep.model = cfg.model_name;

  // one expansion table per distinct horizon
  std::map<double, ExpansionTable> tables;
  for (int n : cfg.n) {
    const double T = cfg.horizon(n);
    ConvergenceRow row;
    row.n = n;
    row.T = T;
    row.h = T / n;
    try {
      const auto xs = eval_lattice(cfg.x0, T, cfg.eval_points, cfg.eval_half_width);
      const auto& ys = xs;
      auto it = tables.find(T);
      if (it == tables.end()) it = tables.emplace(T, expansion_table(spec, T, xs, ys, cfg.expansion)).first;
      const ExpansionTable& tab = it->second;

      TimeGrid tg{T, n, cfg.kappa};
      const double dz = cfg.expansion.dz > 0.0 ? cfg.expansion.dz : std::sqrt(T) / 70.0;
      const auto grid = density_grid(spec, xs.front(), xs.back(), T, dz, 10.0);
      const int k = static_cast<int>(xs.size());
      Mat ph(k, k);
      for (int i = 0; i < k; ++i) {
        auto dens = chain_density_ck(spec, tg, 0, n, xs[i], grid);
        for (int j = 0; j < k; ++j) ph(i, j) = dens.at(ys[j]);
      }
      const Mat raw = ph - tab.p;
      const Mat d1 = raw - std::sqrt(row.h) * tab.pi1;
      const Mat d2 = d1 - row.h * tab.pi2;
      row.err_raw = weighted_sup_error(raw, xs, ys, T, cfg.s_prime);
      row.err_pi1 = weighted_sup_error(d1, xs, ys, T, cfg.s_prime);
      row.err_full = weighted_sup_error(d2, xs, ys, T, cfg.s_prime);

      if (cfg.write_tables && !cfg.output.empty()) {
        fs::create_directories(cfg.output);
        write_expansion_csv((fs::path(cfg.output) / ("expansion_n" + std::to_string(n) + ".csv")).string(), tab, ph,
                            row.h, cfg.s_prime);
      }
    } catch (const Error& e) {
      throw Error(e.kind(), e.error_class(), "at n=" + std::to_string(n) + ": " + e.what());
    }
    rep.rows.push_back(row);
  }

  std::vector<double> h, er, e1, e2;
  for (const auto& r : rep.rows) {
    h.push_back(r.h);
    er.push_back(r.err_raw);
    e1.push_back(r.err_pi1);
    e2.push_back(r.err_full);
  }
  rep.raw = classify_fit(h, er);
  rep.pi1 = classify_fit(h, e1);
  rep.full = classify_fit(h, e2);
  rep.corrections_help = true;
  rep.full_decreasing = true;
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    if (!(r.err_full <= r.err_pi1 && r.err_pi1 <= r.err_raw)) rep.corrections_help = false;
    if (i > 0 && !(r.err_full < rep.rows[i - 1].err_full)) rep.full_decreasing = false;
  }
  return rep;
}

std::string report_csv(const ConvergenceReport& rep) {
  std::ostringstream os;
  os << "n,h,err_raw,err_pi1,err_full\n";
  for (const auto& r : rep.rows)
    os << r.n << ',' << fmt(r.h) << ',' << fmt(r.err_raw) << ',' << fmt(r.err_pi1) << ',' << fmt(r.err_full) << '\n';
  return os.str();
}

std::string report_json(const ConvergenceReport& rep, const ExperimentConfig& cfg) {
  auto order = [](const OrderFit& f) {
    json o;
    o["order"] = f.fit.slope;
    o["intercept"] = f.fit.intercept;
    o["residual"] = f.fit.residual;
    o["flag"] = f.flag;
    if (f.flag == "degenerate") o["note"] = "errors at noise floor";
    return o;
  };
  json j;
  j["schema"] = 1;
  j["model"] = rep.model;
  if (cfg.kappa) {
    j["schedule"] = {{"kappa", *cfg.kappa}, {"c", cfg.c}};
  } else {
    j["T"] = cfg.T;
  }
  j["n"] = cfg.n;
  j["x0"] = cfg.x0;
  j["eval"] = {{"points", cfg.eval_points},
               {"half_width_sqrtT", cfg.eval_half_width},
               {"lattice", "points x points over x0 +- half_width*sqrt(T)"}};
  j["s_prime"] = cfg.s_prime;
  j["f2_anchor"] = cfg.expansion.f2_anchor == F2Anchor::Target ? "target" : "source";
  j["n_internal"] = cfg.expansion.n_internal;
  j["seed"] = cfg.seed;
  j["order_raw"] = order(rep.raw);
  j["order_pi1"] = order(rep.pi1);
  j["order_full"] = order(rep.full);
  j["corrections_help_every_n"] = rep.corrections_help;
  j["err_full_decreasing"] = rep.full_decreasing;
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"n", r.n}, {"T", r.T}, {"h", r.h}, {"err_raw", r.err_raw}, {"err_pi1", r.err_pi1},
                    {"err_full", r.err_full}});
  j["rows"] = rows;
  json env;
#if defined(__clang__)
  env["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  env["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  env["cxx_standard"] = static_cast<long>(__cplusplus);
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
#ifdef _OPENMP
  env["openmp"] = _OPENMP;
#endif
  j["environment"] = env;
  return j.dump(2) + "\n";
}

void write_report(const ConvergenceReport& rep, const ExperimentConfig& cfg, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream csv(fs::path(dir) / "convergence.csv");
  std::ofstream js(fs::path(dir) / "summary.json");
  if (!csv || !js) throw InvalidConfig("cannot write report into " + dir);
  csv << report_csv(rep);
  js << report_json(rep, cfg);
}

}  // namespace medge
