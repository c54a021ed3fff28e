#include "medge/model_io.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "medge/errors.hpp"

namespace medge {

using nlohmann::json;

namespace {

struct Part {
  bool homogeneous = true;
  bool x_independent = true;
  double lo = 0.0, hi = 0.0;  // covariance eigenvalue bounds, or |drift| bound in hi
};

double num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw InvalidConfig(std::string("field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

Mat matrix_field(const json& j, int d) {
  if (j.is_number()) return j.get<double>() * Mat::Identity(d, d);
  if (d == 1 && j.is_array() && j.size() == 1 && j[0].is_number()) return Mat::Constant(1, 1, j[0].get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw InvalidConfig("matrix field must be d x d");
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    if (!j[i].is_array() || static_cast<int>(j[i].size()) != d) throw InvalidConfig("matrix field must be d x d");
    for (int k = 0; k < d; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

Vec vector_field(const json& j, int d) {
  if (j.is_number()) return Vec::Constant(d, j.get<double>());
  if (!j.is_array() || static_cast<int>(j.size()) != d) throw InvalidConfig("vector field must have d entries");
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = j[i].get<double>();
  return v;
}

Part build_drift(const json& j, int d, ModelSpec& spec) {
  const std::string type = j.value("type", "");
  Part p;
  auto& dv = spec.derivs;
  if (type == "zero") {
    spec.drift = [d](double, const Vec&) { return Vec::Zero(d); };
    spec.drift1 = [](double, double) { return 0.0; };
    dv.m_t = dv.m_x = dv.m_xx = [](double, double) { return 0.0; };
  } else if (type == "constant") {
    const Vec v = vector_field(j.at("value"), d);
    spec.drift = [v](double, const Vec&) { return v; };
    if (d == 1) spec.drift1 = [c = v[0]](double, double) { return c; };
    dv.m_t = dv.m_x = dv.m_xx = [](double, double) { return 0.0; };
    p.hi = v.cwiseAbs().maxCoeff();
  } else if (type == "linear_time") {
    const double base = num(j, "base", 0.0), slope = num(j, "slope", 0.0);
    spec.drift = [d, base, slope](double t, const Vec&) { return Vec::Constant(d, base + slope * t); };
    spec.drift1 = [base, slope](double t, double) { return base + slope * t; };
    dv.m_t = [slope](double, double) { return slope; };
    dv.m_x = dv.m_xx = [](double, double) { return 0.0; };
    p.homogeneous = slope == 0.0;
    p.hi = std::max(std::abs(base), std::abs(base + slope));
  } else if (type == "sine_time") {
    const double off = num(j, "offset", 0.0), amp = num(j, "amp", 0.5), freq = num(j, "freq", 1.0);
    const double w = 2.0 * std::numbers::pi * freq;
    spec.drift = [d, off, amp, w](double t, const Vec&) { return Vec::Constant(d, off + amp * std::sin(w * t)); };
    spec.drift1 = [off, amp, w](double t, double) { return off + amp * std::sin(w * t); };
    dv.m_t = [amp, w](double t, double) { return amp * w * std::cos(w * t); };
    dv.m_x = dv.m_xx = [](double, double) { return 0.0; };
    p.homogeneous = amp == 0.0;
    p.hi = std::abs(off) + std::abs(amp);
  } else if (type == "ou") {
    if (d != 1) throw UnsupportedDimension("ou drift is one-dimensional");
    const double theta = num(j, "theta", 1.0), R = num(j, "window", 8.0);
    // m(x) = -theta x exp(-(x/R)^8): linear near the origin, bounded far out
    spec.drift = [theta, R](double, const Vec& x) {
      return Vec::Constant(1, -theta * x[0] * std::exp(-std::pow(x[0] / R, 8)));
    };
    spec.drift1 = [theta, R](double, double x) { return -theta * x * std::exp(-std::pow(x / R, 8)); };
    dv.m_t = [](double, double) { return 0.0; };
    dv.m_x = [theta, R](double, double x) {
      const double u = std::pow(x / R, 8);
      return -theta * std::exp(-u) * (1.0 - 8.0 * u);
    };
    dv.m_xx = [theta, R](double, double x) {
      const double u = std::pow(x / R, 8);
      // d/dx [(1 - 8u) e^{-u}] = e^{-u} (-64 u/x - (1 - 8u) 8u/x)
      if (x == 0.0) return 0.0;
      return -theta * std::exp(-u) * (-64.0 * u / x - (1.0 - 8.0 * u) * 8.0 * u / x);
    };
    p.x_independent = theta == 0.0;
    p.hi = theta * R * std::pow(1.0 / 8.0, 1.0 / 8.0) * std::exp(-1.0 / 8.0);
  } else {
    throw InvalidConfig("unknown drift type '" + type + "'");
  }
  return p;
}

Part build_covariance(const json& j, int d, ModelSpec& spec) {
  const std::string type = j.value("type", "");
  Part p;
  auto& dv = spec.derivs;
  if (type == "constant") {
    const Mat m = matrix_field(j.at("value"), d);
    spec.covariance = [m](double, const Vec&) { return m; };
    if (d == 1) spec.cov1 = [c = m(0, 0)](double, double) { return c; };
    dv.s_t = dv.s_x = dv.s_xx = [](double, double) { return 0.0; };
    Eigen::SelfAdjointEigenSolver<Mat> es(m);
    p.lo = es.eigenvalues().minCoeff();
    p.hi = es.eigenvalues().maxCoeff();
  } else if (type == "sin_x") {
    if (d != 1) throw UnsupportedDimension("sin_x covariance is one-dimensional; use diag_sin");
    const double base = num(j, "base", 1.0), amp = num(j, "amp", 0.5), freq = num(j, "freq", 1.0);
    spec.covariance = [base, amp, freq](double, const Vec& x) {
      return Mat::Constant(1, 1, base + amp * std::sin(freq * x[0]));
    };
    spec.cov1 = [base, amp, freq](double, double x) { return base + amp * std::sin(freq * x); };
    dv.s_t = [](double, double) { return 0.0; };
    dv.s_x = [amp, freq](double, double x) { return amp * freq * std::cos(freq * x); };
    dv.s_xx = [amp, freq](double, double x) { return -amp * freq * freq * std::sin(freq * x); };
    p.x_independent = amp == 0.0;
    p.lo = base - std::abs(amp);
    p.hi = base + std::abs(amp);
  } else if (type == "linear_time") {
    const double base = num(j, "base", 1.0), slope = num(j, "slope", 0.0);
    spec.covariance = [d, base, slope](double t, const Vec&) { return (base + slope * t) * Mat::Identity(d, d); };
    if (d == 1) spec.cov1 = [base, slope](double t, double) { return base + slope * t; };
    dv.s_t = [slope](double, double) { return slope; };
    dv.s_x = dv.s_xx = [](double, double) { return 0.0; };
    p.homogeneous = slope == 0.0;
    p.lo = std::min(base, base + slope);
    p.hi = std::max(base, base + slope);
  } else if (type == "diag_sin") {
    const double base = num(j, "base", 1.0), amp = num(j, "amp", 0.5);
    spec.covariance = [d, base, amp](double, const Vec& x) {
      Mat m = Mat::Zero(d, d);
      for (int i = 0; i < d; ++i) m(i, i) = base + amp * std::sin(x[i]);
      return m;
    };
    if (d == 1) {
      spec.cov1 = [base, amp](double, double x) { return base + amp * std::sin(x); };
      dv.s_t = [](double, double) { return 0.0; };
      dv.s_x = [amp](double, double x) { return amp * std::cos(x); };
      dv.s_xx = [amp](double, double x) { return -amp * std::sin(x); };
    }
    p.x_independent = amp == 0.0;
    p.lo = base - std::abs(amp);
    p.hi = base + std::abs(amp);
  } else {
    throw InvalidConfig("unknown covariance type '" + type + "'");
  }
  if (!(p.lo > 0.0)) throw CovarianceNotPD("declared covariance is not positive definite");
  return p;
}

std::vector<double> list_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) throw InvalidConfig(std::string("mixture needs array '") + key + "'");
  return j.at(key).get<std::vector<double>>();
}

std::shared_ptr<const StandardInnovation> build_innovation(const json& j, int d) {
  const std::string type = j.value("type", "");
  if (type == "gaussian") return std::make_shared<GaussianInnovation>(d);
  if (d != 1) throw UnsupportedDimension("non-Gaussian innovations are one-dimensional");
  if (type == "skew_mixture")
    return std::make_shared<SkewMixtureInnovation>(num(j, "weight", 0.25), num(j, "weight_slope", 0.0),
                                                   num(j, "spread", 0.6));
  if (type == "mixture")
    return std::make_shared<MixtureInnovation>(list_field(j, "weights"), list_field(j, "means"),
                                               list_field(j, "sds"), j.value("standardize", true),
                                               num(j, "shift", 0.0));
  throw InvalidConfig("unknown innovation type '" + type + "'");
}

ModelSpec model_from_json(const json& j) {
  ModelSpec spec;
  spec.d = j.value("d", 1);
  if (spec.d < 1 || spec.d > 2) throw UnsupportedDimension("models support d = 1 or d = 2");
  spec.name = j.value("name", std::string("unnamed"));
  for (const char* key : {"drift", "covariance", "innovation"})
    if (!j.contains(key)) throw InvalidConfig(std::string("model is missing '") + key + "'");
  const Part dr = build_drift(j.at("drift"), spec.d, spec);
  const Part cv = build_covariance(j.at("covariance"), spec.d, spec);
  spec.innovation = build_innovation(j.at("innovation"), spec.d);
  spec.time_homogeneous = dr.homogeneous && cv.homogeneous && spec.innovation->time_homogeneous();
  spec.x_independent = dr.x_independent && cv.x_independent;
  spec.sigma_lower = cv.lo;
  spec.sigma_upper = cv.hi;
  spec.drift_bound = dr.hi;
  return spec;
}

const std::vector<std::pair<std::string, const char*>>& builtin_table() {
  static const std::vector<std::pair<std::string, const char*>> table = {
      {"constant", R"({"name": "constant", "d": 1,
        "drift": {"type": "zero"},
        "covariance": {"type": "constant", "value": 1.0},
        "innovation": {"type": "gaussian"}})"},
      {"x_independent", R"({"name": "x_independent", "d": 1,
        "drift": {"type": "sine_time", "offset": 0.1, "amp": 0.3, "freq": 1.0},
        "covariance": {"type": "linear_time", "base": 0.8, "slope": 0.4},
        "innovation": {"type": "skew_mixture", "weight": 0.2, "weight_slope": 0.1, "spread": 0.6}})"},
      {"x_independent_skew", R"({"name": "x_independent_skew", "d": 1,
        "drift": {"type": "constant", "value": 0.1},
        "covariance": {"type": "constant", "value": 1.0},
        "innovation": {"type": "skew_mixture", "weight": 0.2, "weight_slope": 0.1, "spread": 0.6}})"},
      {"sin_sigma", R"({"name": "sin_sigma", "d": 1,
        "drift": {"type": "zero"},
        "covariance": {"type": "sin_x", "base": 1.0, "amp": 0.5, "freq": 1.0},
        "innovation": {"type": "skew_mixture", "weight": 0.25, "weight_slope": 0.0, "spread": 0.6}})"},
      {"euler_sin_sigma", R"({"name": "euler_sin_sigma", "d": 1,
        "drift": {"type": "zero"},
        "covariance": {"type": "sin_x", "base": 1.0, "amp": 0.5, "freq": 1.0},
        "innovation": {"type": "gaussian"}})"},
      {"ou", R"({"name": "ou", "d": 1,
        "drift": {"type": "ou", "theta": 1.0, "window": 8.0},
        "covariance": {"type": "constant", "value": 1.0},
        "innovation": {"type": "gaussian"}})"},
      {"constant_2d", R"({"name": "constant_2d", "d": 2,
        "drift": {"type": "constant", "value": [0.1, -0.2]},
        "covariance": {"type": "constant", "value": [[1.0, 0.3], [0.3, 0.8]]},
        "innovation": {"type": "gaussian"}})"},
      {"sin_sigma_2d", R"({"name": "sin_sigma_2d", "d": 2,
        "drift": {"type": "zero"},
        "covariance": {"type": "diag_sin", "base": 1.0, "amp": 0.5},
        "innovation": {"type": "gaussian"}})"},
  };
  return table;
}

}  // namespace

ModelSpec model_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("model JSON: ") + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("model JSON: ") + e.what());
  }
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot read model file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

std::string builtin_model_json(const std::string& name) {
  for (const auto& [n, text] : builtin_table())
    if (n == name) return text;
  throw InvalidConfig("unknown builtin model '" + name + "'");
}

ModelSpec builtin_model(const std::string& name) { return model_from_json_text(builtin_model_json(name)); }

std::vector<std::string> builtin_model_names() {
  std::vector<std::string> out;
  for (const auto& [n, text] : builtin_table()) out.push_back(n);
  return out;
}

}  // namespace medge
