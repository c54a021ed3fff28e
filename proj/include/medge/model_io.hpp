#pragma once

#include <string>
#include <vector>

#include "medge/model.hpp"

namespace medge {

// Builds a model from its JSON description:
//   {"name": ..., "d": 1,
//    "drift": {"type": "zero" | "constant" | "linear_time" | "sine_time" | "ou", ...},
//    "covariance": {"type": "constant" | "sin_x" | "linear_time" | "diag_sin", ...},
//    "innovation": {"type": "gaussian" | "skew_mixture" | "mixture", ...}}
ModelSpec model_from_json_text(const std::string& text);
ModelSpec load_model(const std::string& path);

// Shipped models by name: constant, x_independent, x_independent_skew,
// sin_sigma, euler_sin_sigma, ou, constant_2d, sin_sigma_2d.
ModelSpec builtin_model(const std::string& name);
std::vector<std::string> builtin_model_names();
std::string builtin_model_json(const std::string& name);

}  // namespace medge
