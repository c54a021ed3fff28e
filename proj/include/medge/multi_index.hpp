#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

namespace medge {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ν = (ν_1, ..., ν_d), nonnegative entries.
using MultiIndex = std::vector<int>;

int order(const MultiIndex& nu);
double factorial(const MultiIndex& nu);  // ν! = ν_1! ⋯ ν_d!

// All multi-indices of dimension d with |ν| = n, in reverse-lexicographic
// order ((n,0,..), (n-1,1,..), ...).
std::vector<MultiIndex> multi_indices(int d, int n);

// Expand ν into a sorted list of coordinate indices, e.g. (2,1) -> {0,0,1}.
std::vector<int> to_coordinates(const MultiIndex& nu);
MultiIndex from_coordinates(int d, const std::vector<int>& coords);

MultiIndex unit_index(int d, int i);
MultiIndex operator+(const MultiIndex& a, const MultiIndex& b);

// Table of cumulants χ_ν keyed by multi-index.
using CumulantTable = std::map<MultiIndex, double>;

}  // namespace medge
