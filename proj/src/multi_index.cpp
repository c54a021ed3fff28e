#include "medge/multi_index.hpp"

#include <algorithm>
#include <numeric>

#include "medge/errors.hpp"

namespace medge {

int order(const MultiIndex& nu) { return std::accumulate(nu.begin(), nu.end(), 0); }

double factorial(const MultiIndex& nu) {
  double f = 1.0;
  for (int k : nu)
    for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

namespace {
void fill(int d, int pos, int remaining, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos == d - 1) {
    cur[pos] = remaining;
    out.push_back(cur);
    return;
  }
  for (int k = remaining; k >= 0; --k) {
    cur[pos] = k;
    fill(d, pos + 1, remaining - k, cur, out);
  }
}
}  // namespace

std::vector<MultiIndex> multi_indices(int d, int n) {
  if (d < 1) throw DimensionMismatch("dimension must be positive");
  std::vector<MultiIndex> out;
  MultiIndex cur(d, 0);
  fill(d, 0, n, cur, out);
  return out;
}

std::vector<int> to_coordinates(const MultiIndex& nu) {
  std::vector<int> c;
  for (int i = 0; i < static_cast<int>(nu.size()); ++i)
    for (int k = 0; k < nu[i]; ++k) c.push_back(i);
  return c;
}

MultiIndex from_coordinates(int d, const std::vector<int>& coords) {
  MultiIndex nu(d, 0);
  for (int c : coords) {
    if (c < 0 || c >= d) throw DimensionMismatch("coordinate out of range");
    ++nu[c];
  }
  return nu;
}

MultiIndex unit_index(int d, int i) {
  MultiIndex nu(d, 0);
  nu.at(i) = 1;
  return nu;
}

MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
  if (a.size() != b.size()) throw DimensionMismatch("multi-index sizes differ");
  MultiIndex c(a.size());
  std::transform(a.begin(), a.end(), b.begin(), c.begin(), std::plus<>());
  return c;
}

}  // namespace medge
