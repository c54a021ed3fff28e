#include "medge/errors.hpp"

#include <cmath>

namespace medge {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteEvaluation(std::string(what) + " returned a non-finite value");
}

}  // namespace medge
