#pragma once

#include <stdexcept>
#include <string>

namespace medge {

// Broad classes of failure. The CLI maps these onto exit codes.
enum class ErrorClass {
  Usage,       // malformed input or unsupported request
  Validation,  // the model violates a structural assumption
  Numerical,   // a quadrature/series/grid budget was exhausted
};

class Error : public std::runtime_error {
 public:
  Error(std::string kind, ErrorClass cls, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)), cls_(cls) {}

  const std::string& kind() const noexcept { return kind_; }
  ErrorClass error_class() const noexcept { return cls_; }

 private:
  std::string kind_;
  ErrorClass cls_;
};

#define MEDGE_DEFINE_ERROR(Name, Cls)                              \
  class Name : public Error {                                      \
   public:                                                         \
    explicit Name(const std::string& what)                         \
        : Error(#Name, ErrorClass::Cls, what) {}                   \
  };

MEDGE_DEFINE_ERROR(NonFiniteEvaluation, Validation)
MEDGE_DEFINE_ERROR(CovarianceNotPD, Validation)
MEDGE_DEFINE_ERROR(NonSPDIntegratedCov, Validation)
MEDGE_DEFINE_ERROR(NotSPD, Validation)
MEDGE_DEFINE_ERROR(ModelNotXIndependent, Validation)
MEDGE_DEFINE_ERROR(UnsupportedOrder, Usage)
MEDGE_DEFINE_ERROR(DimensionMismatch, Usage)
MEDGE_DEFINE_ERROR(UnsupportedDimension, Usage)
MEDGE_DEFINE_ERROR(IndexOrder, Usage)
MEDGE_DEFINE_ERROR(DerivativeOrderUnavailable, Usage)
MEDGE_DEFINE_ERROR(InvalidConfig, Usage)
MEDGE_DEFINE_ERROR(NonPositiveError, Usage)
MEDGE_DEFINE_ERROR(TailMassExceeded, Numerical)
MEDGE_DEFINE_ERROR(QuadratureBudgetExceeded, Numerical)
MEDGE_DEFINE_ERROR(SeriesNotConverged, Numerical)

#undef MEDGE_DEFINE_ERROR

// Throws NonFiniteEvaluation naming `what` when v is NaN or infinite.
void require_finite(double v, const char* what);

}  // namespace medge
