#pragma once

#include <stdexcept>
#include <string>

namespace oic {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define OIC_DECLARE_ERROR(Name)                                                \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}       \
  }

OIC_DECLARE_ERROR(InvalidArgument);
OIC_DECLARE_ERROR(InvalidDataset);
OIC_DECLARE_ERROR(NonFiniteCost);
OIC_DECLARE_ERROR(NonFiniteGradient);
OIC_DECLARE_ERROR(RowMismatch);
OIC_DECLARE_ERROR(SingularJacobian);
OIC_DECLARE_ERROR(SingularHessian);
OIC_DECLARE_ERROR(SingularDesign);
OIC_DECLARE_ERROR(SingularInnerHessian);
OIC_DECLARE_ERROR(NotAtOptimum);
OIC_DECLARE_ERROR(LICQViolation);
OIC_DECLARE_ERROR(NegativeMultiplier);
OIC_DECLARE_ERROR(ModelEvalFailure);
OIC_DECLARE_ERROR(MissingCovariates);
OIC_DECLARE_ERROR(FitFailure);
OIC_DECLARE_ERROR(MaxIterExceeded);
OIC_DECLARE_ERROR(AscentDetected);
OIC_DECLARE_ERROR(DualDegenerate);
OIC_DECLARE_ERROR(InfeasibleStart);
OIC_DECLARE_ERROR(KKTFailure);
OIC_DECLARE_ERROR(DegenerateSample);
OIC_DECLARE_ERROR(ConfigError);
OIC_DECLARE_ERROR(IoError);

#undef OIC_DECLARE_ERROR

} // namespace oic
