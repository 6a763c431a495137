#pragma once

#include <stdexcept>
#include <string>

namespace foliate {

// Coarse failure categories, mapped to CLI exit codes:
// Validation -> 2, Numerical -> 3, Io -> 3.
enum class ErrorKind { Validation, Numerical, Io };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), kind_(kind), name_(std::move(name)) {}
  ErrorKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

private:
  ErrorKind kind_;
  std::string name_;
};

#define FOLIATE_ERROR(NAME, KIND)                                   \
  class NAME : public Error {                                       \
  public:                                                           \
    explicit NAME(const std::string& what)                          \
        : Error(ErrorKind::KIND, #NAME, what) {}                    \
  };

FOLIATE_ERROR(UnknownMetric, Validation)
FOLIATE_ERROR(OutOfChart, Validation)
FOLIATE_ERROR(OrderUnsupported, Validation)
FOLIATE_ERROR(JetOrderTooLow, Validation)
FOLIATE_ERROR(DegenerateMetric, Numerical)
FOLIATE_ERROR(NoConvergence, Numerical)
FOLIATE_ERROR(DegenerateHessian, Numerical)
FOLIATE_ERROR(LeftChart, Numerical)
FOLIATE_ERROR(IntegratorFailure, Numerical)
FOLIATE_ERROR(OutOfNormalNeighborhood, Numerical)
FOLIATE_ERROR(LTooSmall, Validation)
FOLIATE_ERROR(ShapeMismatch, Validation)
FOLIATE_ERROR(KernelComponent, Validation)
FOLIATE_ERROR(GraphDegenerate, Numerical)
FOLIATE_ERROR(SingularJacobian, Numerical)
FOLIATE_ERROR(OutOfRange, Validation)
FOLIATE_ERROR(AreaOutOfRange, Validation)
FOLIATE_ERROR(MonotonicityViolation, Numerical)
FOLIATE_ERROR(LogMapFailure, Numerical)
FOLIATE_ERROR(BetaNotInvertible, Numerical)
FOLIATE_ERROR(InsufficientLeaves, Validation)
FOLIATE_ERROR(IoError, Io)
FOLIATE_ERROR(ConfigError, Validation)

#undef FOLIATE_ERROR

} // namespace foliate
