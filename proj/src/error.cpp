#include "capmfg/error.hpp"

namespace capmfg {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::StepSizeTooLarge: return "StepSizeTooLarge";
    case ErrorKind::EigenFailure: return "EigenFailure";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidIncidence: return "InvalidIncidence";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::EnumerationGuard: return "EnumerationGuard";
    case ErrorKind::NotComparable: return "NotComparable";
    case ErrorKind::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidIncidence:
    case ErrorKind::InvalidParams:
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::EnumerationGuard:
      return ErrorCategory::Config;
    case ErrorKind::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Numerical;
  }
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error("[" + std::string(to_string(kind)) + "] " + message), kind_(kind) {}

}  // namespace capmfg
