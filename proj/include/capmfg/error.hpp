#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace capmfg {

enum class ErrorKind {
  // numerics
  SingularMatrix,
  NoStabilizingSolution,
  NotConverged,
  StepSizeTooLarge,
  EigenFailure,
  DimensionMismatch,
  // micro
  InvalidIncidence,
  Infeasible,
  EnumerationGuard,
  NotComparable,
  // dynamics / sim
  MaxStepsExceeded,
  Diverged,
  InvalidParams,
  // configuration and I/O
  ParseError,
  ValidationError,
  IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Broad category used by the CLI to pick an exit code.
enum class ErrorCategory { Config, Numerical, Io };

ErrorCategory category_of(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  ErrorCategory category() const noexcept { return category_of(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace capmfg
