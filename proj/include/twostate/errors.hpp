#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace twostate {

enum class ErrorCode {
  NonPositiveTransition,
  RowSumViolation,
  BadInitial,
  BadEmission,
  IndistinguishableEmissions,
  EmptyLength,
  ImpossibleObservation,
  TooLong,
  EmptyBuffer,
  Finalized,
  MassThresholdUnreachable,
  BadObservation,
  BadPlan,
  BadArgument,
  Io,
};

std::string_view error_code_name(ErrorCode code);

/// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorCategory { validation, io };

ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct Violation {
  ErrorCode code;
  std::string detail;
};

/// Raised by model validation; carries every violated invariant, not just the
/// first one found. code() reports the first violation.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);

  const std::vector<Violation>& violations() const noexcept { return violations_; }
  bool has(ErrorCode code) const;

 private:
  std::vector<Violation> violations_;
};

}  // namespace twostate
