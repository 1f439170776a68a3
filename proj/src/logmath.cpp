#include "twostate/logmath.hpp"

#include <algorithm>

#include "twostate/errors.hpp"

namespace twostate {

int compare_scores(double x, double y, double offset) {
  if (x == y) return 0;  // also covers -inf == -inf
  if (std::isinf(x) || std::isinf(y)) return x > y ? 1 : -1;
  const double scale = std::max({1.0, std::abs(x + offset), std::abs(y + offset)});
  const double diff = x - y;
  if (std::abs(diff) <= kTieTolerance * scale) return 0;
  return diff > 0.0 ? 1 : -1;
}

bool close_relative(double x, double y, double rel) {
  if (x == y) return true;
  if (std::isinf(x) || std::isinf(y) || std::isnan(x) || std::isnan(y)) return false;
  return std::abs(x - y) <= rel * std::max({1.0, std::abs(x), std::abs(y)});
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveTransition: return "NonPositiveTransition";
    case ErrorCode::RowSumViolation: return "RowSumViolation";
    case ErrorCode::BadInitial: return "BadInitial";
    case ErrorCode::BadEmission: return "BadEmission";
    case ErrorCode::IndistinguishableEmissions: return "IndistinguishableEmissions";
    case ErrorCode::EmptyLength: return "EmptyLength";
    case ErrorCode::ImpossibleObservation: return "ImpossibleObservation";
    case ErrorCode::TooLong: return "TooLong";
    case ErrorCode::EmptyBuffer: return "EmptyBuffer";
    case ErrorCode::Finalized: return "Finalized";
    case ErrorCode::MassThresholdUnreachable: return "MassThresholdUnreachable";
    case ErrorCode::BadObservation: return "BadObservation";
    case ErrorCode::BadPlan: return "BadPlan";
    case ErrorCode::BadArgument: return "BadArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorCategory error_category(ErrorCode code) {
  return code == ErrorCode::Io ? ErrorCategory::io : ErrorCategory::validation;
}

namespace {

std::string join_violations(const std::vector<Violation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += std::string(error_code_name(v.code)) + ": " + v.detail;
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(violations.empty() ? ErrorCode::BadArgument : violations.front().code,
            join_violations(violations)),
      violations_(std::move(violations)) {}

bool ValidationError::has(ErrorCode code) const {
  return std::any_of(violations_.begin(), violations_.end(),
                     [code](const Violation& v) { return v.code == code; });
}

}  // namespace twostate
