#include "twostate/model.hpp"

#include <cmath>
#include <string>

namespace twostate {

namespace {

constexpr double kRowTolerance = 1e-9;

std::string state_label(std::size_t i) { return i == 0 ? "a" : "b"; }

}  // namespace

std::string_view case_name(CaseLabel label) {
  switch (label) {
    case CaseLabel::case1: return "case1";
    case CaseLabel::case2: return "case2";
    case CaseLabel::case3: return "case3";
  }
  return "unknown";
}

std::array<double, 2> stationary(const TransitionMatrix& t) {
  // pi_a p_ab = pi_b p_ba for any two-state chain.
  const double ab = t[0][1];
  const double ba = t[1][0];
  const double pa = ba / (ab + ba);
  return {pa, 1.0 - pa};
}

TwoStateHmm::TwoStateHmm(RawModel raw) : raw_(std::move(raw)) {
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) log_transitions_[i][j] = std::log(raw_.transitions[i][j]);
  stationary_ = twostate::stationary(raw_.transitions);
  initial_ = raw_.initial.value_or(stationary_);
}

TwoStateHmm validate_model(const RawModel& raw) {
  std::vector<Violation> violations;

  for (std::size_t i = 0; i < 2; ++i) {
    const auto& row = raw.transitions[i];
    for (std::size_t j = 0; j < 2; ++j) {
      if (!(row[j] > 0.0) || !std::isfinite(row[j])) {
        violations.push_back({ErrorCode::NonPositiveTransition,
                              "p_" + state_label(i) + state_label(j) + " = " +
                                  std::to_string(row[j]) + " is not positive"});
      }
    }
    if (!(std::abs(row[0] + row[1] - 1.0) <= kRowTolerance)) {
      violations.push_back({ErrorCode::RowSumViolation,
                            "row " + state_label(i) + " sums to " + std::to_string(row[0] + row[1])});
    }
  }

  if (raw.initial) {
    const auto& q = *raw.initial;
    if (!(q[0] >= 0.0) || !(q[1] >= 0.0) || !(std::abs(q[0] + q[1] - 1.0) <= kRowTolerance)) {
      violations.push_back({ErrorCode::BadInitial,
                            "initial distribution must be nonnegative and sum to 1"});
    }
  }

  bool emissions_ok = true;
  for (State s : kStates) {
    const auto& e = s == State::a ? raw.emit_a : raw.emit_b;
    for (auto& problem : e.problems()) {
      emissions_ok = false;
      violations.push_back({ErrorCode::BadEmission, std::string("emission ") + to_char(s) + ": " + problem});
    }
  }
  if (raw.emit_a.is_categorical() != raw.emit_b.is_categorical()) {
    emissions_ok = false;
    violations.push_back({ErrorCode::BadEmission, "emissions of a and b must use the same family"});
  } else if (raw.emit_a.is_categorical() &&
             raw.emit_a.categorical_params().alphabet != raw.emit_b.categorical_params().alphabet) {
    emissions_ok = false;
    violations.push_back({ErrorCode::BadEmission, "emissions of a and b must share one alphabet"});
  }
  if (emissions_ok && !emissions_distinguishable(raw.emit_a, raw.emit_b)) {
    violations.push_back({ErrorCode::IndistinguishableEmissions,
                          "f_a and f_b coincide; the hidden state is not identifiable"});
  }

  if (!violations.empty()) throw ValidationError(std::move(violations));
  return TwoStateHmm(raw);
}

CaseLabel classify_case(const TwoStateHmm& model) {
  const double diff = model.p(State::a, State::a) - model.p(State::b, State::a);
  if (diff > kCaseTolerance) return CaseLabel::case1;
  if (-diff > kCaseTolerance) return CaseLabel::case2;
  return CaseLabel::case3;
}

}  // namespace twostate
