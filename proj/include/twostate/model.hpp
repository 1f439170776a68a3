#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "twostate/emission.hpp"
#include "twostate/errors.hpp"
#include "twostate/logmath.hpp"

namespace twostate {

using TransitionMatrix = std::array<std::array<double, 2>, 2>;

/// Unvalidated model description, as read from a model file.
struct RawModel {
  TransitionMatrix transitions{};
  /// Empty means "start from the stationary distribution".
  std::optional<std::array<double, 2>> initial;
  EmissionModel emit_a = EmissionModel::gaussian(0.0, 1.0);
  EmissionModel emit_b = EmissionModel::gaussian(1.0, 1.0);
};

enum class CaseLabel { case1, case2, case3 };

std::string_view case_name(CaseLabel label);

/// Absolute tolerance for deciding p_aa == p_ba.
inline constexpr double kCaseTolerance = 1e-12;

/// A validated two-state HMM. Immutable; obtain one through validate_model.
class TwoStateHmm {
 public:
  double p(State from, State to) const { return raw_.transitions[idx(from)][idx(to)]; }
  double log_p(State from, State to) const { return log_transitions_[idx(from)][idx(to)]; }
  const TransitionMatrix& transitions() const { return raw_.transitions; }

  /// Distribution of the first hidden state (stationary unless set explicitly).
  const std::array<double, 2>& initial() const { return initial_; }
  LogPair log_initial() const { return {safe_log(initial_[0]), safe_log(initial_[1])}; }
  bool stationary_start() const { return !raw_.initial.has_value(); }
  const std::array<double, 2>& stationary() const { return stationary_; }

  /// Row (p_{s.}) as a log initial distribution, used after a reset at an s-node.
  LogPair log_row(State s) const { return log_transitions_[idx(s)]; }

  const EmissionModel& emission(State s) const { return s == State::a ? raw_.emit_a : raw_.emit_b; }
  bool categorical() const { return raw_.emit_a.is_categorical(); }
  LogPair log_emissions(Observation x) const {
    return {raw_.emit_a.log_density(x), raw_.emit_b.log_density(x)};
  }

  const RawModel& raw() const { return raw_; }

 private:
  friend TwoStateHmm validate_model(const RawModel& raw);
  explicit TwoStateHmm(RawModel raw);

  RawModel raw_;
  std::array<LogPair, 2> log_transitions_{};
  std::array<double, 2> stationary_{};
  std::array<double, 2> initial_{};
};

/// Checks every model invariant and throws ValidationError listing all of the
/// violations when any fails.
TwoStateHmm validate_model(const RawModel& raw);

/// Stationary distribution pi = pi P of the transition matrix.
std::array<double, 2> stationary(const TransitionMatrix& transitions);
inline std::array<double, 2> stationary(const TwoStateHmm& model) { return model.stationary(); }

CaseLabel classify_case(const TwoStateHmm& model);

}  // namespace twostate
