#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace twostate {

enum class State : std::uint8_t { a = 0, b = 1 };

inline constexpr std::array<State, 2> kStates{State::a, State::b};

constexpr std::size_t idx(State s) { return static_cast<std::size_t>(s); }
constexpr State other(State s) { return s == State::a ? State::b : State::a; }
constexpr char to_char(State s) { return s == State::a ? 'a' : 'b'; }

/// Pair of log-domain quantities indexed by hidden state.
using LogPair = std::array<double, 2>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Relative tolerance below which two log-domain scores are treated as tied.
/// Scaled by max(1, |x|, |y|), so it acts as an absolute tolerance for scores
/// of magnitude below one.
inline constexpr double kTieTolerance = 1e-12;

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

/// Three-way comparison of log scores: +1 if x beats y beyond round-off, -1 if
/// y beats x, 0 on a tie. `offset` is a log-score common to both arguments that
/// was subtracted out (the streaming decoder rebases its scores); it only
/// enters the tolerance scale so rebased and absolute scores agree on ties.
int compare_scores(double x, double y, double offset = 0.0);

inline bool is_tie(double x, double y, double offset = 0.0) {
  return compare_scores(x, y, offset) == 0;
}

/// Relative closeness used for likelihood cross-checks (1e-9 in tests).
bool close_relative(double x, double y, double rel);

}  // namespace twostate
