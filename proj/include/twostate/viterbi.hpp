#pragma once

#include <optional>
#include <span>
#include <vector>

#include "twostate/model.hpp"

namespace twostate {

/// Log-domain scores (log delta_u(a), log delta_u(b)) at 1-based time u.
struct ScorePair {
  std::size_t time = 0;
  LogPair log_delta{kNegInf, kNegInf};

  double operator[](State s) const { return log_delta[idx(s)]; }
};

/// Argmax predecessor of one state, and whether the two candidates tied.
struct Backpointer {
  State from = State::a;
  bool tie = false;
};

using BackpointerPair = std::array<Backpointer, 2>;

/// Scores for time 1: log initial + log f(x_1).
LogPair start_scores(const LogPair& log_initial, const LogPair& log_emit);

/// One step of the max-plus recursion. Writes the per-state argmax predecessor
/// (ties toward a) into `back`. `offset` is forwarded to compare_scores.
LogPair advance_scores(const TwoStateHmm& model, const LogPair& prev, const LogPair& log_emit,
                       BackpointerPair& back, double offset = 0.0);

struct ForwardTrace {
  std::vector<ScorePair> scores;  // scores[i] is time i + 1
  /// backpointers[i] points from time i + 1 to time i; backpointers[0] is unused.
  std::vector<BackpointerPair> backpointers;
};

/// Runs the recursion over `observations` from the given initial distribution
/// (probabilities, not logs). Throws ImpossibleObservation when both scores
/// become -inf.
ForwardTrace score_forward(const TwoStateHmm& model, std::span<const Observation> observations,
                           const std::array<double, 2>& initial);

/// Terminal state choice: a unless b wins beyond round-off.
State best_terminal(const LogPair& log_delta, bool* tie = nullptr, double offset = 0.0);

/// Follows backpointers from `terminal` at the last entry down to the first.
/// Returns states in time order and sets `*tie` if any followed pointer tied.
std::vector<State> backtrack(std::span<const BackpointerPair> backpointers, State terminal,
                             bool* tie = nullptr);

struct Alignment {
  std::vector<State> states;
  double log_likelihood = kNegInf;
  /// A maximizer was chosen by the tie-break rule somewhere along the path.
  bool tie = false;
};

/// Viterbi alignment. Among maximizers returns the one preferring a at the
/// terminal state and at every backpointer, which is the maximizer that is
/// smallest when paths are compared from the last position backwards (a < b).
Alignment decode_batch(const TwoStateHmm& model, std::span<const Observation> observations);

/// log Lambda of a path, summed left to right in the same order as the recursion.
double path_log_likelihood(const TwoStateHmm& model, std::span<const State> states,
                           std::span<const Observation> observations, const LogPair& log_initial);

inline constexpr std::size_t kBruteForceMaxLength = 24;

/// Exhaustive maximizer over all 2^n paths with the same canonical tie-break.
/// Throws TooLong for n > 24 and EmptyLength for n = 0.
Alignment decode_brute_force(const TwoStateHmm& model, std::span<const Observation> observations);
Alignment brute_force_alignment(const TwoStateHmm& model, std::span<const Observation> observations,
                                const LogPair& log_initial);

/// max over paths of log Lambda with the given initial; with `end_state` only
/// paths finishing in that state count (this is log delta_n(end_state)).
double brute_force_max(const TwoStateHmm& model, std::span<const Observation> observations,
                       const LogPair& log_initial, std::optional<State> end_state = std::nullopt);

/// Checks max Lambda = max_l [delta_u(l) * max suffix Lambda started from
/// row (p_{l.})], both sides by enumeration, within 1e-9 relative (log domain).
bool decomposition_check(const TwoStateHmm& model, std::span<const Observation> observations,
                         std::size_t split);

}  // namespace twostate
