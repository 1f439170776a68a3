#include "twostate/viterbi.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

namespace twostate {

namespace {

void require_nonempty(std::span<const Observation> observations) {
  if (observations.empty()) throw Error(ErrorCode::EmptyLength, "observation sequence is empty");
}

void require_possible(const LogPair& delta, std::size_t time) {
  if (delta[0] == kNegInf && delta[1] == kNegInf) {
    throw Error(ErrorCode::ImpossibleObservation,
                "observation at time " + std::to_string(time) + " has zero density under every path");
  }
}

LogPair to_log(const std::array<double, 2>& initial) {
  if (!(initial[0] >= 0.0) || !(initial[1] >= 0.0) || std::abs(initial[0] + initial[1] - 1.0) > 1e-9)
    throw Error(ErrorCode::BadInitial, "initial distribution must be nonnegative and sum to 1");
  return {safe_log(initial[0]), safe_log(initial[1])};
}

}  // namespace

LogPair start_scores(const LogPair& log_initial, const LogPair& log_emit) {
  return {log_initial[0] + log_emit[0], log_initial[1] + log_emit[1]};
}

LogPair advance_scores(const TwoStateHmm& model, const LogPair& prev, const LogPair& log_emit,
                       BackpointerPair& back, double offset) {
  LogPair next{};
  for (State to : kStates) {
    const double via_a = prev[0] + model.log_p(State::a, to);
    const double via_b = prev[1] + model.log_p(State::b, to);
    const int cmp = compare_scores(via_a, via_b, offset);
    auto& bp = back[idx(to)];
    bp.from = cmp >= 0 ? State::a : State::b;
    bp.tie = cmp == 0;
    next[idx(to)] = std::max(via_a, via_b) + log_emit[idx(to)];
  }
  return next;
}

ForwardTrace score_forward(const TwoStateHmm& model, std::span<const Observation> observations,
                           const std::array<double, 2>& initial) {
  require_nonempty(observations);
  const LogPair log_initial = to_log(initial);
  ForwardTrace trace;
  trace.scores.reserve(observations.size());
  trace.backpointers.resize(observations.size());

  LogPair delta = start_scores(log_initial, model.log_emissions(observations[0]));
  require_possible(delta, 1);
  trace.scores.push_back({1, delta});
  for (std::size_t i = 1; i < observations.size(); ++i) {
    delta = advance_scores(model, delta, model.log_emissions(observations[i]), trace.backpointers[i]);
    require_possible(delta, i + 1);
    trace.scores.push_back({i + 1, delta});
  }
  return trace;
}

State best_terminal(const LogPair& log_delta, bool* tie, double offset) {
  const int cmp = compare_scores(log_delta[0], log_delta[1], offset);
  if (tie) *tie = cmp == 0;
  return cmp >= 0 ? State::a : State::b;
}

std::vector<State> backtrack(std::span<const BackpointerPair> backpointers, State terminal, bool* tie) {
  std::vector<State> states(backpointers.size());
  if (states.empty()) return states;
  bool any_tie = false;
  State s = terminal;
  for (std::size_t i = states.size(); i-- > 0;) {
    states[i] = s;
    if (i > 0) {
      const auto& bp = backpointers[i][idx(s)];
      any_tie = any_tie || bp.tie;
      s = bp.from;
    }
  }
  if (tie) *tie = any_tie;
  return states;
}

Alignment decode_batch(const TwoStateHmm& model, std::span<const Observation> observations) {
  const ForwardTrace trace = score_forward(model, observations, model.initial());
  const LogPair& last = trace.scores.back().log_delta;
  Alignment out;
  bool terminal_tie = false;
  const State terminal = best_terminal(last, &terminal_tie);
  bool path_tie = false;
  out.states = backtrack(trace.backpointers, terminal, &path_tie);
  out.log_likelihood = last[idx(terminal)];
  out.tie = terminal_tie || path_tie;
  return out;
}

double path_log_likelihood(const TwoStateHmm& model, std::span<const State> states,
                           std::span<const Observation> observations, const LogPair& log_initial) {
  require_nonempty(observations);
  if (states.size() != observations.size())
    throw Error(ErrorCode::BadArgument, "path and observation lengths differ");
  double score = log_initial[idx(states[0])] + model.emission(states[0]).log_density(observations[0]);
  for (std::size_t i = 1; i < states.size(); ++i) {
    score = score + model.log_p(states[i - 1], states[i]);
    score = score + model.emission(states[i]).log_density(observations[i]);
  }
  return score;
}

namespace {

void require_enumerable(std::span<const Observation> observations) {
  require_nonempty(observations);
  if (observations.size() > kBruteForceMaxLength) {
    throw Error(ErrorCode::TooLong, "exhaustive search supports at most " +
                                        std::to_string(kBruteForceMaxLength) + " observations, got " +
                                        std::to_string(observations.size()));
  }
}

/// Enumerates every path as a bit mask (bit i set means state b at position i)
/// and scores it left to right exactly as the recursion does.
class PathEnumerator {
 public:
  PathEnumerator(const TwoStateHmm& model, std::span<const Observation> observations,
                 const LogPair& log_initial)
      : model_(model), log_initial_(log_initial) {
    emit_.reserve(observations.size());
    for (Observation x : observations) emit_.push_back(model.log_emissions(x));
  }

  std::size_t length() const { return emit_.size(); }
  std::uint32_t count() const { return std::uint32_t{1} << emit_.size(); }

  static State at(std::uint32_t mask, std::size_t i) { return (mask >> i) & 1U ? State::b : State::a; }

  double score(std::uint32_t mask) const {
    State prev = at(mask, 0);
    double s = log_initial_[idx(prev)] + emit_[0][idx(prev)];
    for (std::size_t i = 1; i < emit_.size(); ++i) {
      const State cur = at(mask, i);
      s = s + model_.log_p(prev, cur);
      s = s + emit_[i][idx(cur)];
      prev = cur;
    }
    return s;
  }

 private:
  const TwoStateHmm& model_;
  LogPair log_initial_;
  std::vector<LogPair> emit_;
};

}  // namespace

double brute_force_max(const TwoStateHmm& model, std::span<const Observation> observations,
                       const LogPair& log_initial, std::optional<State> end_state) {
  require_enumerable(observations);
  const PathEnumerator paths(model, observations, log_initial);
  double best = kNegInf;
  for (std::uint32_t mask = 0; mask < paths.count(); ++mask) {
    if (end_state && PathEnumerator::at(mask, paths.length() - 1) != *end_state) continue;
    best = std::max(best, paths.score(mask));
  }
  return best;
}

Alignment brute_force_alignment(const TwoStateHmm& model, std::span<const Observation> observations,
                                const LogPair& log_initial) {
  require_enumerable(observations);
  const PathEnumerator paths(model, observations, log_initial);
  double best = kNegInf;
  for (std::uint32_t mask = 0; mask < paths.count(); ++mask) best = std::max(best, paths.score(mask));
  if (best == kNegInf) {
    throw Error(ErrorCode::ImpossibleObservation, "every path has zero likelihood");
  }

  // Smallest mask among the maximizers: position n-1 is the most significant
  // bit, so this is the path that prefers a from the last position backwards.
  Alignment out;
  std::size_t maximizers = 0;
  std::uint32_t chosen = 0;
  for (std::uint32_t mask = 0; mask < paths.count(); ++mask) {
    const double s = paths.score(mask);
    if (!is_tie(s, best)) continue;
    if (maximizers++ == 0) {
      chosen = mask;
      out.log_likelihood = s;
    }
  }
  out.states.resize(paths.length());
  for (std::size_t i = 0; i < paths.length(); ++i) out.states[i] = PathEnumerator::at(chosen, i);
  out.tie = maximizers > 1;
  return out;
}

Alignment decode_brute_force(const TwoStateHmm& model, std::span<const Observation> observations) {
  return brute_force_alignment(model, observations, model.log_initial());
}

bool decomposition_check(const TwoStateHmm& model, std::span<const Observation> observations,
                         std::size_t split) {
  if (split < 1 || split >= observations.size())
    throw Error(ErrorCode::BadArgument, "split must satisfy 1 <= u < n");
  const double direct = brute_force_max(model, observations, model.log_initial());
  const auto prefix = observations.first(split);
  const auto suffix = observations.subspan(split);
  double decomposed = kNegInf;
  for (State l : kStates) {
    const double delta = brute_force_max(model, prefix, model.log_initial(), l);
    const double rest = brute_force_max(model, suffix, model.log_row(l));
    decomposed = std::max(decomposed, delta + rest);
  }
  return close_relative(direct, decomposed, 1e-9);
}

}  // namespace twostate
