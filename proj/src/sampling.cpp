#include "twostate/sampling.hpp"

#include <algorithm>
#include <string>

namespace twostate {

namespace {

State draw_state(Rng& rng, double prob_a) { return rng.uniform() < prob_a ? State::a : State::b; }

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

TransitionMatrix random_transitions(Rng& rng, CaseLabel label) {
  if (label == CaseLabel::case3) {
    const double q = uniform_in(rng, 0.1, 0.9);
    return {{{q, 1.0 - q}, {q, 1.0 - q}}};
  }
  double hi = 0.0;
  double lo = 0.0;
  do {
    const double x = uniform_in(rng, 0.05, 0.95);
    const double y = uniform_in(rng, 0.05, 0.95);
    hi = std::max(x, y);
    lo = std::min(x, y);
  } while (hi - lo < 0.02);
  // case1: p_aa > p_ba; case2: p_aa < p_ba.
  const double p_aa = label == CaseLabel::case1 ? hi : lo;
  const double p_ba = label == CaseLabel::case1 ? lo : hi;
  return {{{p_aa, 1.0 - p_aa}, {p_ba, 1.0 - p_ba}}};
}

std::vector<double> random_probs(Rng& rng, std::size_t k, double zero_rate) {
  std::vector<double> w(k);
  for (auto& x : w) x = uniform_in(rng, 0.05, 1.0);
  if (rng.uniform() < zero_rate) w[rng.below(k)] = 0.0;
  double sum = 0.0;
  for (double x : w) sum += x;
  for (auto& x : w) x /= sum;
  return w;
}

}  // namespace

Realization sample_realization(const TwoStateHmm& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::EmptyLength, "realization length must be at least 1");
  Rng rng(seed);
  return sample_realization(model, n, rng);
}

Realization sample_realization(const TwoStateHmm& model, std::size_t n, Rng& rng,
                               std::optional<State> after) {
  Realization out;
  out.states.reserve(n);
  out.observations.reserve(n);
  std::optional<State> prev = after;
  for (std::size_t i = 0; i < n; ++i) {
    const double prob_a = prev ? model.p(*prev, State::a) : model.initial()[0];
    const State s = draw_state(rng, prob_a);
    out.states.push_back(s);
    out.observations.push_back(model.emission(s).sample(rng));
    prev = s;
  }
  return out;
}

std::vector<Observation> sample_arbitrary(const TwoStateHmm& model, std::size_t n, Rng& rng) {
  std::vector<Observation> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const State s = draw_state(rng, 0.5);
    out.push_back(model.emission(s).sample(rng));
  }
  return out;
}

TwoStateHmm random_model(Rng& rng, const RandomModelOptions& options) {
  for (;;) {
    RawModel raw;
    const CaseLabel label =
        options.case_label.value_or(static_cast<CaseLabel>(rng.below(3)));
    raw.transitions = random_transitions(rng, label);

    bool categorical = options.family == FamilyChoice::categorical;
    if (options.family == FamilyChoice::any) categorical = rng.uniform() < 0.5;
    if (categorical) {
      const std::size_t k = 2 + rng.below(3);
      std::vector<std::string> alphabet;
      for (std::size_t i = 0; i < k; ++i) alphabet.push_back("s" + std::to_string(i));
      raw.emit_a = EmissionModel::categorical(alphabet, random_probs(rng, k, options.zero_prob_rate));
      raw.emit_b = EmissionModel::categorical(alphabet, random_probs(rng, k, options.zero_prob_rate));
    } else {
      const double mean_a = uniform_in(rng, -2.0, 2.0);
      const double mean_b = uniform_in(rng, -2.0, 2.0);
      double var_a = uniform_in(rng, 0.25, 4.0);
      double var_b = uniform_in(rng, 0.25, 4.0);
      if (rng.uniform() < 0.5) var_b = var_a;
      raw.emit_a = EmissionModel::gaussian(mean_a, var_a);
      raw.emit_b = EmissionModel::gaussian(mean_b, var_b);
    }
    if (rng.uniform() < options.explicit_initial_rate) {
      const double q = rng.uniform();
      raw.initial = std::array<double, 2>{q, 1.0 - q};
    }
    if (!emissions_distinguishable(raw.emit_a, raw.emit_b)) continue;
    return validate_model(raw);
  }
}

}  // namespace twostate
