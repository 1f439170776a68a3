#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "twostate/model.hpp"
#include "twostate/rng.hpp"

namespace twostate {

struct Realization {
  std::vector<State> states;
  std::vector<Observation> observations;
};

/// Draws (Y_{1:n}, X_{1:n}). Per time step the generator is consumed in a fixed
/// order: one uniform for the hidden state, then the emission draw.
Realization sample_realization(const TwoStateHmm& model, std::size_t n, std::uint64_t seed);

/// Continues from `rng`; with `after` set, the chain starts from row p_{after,.}
/// instead of the initial distribution.
Realization sample_realization(const TwoStateHmm& model, std::size_t n, Rng& rng,
                               std::optional<State> after = std::nullopt);

/// Observations emitted from independently, uniformly chosen hidden states.
/// Used as "arbitrary" continuations and prefixes in property checks.
std::vector<Observation> sample_arbitrary(const TwoStateHmm& model, std::size_t n, Rng& rng);

enum class FamilyChoice { any, categorical, gaussian };

struct RandomModelOptions {
  FamilyChoice family = FamilyChoice::any;
  std::optional<CaseLabel> case_label;  // empty: uniform over the three cases
  double explicit_initial_rate = 0.2;
  double zero_prob_rate = 0.15;  // chance of a zero entry per categorical emission
};

/// Random valid model spanning the requested cases and emission families.
TwoStateHmm random_model(Rng& rng, const RandomModelOptions& options = {});

}  // namespace twostate
