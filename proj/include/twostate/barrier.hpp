#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "twostate/observation_set.hpp"

namespace twostate {

/// A block pattern of observation sets such that every window drawn from it,
/// after any prefix, contains a strong node of the target state.
///
/// case1: k + 1 consecutive members of X_s, where
///        X_s = {x : f_t(x) p_tt / (f_s(x) p_ss) < 1 - eps} and k is minimal
///        with (1 - eps)^k < p_ab p_ba / (p_aa p_bb). Target s has the larger
///        self-transition probability.
/// case2: alternating X_s, X_t, ..., X_s of length 2k + 1 with
///        X_a = {f_a (1 - eps) > f_b}, X_b = {f_a < f_b (1 - eps)} and k minimal
///        with (1 - eps)^(2k) < p_aa p_bb / (p_ba p_ab). Target s = a when
///        p_ba >= p_ab, else b.
/// case3: a single member of {pi_s f_s > pi_t f_t}, pi_s = max(pi_a, pi_b);
///        epsilon and k are zero.
struct BarrierCertificate {
  CaseLabel case_label = CaseLabel::case1;
  State target = State::a;
  double epsilon = 0.0;
  std::size_t k = 0;
  std::size_t length = 1;
  /// sets[l] describes X_l; only the states that occur in `pattern` are set.
  std::array<std::optional<ObservationSet>, 2> sets;
  /// hit_mass[l] = P_l(X_l) for the sets in use.
  std::array<std::optional<double>, 2> hit_mass;
  /// pattern[i] names the set window position i must fall in.
  std::vector<State> pattern;
  double mass_threshold = 0.1;
  bool threshold_met = true;

  nlohmann::json to_json(const TwoStateHmm& model) const;
};

struct BarrierOptions {
  double mass_threshold = 0.1;
  /// Fixes epsilon instead of searching the grid {0.05, 0.10, ..., 0.95}.
  std::optional<double> epsilon;
};

/// Picks the largest grid epsilon whose set masses all reach the threshold;
/// failing that, the largest epsilon (grid, then halving below 0.05) with
/// positive mass. Throws MassThresholdUnreachable if no such epsilon exists.
BarrierCertificate build_barrier_certificate(const TwoStateHmm& model, const BarrierOptions& options = {});

/// Whether every window element lies in its prescribed set, in order.
bool verify_barrier(const TwoStateHmm& model, const BarrierCertificate& cert,
                    std::span<const Observation> window);

/// Draws a window satisfying the certificate, each element from the emission
/// of its pattern state conditioned on the prescribed set.
std::vector<Observation> sample_barrier_window(const TwoStateHmm& model, const BarrierCertificate& cert,
                                               Rng& rng);

/// Smallest k >= 1 with k * log_factor < log_bound, strictly beyond round-off.
std::size_t minimal_repetitions(double log_factor, double log_bound);

}  // namespace twostate
