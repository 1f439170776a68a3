#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "twostate/model.hpp"

namespace twostate {

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
  double lo;
  double hi;
};

/// A measurable subset of the observation space: an explicit symbol subset for
/// categorical models, a finite union of open intervals for Gaussian ones.
class ObservationSet {
 public:
  static ObservationSet symbols(std::vector<std::size_t> indices);
  static ObservationSet intervals(std::vector<Interval> parts);

  bool categorical() const { return categorical_; }
  const std::vector<std::size_t>& symbol_indices() const { return symbols_; }
  const std::vector<Interval>& interval_parts() const { return intervals_; }
  bool empty() const { return categorical_ ? symbols_.empty() : intervals_.empty(); }

  bool contains(Observation x) const;
  /// Probability of the set under one emission distribution.
  double mass(const EmissionModel& emission) const;

  nlohmann::json to_json(const TwoStateHmm& model) const;
  std::string describe(const TwoStateHmm& model) const;

 private:
  bool categorical_ = true;
  std::vector<std::size_t> symbols_;
  std::vector<Interval> intervals_;
};

/// {x : log f_s(x) - log f_t(x) > threshold}, t the other state, with the
/// strict inequality demanded beyond round-off. Points where both densities
/// vanish never belong to the set.
ObservationSet log_ratio_set(const TwoStateHmm& model, State favoured, double threshold);

/// Standard normal CDF via erfc.
double normal_cdf(double z);

/// Draws from `emission` conditioned on the set: renormalised weights for
/// categorical sets; for Gaussian sets plain rejection when the set mass is at
/// least 0.01, else an exact truncated-normal draw on an interval picked by
/// mass. Throws BadArgument if the set has no mass under `emission`.
Observation sample_in_set(const EmissionModel& emission, const ObservationSet& set, Rng& rng);

}  // namespace twostate
