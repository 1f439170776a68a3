#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twostate/observation_set.hpp"

namespace twostate {

/// One distribution-level condition on the model: a set of observations and
/// whether its probability under the named emission is positive (or, for the
/// "no_*" entries, zero).
struct ConditionEntry {
  std::string name;
  std::string statement;  // the inequality, human readable
  bool applicable = true; // relevant for the model's case
  bool holds = false;
  State measure = State::a;  // the mass is P_measure(set)
  double mass = 0.0;
  ObservationSet set;
};

struct ConditionReport {
  CaseLabel case_label = CaseLabel::case1;
  std::vector<ConditionEntry> entries;

  const ConditionEntry& at(std::string_view name) const;
  bool holds(std::string_view name) const { return at(name).holds; }
  /// At least one of a_dominant / b_dominant holds (true for every valid model).
  bool some_state_dominates() const { return holds("a_dominant") || holds("b_dominant"); }

  nlohmann::json to_json(const TwoStateHmm& model) const;
};

/// Evaluates, exactly for categorical emissions and in closed form for
/// Gaussian ones:
///   distinguishable     lambda{f_a != f_b} > 0
///   a_barrier_len1      P_a{p_ia f_a p_aj > p_ib f_b p_bj for all i,j} > 0   (b mirrored)
///   a_dominant          P_a{f_a max(p_aa,p_ba) > f_b max(p_bb,p_ab)} > 0    (b mirrored)
///   a_stay_dominant     P_a{f_a p_aa > f_b p_bb} > 0                         (case 1)
///   a_switch_dominant   P_a{f_a p_ba > f_b p_ab} > 0                         (case 2)
///   a_mixture_dominant  P_a{pi_a f_a > pi_b f_b} > 0                         (case 3)
///   no_b_stay_region    lambda{p_bb f_b > p_aa f_a} = 0                      (case 1)
/// and the b-side counterparts of each.
ConditionReport check_conditions(const TwoStateHmm& model);

}  // namespace twostate
