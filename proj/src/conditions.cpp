#include "twostate/conditions.hpp"

#include <algorithm>

namespace twostate {

using nlohmann::json;

namespace {

bool positive(const TwoStateHmm& model, const ObservationSet& set, double mass) {
  // Gaussian densities are positive everywhere, so a nonempty open set has
  // positive mass even when the tail probability underflows.
  return model.categorical() ? mass > 0.0 : !set.empty();
}

ConditionEntry region(const TwoStateHmm& model, std::string name, std::string statement, State favoured,
                      double threshold, bool applicable) {
  ConditionEntry e;
  e.name = std::move(name);
  e.statement = std::move(statement);
  e.applicable = applicable;
  e.measure = favoured;
  e.set = log_ratio_set(model, favoured, threshold);
  e.mass = e.set.mass(model.emission(favoured));
  e.holds = positive(model, e.set, e.mass);
  return e;
}

ConditionEntry null_region(ConditionEntry positive_entry, std::string name, std::string statement) {
  positive_entry.name = std::move(name);
  positive_entry.statement = std::move(statement);
  positive_entry.holds = !positive_entry.holds;
  return positive_entry;
}

/// max over (i, j) of log(p_it p_tj) - log(p_is p_sj).
double length1_threshold(const TwoStateHmm& model, State s) {
  const State t = other(s);
  double worst = kNegInf;
  for (State i : kStates)
    for (State j : kStates)
      worst = std::max(worst, model.log_p(i, t) + model.log_p(t, j) - model.log_p(i, s) - model.log_p(s, j));
  return worst;
}

}  // namespace

const ConditionEntry& ConditionReport::at(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw Error(ErrorCode::BadArgument, "unknown condition " + std::string(name));
}

json ConditionReport::to_json(const TwoStateHmm& model) const {
  json out;
  out["case"] = case_name(case_label);
  out["some_state_dominates"] = some_state_dominates();
  json list = json::array();
  for (const auto& e : entries) {
    list.push_back({{"name", e.name},
                    {"statement", e.statement},
                    {"applicable", e.applicable},
                    {"holds", e.holds},
                    {"measure", std::string(1, to_char(e.measure))},
                    {"mass", e.mass},
                    {"set", e.set.to_json(model)}});
  }
  out["conditions"] = list;
  return out;
}

ConditionReport check_conditions(const TwoStateHmm& model) {
  using S = State;
  ConditionReport r;
  r.case_label = classify_case(model);
  const bool c1 = r.case_label == CaseLabel::case1;
  const bool c2 = r.case_label == CaseLabel::case2;
  const bool c3 = r.case_label == CaseLabel::case3;
  const double laa = model.log_p(S::a, S::a), lab = model.log_p(S::a, S::b);
  const double lba = model.log_p(S::b, S::a), lbb = model.log_p(S::b, S::b);
  const auto& pi = model.stationary();

  {
    ConditionEntry e;
    e.name = "distinguishable";
    e.statement = "lambda{f_a != f_b} > 0";
    const auto above = log_ratio_set(model, S::a, 0.0);
    const auto below = log_ratio_set(model, S::b, 0.0);
    e.set = above;
    e.measure = S::a;
    // Average of P_a and P_b over the disjoint pieces {f_a > f_b}, {f_b > f_a}.
    e.mass = 0.5 * (above.mass(model.emission(S::a)) + above.mass(model.emission(S::b)) +
                    below.mass(model.emission(S::a)) + below.mass(model.emission(S::b)));
    e.holds = positive(model, above, e.mass) || positive(model, below, e.mass);
    r.entries.push_back(std::move(e));
  }

  r.entries.push_back(region(model, "a_barrier_len1", "P_a{p_ia f_a p_aj > p_ib f_b p_bj, all i,j} > 0", S::a,
                             length1_threshold(model, S::a), true));
  r.entries.push_back(region(model, "b_barrier_len1", "P_b{p_ib f_b p_bj > p_ia f_a p_aj, all i,j} > 0", S::b,
                             length1_threshold(model, S::b), true));

  const double a_best = std::max(laa, lba);
  const double b_best = std::max(lbb, lab);
  r.entries.push_back(region(model, "a_dominant", "P_a{f_a max(p_aa,p_ba) > f_b max(p_bb,p_ab)} > 0", S::a,
                             b_best - a_best, true));
  r.entries.push_back(region(model, "b_dominant", "P_b{f_b max(p_bb,p_ab) > f_a max(p_aa,p_ba)} > 0", S::b,
                             a_best - b_best, true));

  auto a_stay = region(model, "a_stay_dominant", "P_a{f_a p_aa > f_b p_bb} > 0", S::a, lbb - laa, c1);
  auto b_stay = region(model, "b_stay_dominant", "P_b{f_b p_bb > f_a p_aa} > 0", S::b, laa - lbb, c1);
  r.entries.push_back(a_stay);
  r.entries.push_back(b_stay);
  r.entries.push_back(region(model, "a_switch_dominant", "P_a{f_a p_ba > f_b p_ab} > 0", S::a, lab - lba, c2));
  r.entries.push_back(region(model, "b_switch_dominant", "P_b{f_b p_ab > f_a p_ba} > 0", S::b, lba - lab, c2));
  const double lpa = safe_log(pi[0]), lpb = safe_log(pi[1]);
  r.entries.push_back(
      region(model, "a_mixture_dominant", "P_a{pi_a f_a > pi_b f_b} > 0", S::a, lpb - lpa, c3));
  r.entries.push_back(
      region(model, "b_mixture_dominant", "P_b{pi_b f_b > pi_a f_a} > 0", S::b, lpa - lpb, c3));
  r.entries.push_back(null_region(std::move(b_stay), "no_b_stay_region", "lambda{p_bb f_b > p_aa f_a} = 0"));
  r.entries.push_back(null_region(std::move(a_stay), "no_a_stay_region", "lambda{p_aa f_a > p_bb f_b} = 0"));
  return r;
}

}  // namespace twostate
