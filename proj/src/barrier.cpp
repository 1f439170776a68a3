#include "twostate/barrier.hpp"

#include <cmath>
#include <string>

namespace twostate {

using nlohmann::json;

namespace {

constexpr int kGridSteps = 20;       // epsilon grid i / 20, i = 1..19
constexpr int kMaxHalvings = 50;

struct SetChoice {
  std::array<std::optional<ObservationSet>, 2> sets;
  std::array<std::optional<double>, 2> mass;

  double min_mass() const {
    double m = 1.0;
    for (const auto& x : mass)
      if (x) m = std::min(m, *x);
    return m;
  }
};

SetChoice sets_for(const TwoStateHmm& model, CaseLabel label, State target, double eps) {
  SetChoice c;
  auto put = [&](State s, double threshold) {
    c.sets[idx(s)] = log_ratio_set(model, s, threshold);
    c.mass[idx(s)] = c.sets[idx(s)]->mass(model.emission(s));
  };
  const State t = other(target);
  if (label == CaseLabel::case1) {
    put(target, model.log_p(t, t) - model.log_p(target, target) - std::log1p(-eps));
  } else {
    put(State::a, -std::log1p(-eps));
    put(State::b, -std::log1p(-eps));
  }
  return c;
}

double log_case_bound(const TwoStateHmm& model, CaseLabel label) {
  const double laa = model.log_p(State::a, State::a), lab = model.log_p(State::a, State::b);
  const double lba = model.log_p(State::b, State::a), lbb = model.log_p(State::b, State::b);
  return label == CaseLabel::case1 ? (lab + lba) - (laa + lbb) : (laa + lbb) - (lba + lab);
}

json mass_json(const std::optional<double>& m) { return m ? json(*m) : json(nullptr); }

}  // namespace

std::size_t minimal_repetitions(double log_factor, double log_bound) {
  if (!(log_factor < 0.0)) throw Error(ErrorCode::BadArgument, "repetition factor must be below 1");
  auto k = static_cast<std::size_t>(std::max(1.0, std::floor(log_bound / log_factor) - 1.0));
  while (k > 1 && compare_scores(static_cast<double>(k - 1) * log_factor, log_bound) < 0) --k;
  while (compare_scores(static_cast<double>(k) * log_factor, log_bound) >= 0) ++k;
  return k;
}

BarrierCertificate build_barrier_certificate(const TwoStateHmm& model, const BarrierOptions& options) {
  BarrierCertificate cert;
  cert.case_label = classify_case(model);
  cert.mass_threshold = options.mass_threshold;
  const State a = State::a, b = State::b;

  if (cert.case_label == CaseLabel::case3) {
    const auto& pi = model.stationary();
    cert.target = pi[0] >= pi[1] ? a : b;
    const State t = other(cert.target);
    const auto set = log_ratio_set(model, cert.target, safe_log(pi[idx(t)]) - safe_log(pi[idx(cert.target)]));
    const double mass = set.mass(model.emission(cert.target));
    if (!(mass > 0.0))
      throw Error(ErrorCode::MassThresholdUnreachable, "no observation favours the more likely state");
    cert.sets[idx(cert.target)] = set;
    cert.hit_mass[idx(cert.target)] = mass;
    cert.pattern = {cert.target};
    cert.length = 1;
    cert.threshold_met = mass >= options.mass_threshold;
    return cert;
  }

  if (cert.case_label == CaseLabel::case1) {
    cert.target = model.p(a, a) >= model.p(b, b) - kCaseTolerance ? a : b;
  } else {
    cert.target = model.p(b, a) >= model.p(a, b) - kCaseTolerance ? a : b;
  }

  std::optional<SetChoice> choice;
  if (options.epsilon) {
    const double eps = *options.epsilon;
    if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::BadArgument, "epsilon must lie in (0, 1)");
    auto c = sets_for(model, cert.case_label, cert.target, eps);
    if (!(c.min_mass() > 0.0))
      throw Error(ErrorCode::MassThresholdUnreachable, "epsilon " + std::to_string(eps) + " gives an empty set");
    cert.epsilon = eps;
    cert.threshold_met = c.min_mass() >= options.mass_threshold;
    choice = std::move(c);
  } else {
    std::optional<std::pair<double, SetChoice>> fallback;
    for (int i = kGridSteps - 1; i >= 1 && !choice; --i) {
      const double eps = static_cast<double>(i) / kGridSteps;
      auto c = sets_for(model, cert.case_label, cert.target, eps);
      const double m = c.min_mass();
      if (m >= options.mass_threshold) {
        cert.epsilon = eps;
        choice = std::move(c);
      } else if (m > 0.0 && !fallback) {
        fallback.emplace(eps, std::move(c));
      }
    }
    double eps = 1.0 / kGridSteps;
    for (int h = 0; h < kMaxHalvings && !choice && !fallback; ++h) {
      eps *= 0.5;
      auto c = sets_for(model, cert.case_label, cert.target, eps);
      if (c.min_mass() > 0.0) fallback.emplace(eps, std::move(c));
    }
    if (!choice) {
      if (!fallback)
        throw Error(ErrorCode::MassThresholdUnreachable, "no epsilon gives barrier sets of positive mass");
      cert.epsilon = fallback->first;
      cert.threshold_met = false;
      choice = std::move(fallback->second);
    }
  }

  cert.sets = std::move(choice->sets);
  cert.hit_mass = choice->mass;
  const double log_shrink = std::log1p(-cert.epsilon);
  const double bound = log_case_bound(model, cert.case_label);
  if (cert.case_label == CaseLabel::case1) {
    cert.k = minimal_repetitions(log_shrink, bound);
    cert.length = cert.k + 1;
    cert.pattern.assign(cert.length, cert.target);
  } else {
    cert.k = minimal_repetitions(2.0 * log_shrink, bound);
    cert.length = 2 * cert.k + 1;
    cert.pattern.resize(cert.length);
    for (std::size_t i = 0; i < cert.length; ++i)
      cert.pattern[i] = i % 2 == 0 ? cert.target : other(cert.target);
  }
  return cert;
}

bool verify_barrier(const TwoStateHmm& model, const BarrierCertificate& cert,
                    std::span<const Observation> window) {
  (void)model;
  if (window.size() != cert.length) {
    throw Error(ErrorCode::BadArgument, "window length " + std::to_string(window.size()) +
                                            " differs from certificate length " + std::to_string(cert.length));
  }
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (!cert.sets[idx(cert.pattern[i])]->contains(window[i])) return false;
  }
  return true;
}

std::vector<Observation> sample_barrier_window(const TwoStateHmm& model, const BarrierCertificate& cert,
                                               Rng& rng) {
  std::vector<Observation> out;
  out.reserve(cert.length);
  for (State s : cert.pattern) out.push_back(sample_in_set(model.emission(s), *cert.sets[idx(s)], rng));
  return out;
}

json BarrierCertificate::to_json(const TwoStateHmm& model) const {
  json out;
  out["case"] = case_name(case_label);
  out["target"] = std::string(1, to_char(target));
  out["epsilon"] = epsilon;
  out["k"] = k;
  out["length"] = length;
  std::string pat;
  for (State s : pattern) pat += to_char(s);
  out["pattern"] = pat;
  out["mass_threshold"] = mass_threshold;
  out["threshold_met"] = threshold_met;
  json sets_json = json::object();
  for (State s : kStates) {
    if (!sets[idx(s)]) continue;
    const std::string key(1, to_char(s));
    sets_json[key] = sets[idx(s)]->to_json(model);
    sets_json[key]["description"] = sets[idx(s)]->describe(model);
    sets_json[key]["hit_mass"] = mass_json(hit_mass[idx(s)]);
  }
  out["sets"] = sets_json;
  return out;
}

}  // namespace twostate
