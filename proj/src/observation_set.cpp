#include "twostate/observation_set.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "twostate/model_io.hpp"

namespace twostate {

using nlohmann::json;

ObservationSet ObservationSet::symbols(std::vector<std::size_t> indices) {
  ObservationSet s;
  s.categorical_ = true;
  std::sort(indices.begin(), indices.end());
  s.symbols_ = std::move(indices);
  return s;
}

ObservationSet ObservationSet::intervals(std::vector<Interval> parts) {
  ObservationSet s;
  s.categorical_ = false;
  std::sort(parts.begin(), parts.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
  s.intervals_ = std::move(parts);
  return s;
}

bool ObservationSet::contains(Observation x) const {
  if (categorical_) {
    if (!(x >= 0.0) || x != std::floor(x)) return false;
    return std::binary_search(symbols_.begin(), symbols_.end(), static_cast<std::size_t>(x));
  }
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [x](const Interval& iv) { return iv.lo < x && x < iv.hi; });
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

namespace {

double normal_survival(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double interval_mass(const Interval& iv, double mean, double sd) {
  const double lo = (iv.lo - mean) / sd;
  const double hi = (iv.hi - mean) / sd;
  // Subtract in whichever tail keeps both terms small.
  if (lo > 0.0) return normal_survival(lo) - normal_survival(hi);
  return normal_cdf(hi) - normal_cdf(lo);
}

json endpoint(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

}  // namespace

double ObservationSet::mass(const EmissionModel& emission) const {
  double total = 0.0;
  if (categorical_) {
    const auto& probs = emission.categorical_params().probs;
    for (auto i : symbols_) total += probs.at(i);
    return total;
  }
  const auto& g = emission.gaussian_params();
  const double sd = std::sqrt(g.variance);
  for (const auto& iv : intervals_) total += interval_mass(iv, g.mean, sd);
  return total;
}

json ObservationSet::to_json(const TwoStateHmm& model) const {
  if (categorical_) {
    json symbols = json::array();
    const auto& alphabet = model.emission(State::a).categorical_params().alphabet;
    for (auto i : symbols_) symbols.push_back(alphabet.at(i));
    return {{"symbols", symbols}};
  }
  json parts = json::array();
  for (const auto& iv : intervals_) parts.push_back({endpoint(iv.lo), endpoint(iv.hi)});
  return {{"intervals", parts}};
}

std::string ObservationSet::describe(const TwoStateHmm& model) const {
  std::string out;
  if (categorical_) {
    const auto& alphabet = model.emission(State::a).categorical_params().alphabet;
    out = "{";
    for (std::size_t k = 0; k < symbols_.size(); ++k) {
      if (k) out += ", ";
      out += alphabet.at(symbols_[k]);
    }
    return out + "}";
  }
  if (intervals_.empty()) return "{}";
  for (std::size_t k = 0; k < intervals_.size(); ++k) {
    if (k) out += " U ";
    out += "(" + format_real(intervals_[k].lo) + ", " + format_real(intervals_[k].hi) + ")";
  }
  return out;
}

ObservationSet log_ratio_set(const TwoStateHmm& model, State favoured, double threshold) {
  const State against = other(favoured);
  if (model.categorical()) {
    std::vector<std::size_t> members;
    const std::size_t k = model.emission(State::a).categorical_params().probs.size();
    for (std::size_t i = 0; i < k; ++i) {
      const auto x = static_cast<Observation>(i);
      const double lf = model.emission(favoured).log_density(x);
      const double lg = model.emission(against).log_density(x);
      if (lf == kNegInf) continue;
      if (compare_scores(lf, lg + threshold) > 0) members.push_back(i);
    }
    return ObservationSet::symbols(std::move(members));
  }

  // log f_s(x) - log f_t(x) - threshold = A x^2 + B x + C.
  const auto& gs = model.emission(favoured).gaussian_params();
  const auto& gt = model.emission(against).gaussian_params();
  const double A = 1.0 / (2.0 * gt.variance) - 1.0 / (2.0 * gs.variance);
  const double B = gs.mean / gs.variance - gt.mean / gt.variance;
  const double C = 0.5 * std::log(gt.variance / gs.variance) - gs.mean * gs.mean / (2.0 * gs.variance) +
                   gt.mean * gt.mean / (2.0 * gt.variance) - threshold;
  constexpr double inf = std::numeric_limits<double>::infinity();

  if (A == 0.0) {
    if (B == 0.0) return ObservationSet::intervals(C > 0.0 ? std::vector<Interval>{{-inf, inf}}
                                                           : std::vector<Interval>{});
    const double root = -C / B;
    return ObservationSet::intervals({B > 0.0 ? Interval{root, inf} : Interval{-inf, root}});
  }
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) {
    return ObservationSet::intervals(A > 0.0 ? std::vector<Interval>{{-inf, inf}} : std::vector<Interval>{});
  }
  const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
  double r1 = q / A;
  double r2 = q != 0.0 ? C / q : r1;
  if (r1 > r2) std::swap(r1, r2);
  if (A > 0.0) return ObservationSet::intervals({{-inf, r1}, {r2, inf}});
  if (r1 == r2) return ObservationSet::intervals({});
  return ObservationSet::intervals({{r1, r2}});
}

namespace {

// Below this set mass, draws come from the truncated normal directly.
constexpr double kPlainRejectionMass = 0.01;

/// P(a < Z < b) for standard normal Z, taking upper-tail differences on the
/// right so that far-tail intervals keep their relative precision.
double standard_interval_mass(double a, double b) {
  if (a > 0.0) return normal_cdf(-a) - normal_cdf(-b);
  return normal_cdf(b) - normal_cdf(a);
}

/// Standard normal conditioned on (a, b), a < b, either end possibly
/// infinite. Uniform proposals for short intervals, a translated exponential
/// for tails, plain draws when the interval covers most of the mass.
double truncated_standard_normal(double a, double b, Rng& rng) {
  if (b <= 0.0) return -truncated_standard_normal(-b, -a, rng);
  if (a < 0.0) {
    if (b - a >= 2.5) {
      for (;;) {
        const double z = rng.normal();
        if (z > a && z < b) return z;
      }
    }
    for (;;) {
      const double z = a + (b - a) * rng.uniform();
      if (rng.uniform() < std::exp(-0.5 * z * z)) return z;
    }
  }
  // 0 <= a < b: the density is decreasing on the interval.
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  if (b - a < 1.0 / rate) {
    for (;;) {
      const double z = a + (b - a) * rng.uniform();
      if (rng.uniform() < std::exp(0.5 * (a * a - z * z))) return z;
    }
  }
  for (;;) {
    const double z = a - std::log1p(-rng.uniform()) / rate;
    if (z >= b) continue;
    const double d = z - rate;
    if (rng.uniform() < std::exp(-0.5 * d * d)) return z;
  }
}

}  // namespace

Observation sample_in_set(const EmissionModel& emission, const ObservationSet& set, Rng& rng) {
  const double mass = set.mass(emission);
  if (!(mass > 0.0)) throw Error(ErrorCode::BadArgument, "cannot sample from a set with zero mass");
  if (set.categorical()) {
    const auto& probs = emission.categorical_params().probs;
    const double u = rng.uniform() * mass;
    double cumulative = 0.0;
    std::size_t last = set.symbol_indices().front();
    for (auto i : set.symbol_indices()) {
      if (probs[i] <= 0.0) continue;
      last = i;
      cumulative += probs[i];
      if (u < cumulative) return static_cast<Observation>(i);
    }
    return static_cast<Observation>(last);
  }
  if (mass >= kPlainRejectionMass) {
    for (;;) {
      const Observation x = emission.sample(rng);
      if (set.contains(x)) return x;
    }
  }
  const auto& g = emission.gaussian_params();
  const double sd = std::sqrt(g.variance);
  std::vector<double> weights;
  for (const auto& part : set.interval_parts())
    weights.push_back(standard_interval_mass((part.lo - g.mean) / sd, (part.hi - g.mean) / sd));
  double total = 0.0;
  for (double w : weights) total += w;
  const double u = rng.uniform() * total;
  std::size_t pick = 0;
  for (double cumulative = weights[0]; pick + 1 < weights.size() && u >= cumulative;) cumulative += weights[++pick];
  const auto& part = set.interval_parts()[pick];
  for (;;) {
    const double x = g.mean + sd * truncated_standard_normal((part.lo - g.mean) / sd, (part.hi - g.mean) / sd, rng);
    if (set.contains(x)) return x;  // an endpoint draw is rejected; the sets are open
  }
}

}  // namespace twostate
