#include "twostate/emission.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "twostate/logmath.hpp"

namespace twostate {

namespace {
constexpr double kSumTolerance = 1e-9;
}

EmissionModel::EmissionModel(std::variant<CategoricalParams, GaussianParams> params)
    : params_(std::move(params)) {
  if (const auto* c = std::get_if<CategoricalParams>(&params_)) {
    log_probs_.reserve(c->probs.size());
    for (double p : c->probs) log_probs_.push_back(safe_log(p));
  } else {
    const auto& g = std::get<GaussianParams>(params_);
    log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi * g.variance);
  }
}

EmissionModel EmissionModel::categorical(std::vector<std::string> alphabet,
                                         std::vector<double> probs) {
  return EmissionModel(CategoricalParams{std::move(alphabet), std::move(probs)});
}

EmissionModel EmissionModel::gaussian(double mean, double variance) {
  return EmissionModel(GaussianParams{mean, variance});
}

double EmissionModel::log_density(Observation x) const {
  if (is_categorical()) {
    if (!(x >= 0.0) || x != std::floor(x)) return kNegInf;
    const auto i = static_cast<std::size_t>(x);
    return i < log_probs_.size() ? log_probs_[i] : kNegInf;
  }
  const auto& g = std::get<GaussianParams>(params_);
  const double d = x - g.mean;
  return log_norm_ - d * d / (2.0 * g.variance);
}

Observation EmissionModel::sample(Rng& rng) const {
  if (const auto* c = std::get_if<CategoricalParams>(&params_)) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < c->probs.size(); ++i) {
      if (c->probs[i] <= 0.0) continue;
      last_positive = i;
      cumulative += c->probs[i];
      if (u < cumulative) return static_cast<Observation>(i);
    }
    // Probabilities summing to 1 - 1e-16 can leave u above the running total.
    return static_cast<Observation>(last_positive);
  }
  const auto& g = std::get<GaussianParams>(params_);
  return g.mean + std::sqrt(g.variance) * rng.normal();
}

std::vector<std::string> EmissionModel::problems() const {
  std::vector<std::string> out;
  if (const auto* c = std::get_if<CategoricalParams>(&params_)) {
    if (c->alphabet.empty()) out.emplace_back("categorical alphabet is empty");
    if (std::set<std::string>(c->alphabet.begin(), c->alphabet.end()).size() != c->alphabet.size())
      out.emplace_back("categorical alphabet has duplicate symbols");
    if (c->probs.size() != c->alphabet.size())
      out.emplace_back("categorical probs length does not match alphabet");
    bool negative = false;
    for (double p : c->probs) negative = negative || !(p >= 0.0) || !std::isfinite(p);
    if (negative) out.emplace_back("categorical probs must be finite and nonnegative");
    const double sum = std::accumulate(c->probs.begin(), c->probs.end(), 0.0);
    if (std::abs(sum - 1.0) > kSumTolerance) out.emplace_back("categorical probs must sum to 1");
  } else {
    const auto& g = std::get<GaussianParams>(params_);
    if (!std::isfinite(g.mean)) out.emplace_back("gaussian mean must be finite");
    if (!(g.variance > 0.0) || !std::isfinite(g.variance))
      out.emplace_back("gaussian variance must be positive");
  }
  return out;
}

bool emissions_distinguishable(const EmissionModel& a, const EmissionModel& b) {
  if (a.is_categorical() != b.is_categorical()) return true;
  if (a.is_gaussian()) {
    const auto& ga = a.gaussian_params();
    const auto& gb = b.gaussian_params();
    return ga.mean != gb.mean || ga.variance != gb.variance;
  }
  const auto& pa = a.categorical_params().probs;
  const auto& pb = b.categorical_params().probs;
  if (pa.size() != pb.size()) return true;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (std::abs(pa[i] - pb[i]) > kTieTolerance) return true;
  }
  return false;
}

}  // namespace twostate
