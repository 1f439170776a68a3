#pragma once

#include <string>
#include <variant>
#include <vector>

#include "twostate/rng.hpp"

namespace twostate {

/// One observation. Gaussian models observe the real value itself; categorical
/// models observe the symbol's index in the model alphabet.
using Observation = double;

struct CategoricalParams {
  std::vector<std::string> alphabet;
  std::vector<double> probs;
};

struct GaussianParams {
  double mean = 0.0;
  double variance = 1.0;
};

/// Emission density of one hidden state. Densities are with respect to
/// counting measure (categorical) or Lebesgue measure (Gaussian).
class EmissionModel {
 public:
  static EmissionModel categorical(std::vector<std::string> alphabet, std::vector<double> probs);
  static EmissionModel gaussian(double mean, double variance);

  bool is_categorical() const { return std::holds_alternative<CategoricalParams>(params_); }
  bool is_gaussian() const { return std::holds_alternative<GaussianParams>(params_); }
  const CategoricalParams& categorical_params() const { return std::get<CategoricalParams>(params_); }
  const GaussianParams& gaussian_params() const { return std::get<GaussianParams>(params_); }

  /// log f(x); -inf outside the support (and for symbol indices that are not
  /// in the alphabet).
  double log_density(Observation x) const;
  Observation sample(Rng& rng) const;

  /// Invariant violations of this emission on its own (empty when valid).
  std::vector<std::string> problems() const;

 private:
  explicit EmissionModel(std::variant<CategoricalParams, GaussianParams> params);

  std::variant<CategoricalParams, GaussianParams> params_;
  std::vector<double> log_probs_;
  double log_norm_ = 0.0;  // Gaussian: -0.5 * log(2 pi var)
};

/// Whether two emissions differ on a set of positive reference measure.
bool emissions_distinguishable(const EmissionModel& a, const EmissionModel& b);

}  // namespace twostate
