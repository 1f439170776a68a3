#pragma once

// Test-side fixtures and oracles. The oracles recompute everything from the
// model parameters by enumeration and share no code with the decoders.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "twostate/model.hpp"
#include "twostate/rng.hpp"

namespace twostate::testing {

inline RawModel categorical_raw(TransitionMatrix p, std::vector<double> fa, std::vector<double> fb,
                                std::optional<std::array<double, 2>> initial = std::nullopt) {
  RawModel raw;
  raw.transitions = p;
  raw.initial = initial;
  std::vector<std::string> alphabet;
  for (std::size_t i = 0; i < fa.size(); ++i) alphabet.push_back(std::to_string(i));
  raw.emit_a = EmissionModel::categorical(alphabet, std::move(fa));
  raw.emit_b = EmissionModel::categorical(alphabet, std::move(fb));
  return raw;
}

/// [[0.9,0.1],[0.1,0.9]], f_a = (0.8,0.2), f_b = (0.2,0.8), stationary start.
inline TwoStateHmm case1_example() {
  return validate_model(categorical_raw({{{0.9, 0.1}, {0.1, 0.9}}}, {0.8, 0.2}, {0.2, 0.8}));
}

/// [[0.2,0.8],[0.8,0.2]] with the same emissions.
inline TwoStateHmm case2_example() {
  return validate_model(categorical_raw({{{0.2, 0.8}, {0.8, 0.2}}}, {0.8, 0.2}, {0.2, 0.8}));
}

/// Rows (0.6, 0.4) with the same emissions.
inline TwoStateHmm case3_example() {
  return validate_model(categorical_raw({{{0.6, 0.4}, {0.6, 0.4}}}, {0.8, 0.2}, {0.2, 0.8}));
}

inline TwoStateHmm gaussian_model(TransitionMatrix p, double ma, double va, double mb, double vb) {
  RawModel raw;
  raw.transitions = p;
  raw.emit_a = EmissionModel::gaussian(ma, va);
  raw.emit_b = EmissionModel::gaussian(mb, vb);
  return validate_model(raw);
}

/// Hand-rolled model generator for property tests: covers the three cases,
/// both emission families, zero-probability symbols and explicit starts.
inline TwoStateHmm generate_model(Rng& rng, int case_index, bool categorical) {
  for (;;) {
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
    TransitionMatrix p{};
    if (case_index == 2) {
      const double q = u(0.05, 0.95);
      p = {{{q, 1 - q}, {q, 1 - q}}};
    } else {
      double x = u(0.02, 0.98), y = u(0.02, 0.98);
      if (std::abs(x - y) < 0.01) continue;
      if ((case_index == 0) != (x > y)) std::swap(x, y);
      p = {{{x, 1 - x}, {y, 1 - y}}};
    }
    RawModel raw;
    raw.transitions = p;
    if (rng.uniform() < 0.3) {
      const double q = u(0.01, 0.99);
      raw.initial = std::array<double, 2>{q, 1 - q};
    }
    if (categorical) {
      const std::size_t k = 2 + rng.below(4);
      std::vector<double> fa(k), fb(k);
      double sa = 0, sb = 0;
      for (std::size_t i = 0; i < k; ++i) {
        fa[i] = rng.uniform() < 0.1 ? 0.0 : u(0.01, 1.0);
        fb[i] = rng.uniform() < 0.1 ? 0.0 : u(0.01, 1.0);
        sa += fa[i];
        sb += fb[i];
      }
      if (sa == 0 || sb == 0) continue;
      for (auto& x : fa) x /= sa;
      for (auto& x : fb) x /= sb;
      std::vector<std::string> alphabet;
      for (std::size_t i = 0; i < k; ++i) alphabet.push_back("x" + std::to_string(i));
      raw.emit_a = EmissionModel::categorical(alphabet, fa);
      raw.emit_b = EmissionModel::categorical(alphabet, fb);
    } else {
      const double va = u(0.2, 3.0);
      raw.emit_a = EmissionModel::gaussian(u(-2, 2), va);
      raw.emit_b = EmissionModel::gaussian(u(-2, 2), rng.uniform() < 0.5 ? va : u(0.2, 3.0));
    }
    if (!emissions_distinguishable(raw.emit_a, raw.emit_b)) continue;
    return validate_model(raw);
  }
}

/// Observations drawn from uniformly chosen states: any sequence the model
/// can produce, not only typical ones.
inline std::vector<Observation> generate_observations(const TwoStateHmm& m, std::size_t n, Rng& rng) {
  std::vector<Observation> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(m.emission(rng.uniform() < 0.5 ? State::a : State::b).sample(rng));
  return xs;
}

inline double log_density_oracle(const TwoStateHmm& m, State s, Observation x) {
  const auto& e = m.emission(s);
  if (e.is_categorical()) {
    const auto& probs = e.categorical_params().probs;
    const auto i = static_cast<std::size_t>(x);
    return probs[i] > 0 ? std::log(probs[i]) : -INFINITY;
  }
  const auto& g = e.gaussian_params();
  const double d = x - g.mean;
  return -0.5 * std::log(2 * M_PI * g.variance) - d * d / (2 * g.variance);
}

struct EnumeratedPath {
  std::vector<State> states;
  double log_likelihood = -INFINITY;
  std::size_t maximizers = 0;
};

/// Exhaustive MAP search. Scores within 1e-12 relative of the best count as
/// maximizers; among them the path whose bit pattern (bit i set when position
/// i is b) is numerically smallest wins, i.e. paths compare from the last
/// position backwards with a < b.
inline EnumeratedPath enumerate_map(const TwoStateHmm& m, const std::vector<Observation>& xs,
                                    std::array<double, 2> initial) {
  const std::size_t n = xs.size();
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<double> scores(count);
  double best = -INFINITY;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double s = 0;
    State prev = State::a;
    for (std::size_t i = 0; i < n; ++i) {
      const State cur = (mask >> i) & 1 ? State::b : State::a;
      s += i == 0 ? std::log(initial[idx(cur)]) : std::log(m.p(prev, cur));
      s += log_density_oracle(m, cur, xs[i]);
      prev = cur;
    }
    scores[mask] = s;
    best = std::max(best, s);
  }
  EnumeratedPath out;
  out.log_likelihood = best;
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  std::uint64_t chosen = count;
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    if (best - scores[mask] <= tol) {
      ++out.maximizers;
      if (chosen == count) chosen = mask;
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.states.push_back((chosen >> i) & 1 ? State::b : State::a);
  return out;
}

inline std::string path_string(const std::vector<State>& states) {
  std::string s;
  for (State x : states) s += to_char(x);
  return s;
}

}  // namespace twostate::testing
