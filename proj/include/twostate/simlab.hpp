#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "twostate/model.hpp"
#include "twostate/rng.hpp"

namespace twostate {

enum class Suite { nodes, barriers, lemma2, case_structure, corollary8, lemma10, growth, stream };

inline constexpr Suite kAllSuites[] = {Suite::nodes,      Suite::barriers, Suite::lemma2, Suite::case_structure,
                                       Suite::corollary8, Suite::lemma10,  Suite::growth, Suite::stream};

std::string_view suite_name(Suite suite);
/// Accepts the names above with '-' or '_'; throws BadPlan otherwise.
Suite parse_suite(std::string_view name);

/// Tunables shared by all suites. Defaults are the documented thresholds.
struct SuiteConfig {
  std::size_t continuations = 200;     // nodes: suffixes per strong node
  std::size_t max_suffix = 50;         // nodes: suffix lengths 1..max_suffix
  std::size_t nodes_per_replica = 10;  // nodes: strong nodes tested per replica
  std::size_t prefixes = 100;          // barriers: prefixes per certificate
  std::size_t max_prefix = 30;         // barriers: prefix lengths 0..max_prefix; lemma10: 1..max_prefix
  std::size_t windows = 100;           // lemma10: embedded windows per replica
  std::size_t stream_continuations = 20;
  std::size_t max_bruteforce_span = 12;  // stream: segments re-solved by enumeration
  double growth_fraction = 0.99;       // growth: replicas whose count grows
  double max_rate_drift = 0.20;        // growth: |rate(n) - rate(n/2)| / rate(n/2)
  double mass_threshold = 0.1;
  std::size_t max_counterexamples = 5;
};

struct ExperimentPlan {
  std::vector<Suite> suites;
  /// Fixed model for every replica; empty draws a fresh model per replica.
  std::optional<TwoStateHmm> model;
  std::size_t replicas = 100;
  /// Sequence length; empty uses the suite's default.
  std::optional<std::size_t> length;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  SuiteConfig config;
};

/// Throws BadPlan for an empty suite list, zero replicas, zero length or
/// zero jobs.
void validate_plan(const ExperimentPlan& plan);

/// Suite default lengths when the plan leaves the length open.
std::size_t default_length(Suite suite);

struct Counterexample {
  std::size_t replica = 0;
  std::uint64_t seed = 0;  // replica seed, mix_seed(plan seed, replica)
  std::size_t time = 0;    // 1-based time index within the replica's sequence
  std::string detail;
  nlohmann::json model;
};

struct CheckResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  std::vector<Counterexample> counterexamples;  // first few failures, by replica
  /// Aggregate checks (statistical or fraction thresholds) judge pass/fail
  /// on the pooled value rather than on per-trial failures.
  std::optional<bool> aggregate_pass;
  nlohmann::json extra = nlohmann::json::object();

  bool passed() const { return aggregate_pass.value_or(failures == 0); }
  double pass_rate() const;
  /// Wilson score interval (95%) for the per-trial pass rate.
  std::pair<double, double> wilson() const;
};

/// Pooled strong-node statistics over every decoded realization of a suite.
struct NodeStats {
  std::size_t observations = 0;
  std::size_t strong_a = 0;
  std::size_t strong_b = 0;
  std::size_t weak = 0;
  std::size_t gaps = 0;
  std::size_t gap_sum = 0;
  std::vector<std::size_t> max_gaps;  // per realization
  std::size_t windows_scanned = 0;
  std::size_t barrier_windows = 0;

  double mean_gap() const { return gaps ? static_cast<double>(gap_sum) / static_cast<double>(gaps) : 0.0; }
  std::size_t max_gap() const;
};

struct SuiteResult {
  Suite suite = Suite::nodes;
  std::size_t replicas = 0;
  std::size_t length = 0;
  std::vector<CheckResult> checks;
  NodeStats stats;

  bool passed() const;
  const CheckResult& check(std::string_view name) const;
  nlohmann::json to_json() const;
};

struct VerificationReport {
  std::uint64_t seed = 0;
  std::vector<SuiteResult> suites;
  bool passed() const;
  nlohmann::json to_json() const;
};

/// Runs every suite of the plan over all replicas. Replicas may run on
/// `plan.jobs` threads; results are folded in replica order, so the report
/// depends only on the plan.
VerificationReport run_suite(const ExperimentPlan& plan);

/// What one replica of one suite observed; folding these in replica order
/// yields the suite result.
struct ReplicaOutcome {
  struct Check {
    std::size_t trials = 0;
    std::size_t failures = 0;
    std::vector<Counterexample> counterexamples;
  };
  std::vector<std::pair<std::string, Check>> checks;
  NodeStats stats;
  nlohmann::json extra = nlohmann::json::object();
};

/// Runs replica `replica` of `suite` alone, exactly as run_suite would.
/// Replaying a reported counterexample uses this with the report's plan.
ReplicaOutcome run_replica(Suite suite, const ExperimentPlan& plan, std::size_t replica);

/// The model a replica of `suite` uses when the plan has no fixed model.
TwoStateHmm replica_model(Suite suite, std::size_t replica, Rng& rng);

/// Model generators for the targeted suites.
TwoStateHmm random_corollary8_model(Rng& rng, bool categorical);
TwoStateHmm random_lemma10_model(Rng& rng, bool categorical);
/// Relabels a <-> b.
TwoStateHmm swap_states(const TwoStateHmm& model);

/// Grid of symmetric-noise Gaussian models: a ~ N(-gap/2, 1), b ~ N(gap/2, ratio),
/// p_aa from stay_a and p_bb from stay_b (stay_a again when stay_b is empty).
struct SweepGrid {
  std::vector<double> stay_a;
  std::vector<double> stay_b;
  std::vector<double> mean_gaps;
  std::vector<double> variance_ratios{1.0};
};

struct SweepPoint {
  double p_aa = 0.0;
  double p_bb = 0.0;
  double mean_gap = 0.0;
  double variance_ratio = 1.0;
  CaseLabel case_label = CaseLabel::case1;
  VerificationReport report;
};

/// One report per grid point, each running the plan's suites on that point's
/// model. Throws BadPlan for an empty grid.
std::vector<SweepPoint> sweep_models(const SweepGrid& grid, const ExperimentPlan& plan);

/// Header: p_aa,p_bb,mean_separation,variance_ratio,case,strong_node_rate,
/// mean_node_gap,max_node_gap,passed. Node statistics are pooled over the
/// suites of each point.
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

TwoStateHmm sweep_model(double p_aa, double p_bb, double mean_gap, double variance_ratio);

}  // namespace twostate
