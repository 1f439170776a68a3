// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Every tolerance, count and time budget is a named constant below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "support.hpp"
#include "twostate/barrier.hpp"
#include "twostate/cli.hpp"
#include "twostate/conditions.hpp"
#include "twostate/sampling.hpp"
#include "twostate/simlab.hpp"
#include "twostate/stream.hpp"
#include "twostate/viterbi.hpp"

using namespace twostate;
using namespace twostate::testing;
namespace fs = std::filesystem;

namespace {

// 1: batch vs exhaustive enumeration
constexpr std::size_t kOracleModels = 600;
constexpr std::size_t kOracleMaxLength = 12;
constexpr double kLikelihoodRelTol = 1e-9;
constexpr double kBudget1 = 60.0;

// 2: strong-node future invariance
constexpr std::size_t kMinStrongNodes = 1000;
constexpr std::size_t kContinuations = 200;
constexpr std::size_t kNodeReplicas = 110;
constexpr double kBudget2 = 300.0;

// 3: barrier soundness over a sweep
constexpr std::size_t kSweepPoints = 30;
constexpr std::size_t kBarrierPrefixes = 100;
constexpr std::size_t kBarrierReplicas = 2;
constexpr double kWorkedEpsilon = 0.5;
constexpr double kBudget3 = 120.0;

// 4: some state dominates
constexpr std::size_t kDominanceModels = 1000;
constexpr double kBudget4 = 10.0;

// 5: case structure on long runs
constexpr std::size_t kLongLength = 100000;
constexpr std::size_t kCaseReplicas = 30;
constexpr double kBudget5 = 60.0;

// 6: b-node windows and the no-b-stay regime
constexpr std::size_t kWindowReplicas = 100;
constexpr std::size_t kWindowsPerReplica = 100;
constexpr std::size_t kNoStayReplicas = 20;
constexpr double kBudget6 = 120.0;

// 7: streaming
constexpr std::size_t kStreamReplicas = 100;
constexpr std::size_t kStreamLength = 10000;
constexpr std::size_t kStreamContinuations = 20;
constexpr std::size_t kThroughputLength = 1000000;
constexpr double kThroughputBudget = 10.0;
constexpr std::size_t kPeakBufferCeiling = 1000;
// The first green run observed a peak buffer of 15 (seed 2024); pinned at 2x.
constexpr std::size_t kPeakBufferPinned = 30;
constexpr double kBudget7 = 120.0;

// 8: node counts keep growing
constexpr std::size_t kGrowthReplicas = 200;
constexpr double kGrowthFraction = 0.99;
constexpr double kMaxRateDrift = 0.20;
constexpr double kBudget8 = 120.0;

// 9: CLI determinism
constexpr double kBudget9 = 60.0;

constexpr std::uint64_t kSeed = 2024;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string failing_checks(const VerificationReport& report) {
  std::string s;
  for (const auto& suite : report.suites)
    for (const auto& c : suite.checks)
      if (!c.passed()) s += " " + std::string(suite_name(suite.suite)) + "/" + c.name;
  return s;
}

Outcome batch_vs_oracle() {
  Rng rng(kSeed);
  std::size_t mismatches = 0, ties = 0, gaussian = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < kOracleModels; ++i) {
    const bool categorical = (i / 3) % 2 == 0;
    gaussian += categorical ? 0 : 1;
    const auto m = generate_model(rng, static_cast<int>(i % 3), categorical);
    const auto xs = generate_observations(m, 1 + rng.below(kOracleMaxLength), rng);
    const auto dp = decode_batch(m, xs);
    const auto bf = decode_brute_force(m, xs);
    const auto oracle = enumerate_map(m, xs, m.initial());
    ties += oracle.maximizers > 1 ? 1 : 0;
    const double rel = std::abs(dp.log_likelihood - bf.log_likelihood) /
                       std::max(1.0, std::max(std::abs(dp.log_likelihood), std::abs(bf.log_likelihood)));
    worst = std::max(worst, rel);
    if (dp.states != bf.states || dp.states != oracle.states || rel > kLikelihoodRelTol ||
        !close_relative(dp.log_likelihood, oracle.log_likelihood, kLikelihoodRelTol))
      ++mismatches;
  }
  Outcome o;
  o.pass = mismatches == 0 && gaussian > 0 && gaussian < kOracleModels;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", worst);
  o.detail = std::to_string(kOracleModels) + " models, " + std::to_string(mismatches) + " mismatches, " +
             std::to_string(ties) + " tied optima, worst loglik rel diff " + buf;
  return o;
}

Outcome future_invariance() {
  ExperimentPlan plan;
  plan.suites = {Suite::nodes};
  plan.replicas = kNodeReplicas;
  plan.seed = kSeed;
  plan.config.continuations = kContinuations;
  const auto report = run_suite(plan);
  const auto& c = report.suites[0].check("future_invariance");
  const std::size_t nodes = c.trials / kContinuations;
  Outcome o;
  o.pass = report.passed() && nodes >= kMinStrongNodes && c.failures == 0;
  o.detail = std::to_string(nodes) + " strong nodes x " + std::to_string(kContinuations) + " continuations, " +
             std::to_string(c.failures) + " failures" + failing_checks(report);
  return o;
}

Outcome barrier_soundness() {
  Outcome o;
  const auto k1 = build_barrier_certificate(case1_example(), {0.1, kWorkedEpsilon});
  const auto k2 = build_barrier_certificate(case2_example(), {0.1, kWorkedEpsilon});
  const bool constants = k1.k == 7 && k1.length == 8 && k2.k == 3 && k2.length == 7;

  SweepGrid grid;
  grid.stay_a = {0.1, 0.3, 0.5, 0.7, 0.9};
  grid.mean_gaps = {0.5, 1.0, 2.0};
  grid.variance_ratios = {1.0, 2.0};
  ExperimentPlan plan;
  plan.suites = {Suite::barriers};
  plan.replicas = kBarrierReplicas;
  plan.seed = kSeed;
  plan.config.prefixes = kBarrierPrefixes;
  const auto points = sweep_models(grid, plan);
  std::size_t failed = 0, windows = 0;
  for (const auto& p : points) {
    failed += p.report.passed() ? 0 : 1;
    windows += p.report.suites[0].check("window_contains_strong_node").trials;
  }
  o.pass = constants && points.size() == kSweepPoints && failed == 0 &&
           windows >= kSweepPoints * kBarrierPrefixes;
  o.detail = "worked constants k=" + std::to_string(k1.k) + "/len " + std::to_string(k1.length) + ", k=" +
             std::to_string(k2.k) + "/len " + std::to_string(k2.length) + "; " + std::to_string(points.size()) +
             " sweep points, " + std::to_string(windows) + " windows, " + std::to_string(failed) + " failing points";
  return o;
}

/// Grid search for a point where the dominance inequality holds with a
/// positive-density state on the left; an open set around it has positive mass.
bool dominance_oracle(const TwoStateHmm& m, State s) {
  const State t = other(s);
  const double lhs_p = std::max(m.p(s, s), m.p(t, s));
  const double rhs_p = std::max(m.p(t, t), m.p(s, t));
  auto holds_at = [&](Observation x) {
    const double l = log_density_oracle(m, s, x) + std::log(lhs_p);
    const double r = log_density_oracle(m, t, x) + std::log(rhs_p);
    return std::isfinite(l) && (r == -INFINITY || l - r > 1e-9);
  };
  if (m.emission(s).is_categorical()) {
    const std::size_t k = m.emission(s).categorical_params().probs.size();
    for (std::size_t x = 0; x < k; ++x)
      if (holds_at(static_cast<Observation>(x))) return true;
    return false;
  }
  for (double x = -60.0; x <= 60.0; x += 0.01)
    if (holds_at(x)) return true;
  return false;
}

Outcome some_state_dominates() {
  ExperimentPlan plan;
  plan.suites = {Suite::lemma2};
  plan.replicas = kDominanceModels;
  plan.seed = kSeed;
  const auto report = run_suite(plan);

  Rng rng(kSeed + 1);
  std::size_t oracle_failures = 0, disagreements = 0;
  for (std::size_t i = 0; i < kDominanceModels; ++i) {
    const auto m = generate_model(rng, static_cast<int>(i % 3), i % 2 == 0);
    const bool ab = dominance_oracle(m, State::a), ba = dominance_oracle(m, State::b);
    oracle_failures += ab || ba ? 0 : 1;
    const auto c = check_conditions(m);
    // The grid can only under-report for Gaussian emissions.
    if (ab && !c.holds("a_dominant")) ++disagreements;
    if (ba && !c.holds("b_dominant")) ++disagreements;
    if (m.emission(State::a).is_categorical() &&
        (ab != c.holds("a_dominant") || ba != c.holds("b_dominant")))
      ++disagreements;
  }
  Outcome o;
  o.pass = report.passed() && oracle_failures == 0 && disagreements == 0;
  o.detail = "suite " + std::to_string(report.suites[0].check("some_state_dominates").trials) +
             " models; independent oracle " + std::to_string(kDominanceModels) + " models, " +
             std::to_string(oracle_failures) + " without dominance, " + std::to_string(disagreements) +
             " disagreements";
  return o;
}

Outcome case_structure() {
  ExperimentPlan plan;
  plan.suites = {Suite::case_structure};
  plan.replicas = kCaseReplicas;
  plan.length = kLongLength;
  plan.seed = kSeed;
  const auto report = run_suite(plan);
  Outcome o;
  o.pass = report.passed();
  std::string counts;
  for (const auto& c : report.suites[0].checks)
    counts += " " + c.name + "=" + std::to_string(c.trials - c.failures) + "/" + std::to_string(c.trials);
  o.detail = std::to_string(kCaseReplicas) + " runs of length " + std::to_string(kLongLength) + ":" + counts;
  return o;
}

Outcome windows_and_no_stay() {
  ExperimentPlan windows;
  windows.suites = {Suite::lemma10};
  windows.replicas = kWindowReplicas;
  windows.seed = kSeed;
  windows.config.windows = kWindowsPerReplica;
  const auto w = run_suite(windows);

  ExperimentPlan no_stay;
  no_stay.suites = {Suite::corollary8};
  no_stay.replicas = kNoStayReplicas;
  no_stay.length = kLongLength;
  no_stay.seed = kSeed;
  const auto c = run_suite(no_stay);

  std::size_t window_trials = w.suites[0].check("b_node_then_strong_a").trials;
  std::size_t failures = 0;
  for (const auto& r : {w, c})
    for (const auto& x : r.suites[0].checks) failures += x.failures;
  Outcome o;
  o.pass = w.passed() && c.passed() && window_trials >= kWindowReplicas * kWindowsPerReplica;
  o.detail = std::to_string(window_trials) + " embedded windows, " + std::to_string(kNoStayReplicas) +
             " runs of length " + std::to_string(kLongLength) + ", " + std::to_string(failures) + " counterexamples" +
             failing_checks(w) + failing_checks(c);
  return o;
}

Outcome streaming() {
  ExperimentPlan plan;
  plan.suites = {Suite::stream};
  plan.replicas = kStreamReplicas;
  plan.length = kStreamLength;
  plan.seed = kSeed;
  plan.config.stream_continuations = kStreamContinuations;
  const auto report = run_suite(plan);

  const auto model = sweep_model(0.9, 0.9, 2.0, 1.0);
  Rng rng(kSeed);
  const auto real = sample_realization(model, kThroughputLength, rng);
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t next = 0, emitted = 0;
  const auto stats = run_stream(
      model,
      [&]() -> std::optional<Observation> {
        if (next == real.observations.size()) return std::nullopt;
        return real.observations[next++];
      },
      [&](const Segment& s) { emitted += s.states.size(); });
  const double elapsed = seconds_since(t0);

  Outcome o;
  o.pass = report.passed() && elapsed < kThroughputBudget && stats.peak_buffer < kPeakBufferCeiling &&
           stats.peak_buffer <= kPeakBufferPinned && emitted == kThroughputLength &&
           stats.peak_buffer == stats.max_gap + 1;
  char buf[160];
  std::snprintf(buf, sizeof buf, "; 1e6 throughput %.2f s, peak buffer %zu (pinned %zu), max gap %zu", elapsed,
                stats.peak_buffer, kPeakBufferPinned, stats.max_gap);
  o.detail = std::to_string(kStreamReplicas) + " models x " + std::to_string(kStreamLength) + " equivalent" +
             failing_checks(report) + buf;
  return o;
}

Outcome growth() {
  Outcome o;
  const std::pair<const char*, TwoStateHmm> models[] = {
      {"case1", case1_example()}, {"case2", case2_example()}, {"case3", case3_example()}};
  for (const auto& [name, model] : models) {
    ExperimentPlan plan;
    plan.suites = {Suite::growth};
    plan.replicas = kGrowthReplicas;
    plan.model = model;
    plan.seed = kSeed;
    plan.config.growth_fraction = kGrowthFraction;
    plan.config.max_rate_drift = kMaxRateDrift;
    const auto report = run_suite(plan);
    const auto& grows = report.suites[0].check("count_grows");
    const auto& stable = report.suites[0].check("rate_stable");
    o.pass = o.pass && report.passed();
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s%s grows %zu/%zu drift %s", o.detail.empty() ? "" : "; ", name,
                  grows.trials - grows.failures, grows.trials, stable.extra.dump().c_str());
    o.detail += buf;
  }
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_determinism() {
  const fs::path golden = GOLDEN_DIR;
  const fs::path dir = fs::temp_directory_path() / "twostate_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto g = [&](const char* name) { return (golden / name).string(); };
  auto d = [&](const std::string& name) { return (dir / name).string(); };

  std::size_t compared = 0, differing = 0;
  auto same = [&](const std::string& a, const std::string& b) {
    ++compared;
    if (a != b) ++differing;
  };
  int codes = 0;
  std::ostringstream sink;
  for (int run = 0; run < 2; ++run) {
    const std::string r = std::to_string(run);
    codes |= run_cli({"simulate", "--model", g("case1.json"), "--length", "300", "--seed", "42", "--obs",
                      d("sim" + r + ".txt"), "--states", d("states" + r + ".txt")},
                     sink, sink);
    codes |= run_cli({"simulate", "--model", g("gauss.json"), "--length", "200", "--seed", "9", "--obs",
                      d("gsim" + r + ".txt")},
                     sink, sink);
    codes |= run_cli({"stream", "--model", g("case1.json"), "--obs", d("sim" + r + ".txt"), "--out",
                      d("stream" + r + ".csv"), "--stats", d("stats" + r + ".json")},
                     sink, sink);
    codes |= run_cli({"stream", "--model", g("gauss.json"), "--obs", d("gsim" + r + ".txt"), "--out",
                      d("gstream" + r + ".csv"), "--stats", d("gstats" + r + ".json")},
                     sink, sink);
    codes |= run_cli({"verify", "--suite", "lemma2", "--suite", "case-structure", "--suite", "stream", "--replicas",
                      "4", "--length", "400", "--seed", "7", "--jobs", run == 0 ? "1" : "2", "--report",
                      d("verify" + r + ".json")},
                     sink, sink);
  }
  const std::pair<std::string, const char*> files[] = {
      {"sim", "simulate_case1.txt"},   {"states", "simulate_case1_states.txt"},
      {"gsim", "simulate_gauss.txt"},  {"stream", "stream_case1.csv"},
      {"stats", "stream_case1_stats.json"}, {"gstream", "stream_gauss.csv"},
      {"gstats", "stream_gauss_stats.json"}, {"verify", "verify_small.json"}};
  for (const auto& [stem, gold] : files) {
    const std::string ext = fs::path(gold).extension().string();
    const auto first = slurp(dir / (stem + "0" + ext));
    same(first, slurp(dir / (stem + "1" + ext)));
    same(first, slurp(golden / gold));
  }
  fs::remove_all(dir);
  Outcome o;
  o.pass = codes == 0 && differing == 0 && compared == 16;
  o.detail = std::to_string(compared) + " byte comparisons (two runs and golden files), " +
             std::to_string(differing) + " differ";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "batch-vs-oracle", kBudget1, batch_vs_oracle},
      {2, "strong-node-future-invariance", kBudget2, future_invariance},
      {3, "barrier-soundness", kBudget3, barrier_soundness},
      {4, "some-state-dominates", kBudget4, some_state_dominates},
      {5, "case-structure", kBudget5, case_structure},
      {6, "b-node-windows-and-no-b-stay", kBudget6, windows_and_no_stay},
      {7, "streaming-equivalence-and-memory", kBudget7, streaming},
      {8, "node-count-growth", kBudget8, growth},
      {9, "cli-determinism", kBudget9, cli_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = seconds_since(t0);
    const bool pass = o.pass && elapsed <= c.budget;
    failures += pass ? 0 : 1;
    std::printf("%s criterion %d %s: %s [%.1f s, budget %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), elapsed, c.budget);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
